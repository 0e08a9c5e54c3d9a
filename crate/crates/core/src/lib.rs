//! Holomorphic representation of the Jacobi group `G^J_n = H_n ⋊ Sp(n, ℝ)`.

pub mod diffops;
pub mod error;
pub mod fd;
pub mod fockoracle;
pub mod gj1;
pub mod jacobi;
pub mod matfun;
pub mod scalar;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CMatF64 = matfun::CMat<f64>;
pub type CMatF32 = matfun::CMat<f32>;
pub type SpElementF64 = symplectic::SpElement<f64>;
pub type SiegelPointF64 = symplectic::SiegelPoint<f64>;
pub type CSPointF64 = jacobi::CSPoint<f64>;
pub type CSPointF32 = jacobi::CSPoint<f32>;
pub type JacobiElementF64 = jacobi::JacobiElement<f64>;
pub type JacobiElementF32 = jacobi::JacobiElement<f32>;
pub type UpperHalfPointF64 = gj1::UpperHalfPoint<f64>;
/// Exact coefficients for the differential-operator realization.
pub type RationalPoly = diffops::MPoly<diffops::GaussRational>;
pub type RationalDiffOp = diffops::PolyDiffOp<diffops::GaussRational>;
