//! Dense complex matrix primitives: factorizations, Hermitian spectral calculus,
//! principal log-determinants and the Siegel-ball predicate.

mod cmat;
mod eig;
mod lu;

pub use cmat::{dotc, dotu, vadd, vconj, vnorm, vscale, vsub, CMat, CVec};
pub use eig::{herm_eig, orthonormalize, HermEig};
pub use lu::Lu;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `V f(diag λ) V*`. Any non-finite value of `f` on the spectrum is a `DomainViolation`.
pub fn herm_func<T: Real>(h: &CMat<T>, f: impl Fn(T) -> T) -> Result<CMat<T>> {
    let e = herm_eig(h, T::default_tol())?;
    if let Some(&bad) = e.evals.iter().find(|&&l| !f(l).is_finite()) {
        return Err(Error::DomainViolation(format!(
            "eigenvalue {bad} outside the function's domain"
        )));
    }
    Ok(e.apply(f))
}

/// Square root of a positive semidefinite matrix; roundoff-negative eigenvalues are clamped.
pub fn sqrt_psd<T: Real>(h: &CMat<T>) -> Result<CMat<T>> {
    herm_func(h, |x| x.max(T::zero()).sqrt())
}

/// Inverse square root of a positive definite matrix.
pub fn inv_sqrt_psd<T: Real>(h: &CMat<T>) -> Result<CMat<T>> {
    herm_func(h, |x| {
        if x > T::zero() {
            x.sqrt().recip()
        } else {
            T::nan()
        }
    })
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> Result<T> {
    let e = herm_eig(&(m * &m.adjoint()), T::default_tol())?;
    Ok(e.max_eval().max(T::zero()).sqrt())
}

// Even functions of √x that stay smooth at 0. Each takes x = s² ≥ 0.

fn small<T: Real>(x: T) -> bool {
    x.abs() < T::lit(1e-6)
}

/// `sinh(s)/s` with `x = s²`.
pub fn sinhc_sq<T: Real>(x: T) -> T {
    if small(x) {
        T::one() + x / T::lit(6.0) + x * x / T::lit(120.0)
    } else {
        let s = x.sqrt();
        s.sinh() / s
    }
}

/// `tanh(s)/s` with `x = s²`.
pub fn tanhc_sq<T: Real>(x: T) -> T {
    if small(x) {
        T::one() - x / T::lit(3.0) + T::lit(2.0) * x * x / T::lit(15.0)
    } else {
        let s = x.sqrt();
        s.tanh() / s
    }
}

/// `arctanh(s)/s` with `x = s²`; infinite at `s ≥ 1`.
pub fn arctanhc_sq<T: Real>(x: T) -> T {
    if small(x) {
        T::one() + x / T::lit(3.0) + x * x / T::lit(5.0)
    } else if x >= T::one() {
        T::nan()
    } else {
        let s = x.sqrt();
        s.atanh() / s
    }
}

/// `m = cosh√(ZZ̄)`, `n = sinhc(√(ZZ̄))·Z`.
pub fn cartan_blocks<T: Real>(z: &CMat<T>) -> Result<(CMat<T>, CMat<T>)> {
    check_symmetric(z)?;
    let zz = z * &z.adjoint();
    let e = herm_eig(&zz, T::default_tol())?;
    let m = e.apply(|x| x.max(T::zero()).sqrt().cosh());
    let n = &e.apply(|x| sinhc_sq(x.max(T::zero()))) * z;
    Ok((m, n))
}

/// The other ordering `Z·sinhc(√(Z̄Z))` of the off-diagonal Cartan block.
pub fn cartan_offdiag_right<T: Real>(z: &CMat<T>) -> Result<CMat<T>> {
    check_symmetric(z)?;
    let zbz = &z.conj() * z;
    Ok(z * &herm_func(&zbz, |x| sinhc_sq(x.max(T::zero())))?)
}

pub(crate) fn check_symmetric<T: Real>(z: &CMat<T>) -> Result<()> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch("expected a square matrix".into()));
    }
    let r = z.asymmetry();
    if r > T::default_tol() * (T::one() + z.norm_fro()) {
        return Err(Error::NotSymmetric {
            residual: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Principal logarithm of `det M`, built from the LU pivots.
///
/// Each pivot contributes its principal log and every row swap adds `iπ`; the imaginary
/// part is then wrapped into `(−π, π]`.
pub fn principal_logdet<T: Real>(m: &CMat<T>) -> Result<Complex<T>> {
    let lu = m.lu()?;
    let mut acc: Complex<T> = lu.pivots().iter().map(|p| p.ln()).fold(Complex::zero(), |a, b| a + b);
    acc.im += T::PI() * T::from_usize(lu.swaps()).unwrap();
    let two_pi = T::TAU();
    let mut im = acc.im % two_pi;
    if im > T::PI() {
        im -= two_pi;
    } else if im <= -T::PI() {
        im += two_pi;
    }
    acc.im = im;
    Ok(acc)
}

/// `det(M)^s` on the principal branch.
pub fn detpow<T: Real>(m: &CMat<T>, s: T) -> Result<Complex<T>> {
    Ok((principal_logdet(m)? * s).exp())
}

/// `W = Wᵗ` and `1 − WW* ≻ tol`.
pub fn is_siegel<T: Real>(w: &CMat<T>, tol: T) -> bool {
    if !w.is_square() || w.asymmetry() > tol {
        return false;
    }
    let gap = &CMat::identity(w.rows()) - &(w * &w.adjoint());
    match herm_eig(&gap, T::default_tol()) {
        Ok(e) => e.min_eval() > tol,
        Err(_) => false,
    }
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm<T: Real>(a: &CMat<T>) -> CMat<T> {
    let n = a.rows();
    let nrm = a.norm_fro();
    let mut s = 0i32;
    if nrm > T::lit(0.5) {
        s = (nrm / T::lit(0.5)).log2().ceil().to_i32().unwrap_or(0).max(0);
    }
    let scaled = a.scale_re(T::lit(2.0).powi(-s));
    let mut out = CMat::identity(n);
    let mut term = CMat::identity(n);
    for j in 1..=30 {
        term = (&term * &scaled).scale_re(T::from_usize(j).unwrap().recip());
        out += &term;
        if term.norm_fro() <= T::epsilon() * out.norm_fro() {
            break;
        }
    }
    for _ in 0..s {
        out = &out * &out;
    }
    out
}

/// Frobenius distance to the identity.
pub fn dist_identity<T: Real>(m: &CMat<T>) -> T {
    (m - &CMat::identity(m.rows())).norm_fro()
}

/// `Complex::new(x, 0)`.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = CMat<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> M {
        M::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_herm(n: usize, rng: &mut ChaCha8Rng) -> M {
        random(n, rng).hermitian_part()
    }

    fn random_psd(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> M {
        let a = random(n, rng);
        let h = &a * &a.adjoint();
        let top = herm_eig(&h, 1e-12).unwrap().max_eval();
        h.scale_re(radius / top)
    }

    #[test]
    fn eig_trivial() {
        let e = herm_eig(&M::zeros(2, 2), 1e-12).unwrap();
        assert_eq!(e.evals, vec![0.0, 0.0]);
        assert_eq!(e.evecs, M::identity(2));
        let e = herm_eig(&M::from_real_diag(&[4.0, 1.0]), 1e-12).unwrap();
        assert_eq!(e.evals, vec![1.0, 4.0]);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = M::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(herm_eig(&m, 1e-10), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn eig_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=5 {
            let h = random_herm(n, &mut rng);
            let e = herm_eig(&h, 1e-12).unwrap();
            assert!((&e.reconstruct() - &h).norm_fro() <= 1e-12 * (1.0 + h.norm_fro()));
            assert!(dist_identity(&(&e.evecs.adjoint() * &e.evecs)) < 1e-12);
            assert!(e.evals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn herm_func_examples() {
        let r = herm_func(&M::from_real_diag(&[4.0, 9.0]), f64::sqrt).unwrap();
        assert!((&r - &M::from_real_diag(&[2.0, 3.0])).norm_fro() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_psd(3, 0.5, &mut rng);
        assert!((&herm_func(&h, |x| x).unwrap() - &h).norm_fro() < 1e-14);
        let at = herm_func(&h, f64::atanh).unwrap();
        let back = herm_func(&at, f64::tanh).unwrap();
        assert!((&back - &h).norm_fro() < 1e-12);
    }

    #[test]
    fn herm_func_domain() {
        let h = M::from_real_diag(&[0.2, 1.0]);
        assert!(matches!(herm_func(&h, f64::atanh), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn cartan_blocks_scalar_and_zero() {
        let (m, n) = cartan_blocks(&M::zeros(2, 2)).unwrap();
        assert_eq!(m, M::identity(2));
        assert_eq!(n, M::zeros(2, 2));
        let (m, n) = cartan_blocks(&M::scalar(c(0.3, 0.0))).unwrap();
        assert!((m[(0, 0)] - c(0.3f64.cosh(), 0.0)).norm() < 1e-15);
        assert!((n[(0, 0)] - c(0.3f64.sinh(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cartan_orderings_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let z = random(2, &mut rng).symmetrized();
            let (m, n) = cartan_blocks(&z).unwrap();
            let n2 = cartan_offdiag_right(&z).unwrap();
            assert!((&n - &n2).norm_fro() < 1e-12);
            let id = &(&m * &m.adjoint()) - &(&n * &n.adjoint());
            assert!(dist_identity(&id) < 1e-10);
        }
    }

    #[test]
    fn cartan_requires_symmetry() {
        let z = M::from_rows(&[vec![c(0.0, 0.0), c(0.1, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(matches!(cartan_blocks(&z), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(principal_logdet(&M::identity(3)).unwrap(), c(0.0, 0.0));
        let e = std::f64::consts::E;
        let v = principal_logdet(&M::from_real_diag(&[e, e])).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = &M::identity(3) + &random(3, &mut rng).scale_re(0.2);
            let r = principal_logdet(&m).unwrap().exp() / m.det().unwrap();
            assert!((r - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert_eq!(principal_logdet(&M::zeros(2, 2)), Err(Error::Singular));
    }

    #[test]
    fn logdet_with_pivoting() {
        let m = M::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        let l = principal_logdet(&m).unwrap();
        assert!((l.exp() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(l.im > 0.0);
    }

    #[test]
    fn detpow_examples() {
        assert_eq!(detpow(&M::identity(2), 0.37).unwrap(), c(1.0, 0.0));
        let v = detpow(&M::scalar(c(0.25, 0.0)), -0.5).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-15);
        let v = detpow(&M::scalar(c(1.0 - 0.36, 0.0)), -2.0).unwrap();
        assert!((v - c(2.44140625, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn siegel_predicate() {
        assert!(is_siegel(&M::zeros(2, 2), 1e-12));
        assert!(!is_siegel(&M::scalar(c(1.0, 0.0)), 1e-12));
        let w = M::from_diag(&[c(0.5, 0.0), c(0.5, 0.1)]).symmetrized();
        assert!(is_siegel(&w, 1e-12));
        let asym = M::from_rows(&[vec![c(0.0, 0.0), c(0.1, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(!is_siegel(&asym, 1e-12));
    }

    #[test]
    fn expm_matches_diagonal_and_inverse() {
        let d = M::from_diag(&[c(0.3, 1.0), c(-2.0, 0.5)]);
        let e = expm(&d);
        assert!((e[(0, 0)] - c(0.3, 1.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-2.0, 0.5).exp()).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(4, &mut rng).scale_re(3.0);
        assert!(dist_identity(&(&expm(&a) * &expm(&-&a))) < 1e-11);
    }

    #[test]
    fn f32_path() {
        let h = CMat::<f32>::from_real_diag(&[4.0, 9.0]);
        let r = sqrt_psd(&h).unwrap();
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-5);
        assert!(is_siegel(&CMat::<f32>::scalar(Complex::new(0.5, 0.0)), 1e-4));
    }

    #[test]
    fn serde_wire_format() {
        let m = M::from_rows(&[vec![c(1.0, 2.0), c(3.0, 0.0)]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"re":[1.0,3.0],"im":[2.0,0.0]}"#);
        let back: M = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<M>(r#"{"rows":2,"cols":2,"re":[1.0],"im":[0.0]}"#).is_err());
    }

    fn herm_strategy(n: usize) -> impl Strategy<Value = M> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| M::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
    }

    proptest! {
        #[test]
        fn herm_func_composes(a in herm_strategy(3)) {
            let h = &a * &a.adjoint();
            let lhs = herm_func(&h, |x| x.max(0.0).sqrt().exp()).unwrap();
            let rhs = herm_func(&sqrt_psd(&h).unwrap(), f64::exp).unwrap();
            prop_assert!((&lhs - &rhs).norm_fro() <= 1e-11 * (1.0 + lhs.norm_fro()));
        }

        #[test]
        fn cartan_blocks_are_symplectic(a in herm_strategy(3)) {
            let z = a.symmetrized();
            let (m, n) = cartan_blocks(&z).unwrap();
            let id = &(&m * &m.adjoint()) - &(&n * &n.adjoint());
            prop_assert!(dist_identity(&id) < 1e-10);
        }

        #[test]
        fn detpow_is_additive(a in herm_strategy(3), s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
            let m = &M::identity(3) + &a.scale_re(0.3);
            let lhs = detpow(&m, s1 + s2).unwrap();
            let rhs = detpow(&m, s1).unwrap() * detpow(&m, s2).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
        }
    }
}
