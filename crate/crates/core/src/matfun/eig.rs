use num_complex::Complex;
use num_traits::Zero;

use super::cmat::CMat;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `H = V diag(λ) V*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermEig<T> {
    pub evals: Vec<T>,
    pub evecs: CMat<T>,
}

impl<T: Real> HermEig<T> {
    pub fn reconstruct(&self) -> CMat<T> {
        self.apply(|x| x)
    }

    /// `V f(diag λ) V*`.
    pub fn apply(&self, f: impl Fn(T) -> T) -> CMat<T> {
        let v = &self.evecs;
        let n = v.rows();
        let fl: Vec<T> = self.evals.iter().map(|&l| f(l)).collect();
        CMat::from_fn(n, n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| {
                acc + v[(i, k)] * v[(j, k)].conj() * fl[k]
            })
        })
    }

    pub fn min_eval(&self) -> T {
        self.evals.first().copied().unwrap_or_else(T::infinity)
    }

    pub fn max_eval(&self) -> T {
        self.evals.last().copied().unwrap_or_else(T::neg_infinity)
    }
}

/// Cyclic complex Jacobi. `tol` bounds the accepted non-Hermiticity relative to `‖H‖`.
pub fn herm_eig<T: Real>(h: &CMat<T>, tol: T) -> Result<HermEig<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch("herm_eig needs a square matrix".into()));
    }
    let scale = h.norm_fro();
    let asym = h.non_hermiticity();
    if asym > tol * scale {
        return Err(Error::NonHermitian {
            residual: asym.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = CMat::identity(n);
    let eps = T::epsilon();

    let mut converged = n < 2 || scale == T::zero();
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
        sweep += 1;
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= eps * scale {
            converged = true;
            continue;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let beta = a[(p, q)];
                let mag = beta.norm();
                if mag <= eps * eps * scale {
                    continue;
                }
                let phase = beta / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (mag + mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let pc = phase.conj();
                // G = [[c, s], [−s e^{−iφ}, c e^{−iφ}]] on the (p,q) plane.
                let g00 = Complex::new(c, T::zero());
                let g01 = Complex::new(s, T::zero());
                let g10 = pc * (-s);
                let g11 = pc * c;
                // A ← A G
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * g00 + aiq * g10;
                    a[(i, q)] = aip * g01 + aiq * g11;
                }
                // A ← G* A
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = g00.conj() * apj + g10.conj() * aqj;
                    a[(q, j)] = g01.conj() * apj + g11.conj() * aqj;
                }
                a[(p, q)] = Complex::zero();
                a[(q, p)] = Complex::zero();
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * g00 + viq * g10;
                    v[(i, q)] = vip * g01 + viq * g11;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalue"));
    let evals = order.iter().map(|&i| a[(i, i)].re).collect();
    let evecs = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermEig { evals, evecs })
}

/// Gram–Schmidt orthonormalization of the columns (modified, two passes).
pub fn orthonormalize<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let n = m.cols();
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| m.col(j)).collect();
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let proj = super::cmat::dotc(&cols[k], &cols[j]);
                let ck = cols[k].clone();
                for (x, y) in cols[j].iter_mut().zip(&ck) {
                    *x -= *y * proj;
                }
            }
        }
        let nrm = super::cmat::vnorm(&cols[j]);
        if nrm <= T::epsilon() {
            return Err(Error::Singular);
        }
        for x in cols[j].iter_mut() {
            *x = *x / nrm;
        }
    }
    Ok(CMat::from_fn(m.rows(), n, |i, j| cols[j][i]))
}

