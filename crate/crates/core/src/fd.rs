//! Central finite differences in holomorphic coordinates, used as numeric oracles.

use num_complex::Complex;

use crate::matfun::{CMat, CVec};
use crate::scalar::Real;
use crate::symplectic::sym_pairs;

/// Upper-triangle entries `w_{ij}`, `i ≤ j`, of a symmetric matrix.
pub fn sym_coords<T: Real>(w: &CMat<T>) -> CVec<T> {
    sym_pairs(w.rows()).into_iter().map(|p| w[p]).collect()
}

/// Inverse of [`sym_coords`].
pub fn sym_from_coords<T: Real>(n: usize, v: &[Complex<T>]) -> CMat<T> {
    let mut w = CMat::zeros(n, n);
    for (&(i, j), &x) in sym_pairs(n).iter().zip(v) {
        w[(i, j)] = x;
        w[(j, i)] = x;
    }
    w
}

fn shifted<T: Real>(x: &[Complex<T>], moves: &[(usize, Complex<T>)]) -> CVec<T> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// `∂²f/∂ξ_I ∂ξ̄_J` of a real function.
pub fn mixed_hessian<T: Real>(f: impl Fn(&[Complex<T>]) -> T, x: &[Complex<T>], h: T) -> CMat<T> {
    let m = x.len();
    let dirs = [Complex::new(h, T::zero()), Complex::new(T::zero(), h)];
    // second derivative along real directions (p, s) and (q, t)
    let d2 = |p: usize, s: usize, q: usize, t: usize| {
        let (a, b) = (dirs[s], dirs[t]);
        let v = f(&shifted(x, &[(p, a), (q, b)])) - f(&shifted(x, &[(p, a), (q, -b)]))
            - f(&shifted(x, &[(p, -a), (q, b)]))
            + f(&shifted(x, &[(p, -a), (q, -b)]));
        v / (T::lit(4.0) * h * h)
    };
    let quarter = T::lit(0.25);
    CMat::from_fn(m, m, |i, j| {
        let rr = d2(i, 0, j, 0) + d2(i, 1, j, 1);
        let ri = d2(i, 0, j, 1) - d2(i, 1, j, 0);
        Complex::new(rr * quarter, ri * quarter)
    })
}

/// `∂f_I/∂ξ_J = ½(∂_x − i∂_y) f_I`.
pub fn holo_jacobian<T: Real>(
    f: impl Fn(&[Complex<T>]) -> CVec<T>,
    x: &[Complex<T>],
    h: T,
) -> CMat<T> {
    let m = x.len();
    let cols: Vec<CVec<T>> = (0..m)
        .map(|j| {
            let hr = Complex::new(h, T::zero());
            let hi = Complex::new(T::zero(), h);
            let fx = crate::matfun::vsub(&f(&shifted(x, &[(j, hr)])), &f(&shifted(x, &[(j, -hr)])));
            let fy = crate::matfun::vsub(&f(&shifted(x, &[(j, hi)])), &f(&shifted(x, &[(j, -hi)])));
            let s = T::lit(0.25) / h;
            fx.iter()
                .zip(&fy)
                .map(|(&a, &b)| (a - b * Complex::i()) * s)
                .collect()
        })
        .collect();
    let rows = cols.first().map_or(0, Vec::len);
    CMat::from_fn(rows, m, |i, j| cols[j][i])
}
