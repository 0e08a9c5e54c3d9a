//! The case `n = 1`: the `P_n(z, w)` basis and kernel series, the Cayley map to
//! `ℋ₁ × ℂ`, the Kähler–Berndt form and EZ metric, and `SL₂(ℝ) ⋉ ℝ²`.
//!
//! Kernels here are written as `(1 − ww̄′)^{−2κ}`, so `κ = k/4` against [`crate::jacobi`].

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffops::{GaussRational, MPoly, Var};
use crate::error::{Error, Result};
use crate::jacobi::{act, kahler_form, CSPoint, JacobiElement};
use crate::matfun::{re, CMat};
use crate::scalar::Real;
use crate::symplectic::{SiegelPoint, SpElement};

/// `(v, u) ∈ ℋ₁ × ℂ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct UpperHalfPoint<T> {
    pub v: Complex<T>,
    pub u: Complex<T>,
}

impl<T: Real> UpperHalfPoint<T> {
    pub fn new(v: Complex<T>, u: Complex<T>) -> Result<Self> {
        if !(v.im > T::zero()) {
            return Err(Error::DomainViolation(format!("Im v = {} is not positive", v.im)));
        }
        Ok(Self { v, u })
    }

    /// `Re v, Re u, Im u` uniform on `[−2, 2]`, `Im v` uniform on `[0.2, 3]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut f = |a: f64, b: f64| T::lit(rng.random_range(a..b));
        Self {
            v: Complex::new(f(-2.0, 2.0), f(0.2, 3.0)),
            u: Complex::new(f(-2.0, 2.0), f(-2.0, 2.0)),
        }
    }
}

/// `v = x + iy`, `u = pv + q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EZCoords<T> {
    pub x: T,
    pub y: T,
    pub p: T,
    pub q: T,
}

impl<T: Real> EZCoords<T> {
    pub fn to_point(&self) -> Result<UpperHalfPoint<T>> {
        let v = Complex::new(self.x, self.y);
        UpperHalfPoint::new(v, v * self.p + self.q)
    }

    pub fn from_point(pt: &UpperHalfPoint<T>) -> Self {
        let p = pt.u.im / pt.v.im;
        Self {
            x: pt.v.re,
            y: pt.v.im,
            p,
            q: pt.u.re - p * pt.v.re,
        }
    }
}

/// `P_n = n! Σ_k (w/2)^k z^{n−2k}/(k!(n−2k)!)` over the variables `z`, `w` of dimension 1.
///
/// # Panics
/// Coefficients are `i64` rationals; `n > 30` overflows.
pub fn pn_poly(n: usize) -> MPoly<Rational64> {
    assert!(n <= 30, "P_n coefficients overflow i64 beyond n = 30");
    let z = MPoly::var(1, Var::Z(0)).expect("z");
    let w = MPoly::var(1, Var::W(0, 0)).expect("w");
    let mut prev = MPoly::one(1);
    if n == 0 {
        return prev;
    }
    let mut cur = z.clone();
    for m in 1..n {
        let next = &(&z * &cur) + &(&w * &prev).scale(&Rational64::from_integer(m as i64));
        prev = cur;
        cur = next;
    }
    cur
}

/// `P_n(z, w)` from `P_{m+1} = zP_m + m w P_{m−1}`.
pub fn pn_eval<T: Real>(n: usize, z: Complex<T>, w: Complex<T>) -> Complex<T> {
    let (mut prev, mut cur) = (re(T::one()), z);
    if n == 0 {
        return prev;
    }
    for m in 1..n {
        let next = z * cur + w * prev * T::from_usize(m).unwrap();
        prev = cur;
        cur = next;
    }
    cur
}

/// Physicists' Hermite `H_n(x)`.
pub fn hermite<T: Real>(n: usize, x: Complex<T>) -> Complex<T> {
    let two = T::lit(2.0);
    let (mut prev, mut cur) = (re(T::one()), x * two);
    if n == 0 {
        return prev;
    }
    for m in 1..n {
        let next = x * cur * two - prev * (two * T::from_usize(m).unwrap());
        prev = cur;
        cur = next;
    }
    cur
}

/// `|P_n(z, w) − (i/√2)ⁿ w^{n/2} H_n(−iz/√(2w))|` on the principal branch of `√w`.
pub fn hermite_check<T: Real>(n: usize, z: Complex<T>, w: Complex<T>) -> Result<T> {
    if w.im == T::zero() && w.re <= T::zero() {
        return Err(Error::BranchViolation(format!("w = {w} lies on (−∞, 0]")));
    }
    let s = w.sqrt();
    let two_rt = T::lit(2.0).sqrt();
    let x = Complex::new(T::zero(), -T::one()) * z / (s * two_rt);
    let pre = (Complex::new(T::zero(), T::one()) * s / two_rt).powu(n as u32);
    Ok((pn_eval(n, z, w) - pre * hermite(n, x)).norm())
}

/// Exact expansion of `(i/√2)ⁿ s^n H_n(−iz/(√2 s))` with `s² = w`; every surviving power of
/// `s` and `√2` is even.
pub fn hermite_exact(n: usize) -> MPoly<GaussRational> {
    // integer Hermite coefficients h_j of x^j
    let mut prev = vec![1i64];
    let mut cur = if n == 0 { vec![1i64] } else { vec![0, 2] };
    for m in 1..n.max(1) {
        let mut next = vec![0i64; m + 2];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += 2 * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= 2 * m as i64 * c;
        }
        prev = cur;
        cur = next;
    }
    if n == 0 {
        cur = prev;
    }
    let i_pow = |e: usize, neg: bool| -> GaussRational {
        let base = if neg {
            Complex::new(Rational64::zero(), -Rational64::one())
        } else {
            Complex::new(Rational64::zero(), Rational64::one())
        };
        (0..e).fold(Complex::new(Rational64::one(), Rational64::zero()), |acc, _| acc * base)
    };
    let mut out = MPoly::zero(1);
    for (j, &h) in cur.iter().enumerate() {
        if h == 0 {
            continue;
        }
        debug_assert_eq!((n - j) % 2, 0);
        // (i/√2)^n s^n · h (−i)^j z^j (√2)^{−j} s^{−j}
        let half_pow = (n + j) / 2;
        let c = i_pow(n, false) * i_pow(j, true) * Complex::new(Rational64::new(h, 1 << half_pow), Rational64::zero());
        let mut vars = vec![Var::Z(0); j];
        vars.extend(std::iter::repeat_n(Var::W(0, 0), (n - j) / 2));
        out = &out + &MPoly::monomial(1, c, &vars).expect("n = 1 variables");
    }
    out
}

/// `P_n` with Gaussian-rational coefficients.
pub fn pn_poly_gauss(n: usize) -> MPoly<GaussRational> {
    let p = pn_poly(n);
    let mut out = MPoly::zero(1);
    for (e, c) in p.terms() {
        let mut vars = vec![Var::Z(0); e[0] as usize];
        vars.extend(std::iter::repeat_n(Var::W(0, 0), e[1] as usize));
        out = &out + &MPoly::monomial(1, Complex::new(*c, Rational64::zero()), &vars).expect("n = 1 variables");
    }
    out
}

/// `√((2κ)_m/m!)·w^m`, the weight-`κ` orthonormal monomials on the disk.
pub fn f_e<T: Real>(m: usize, kappa: T, w: Complex<T>) -> Complex<T> {
    let mut r = T::one();
    for j in 0..m {
        let jf = T::from_usize(j).unwrap();
        r = r * (T::lit(2.0) * kappa + jf) / (jf + T::one());
    }
    w.powu(m as u32) * r.max(T::zero()).sqrt()
}

/// `f_{e_{κ′,κ′+m}}(w)·P_n(z, w)/√n!` with `κ′ = κ − 1/4`.
pub fn basis_fn<T: Real>(n: usize, m: usize, kappa: T, z: Complex<T>, w: Complex<T>) -> Result<Complex<T>> {
    let kp = kappa - T::lit(0.25);
    if kp < T::zero() {
        return Err(Error::OutOfDomain(format!("κ = {kappa} is below 1/4")));
    }
    let mut fact = T::one();
    for j in 1..=n {
        fact = fact * T::from_usize(j).unwrap();
    }
    Ok(f_e(m, kp, w) * pn_eval(n, z, w) / fact.sqrt())
}

/// `(1 − ww̄′)^{−2κ} exp[(2z̄′z + z²w̄′ + z̄′²w)/(2(1 − ww̄′))]`.
pub fn kernel_closed<T: Real>(z: Complex<T>, w: Complex<T>, zp: Complex<T>, wp: Complex<T>, kappa: T) -> Complex<T> {
    let d = re(T::one()) - w * wp.conj();
    let e = (zp.conj() * z * T::lit(2.0) + z * z * wp.conj() + zp.conj() * zp.conj() * w) / (d * T::lit(2.0));
    d.powf(-T::lit(2.0) * kappa) * e.exp()
}

/// `Σ_{n, m ≤ order} f_{n,m}(z, w)·conj f_{n,m}(z′, w′)`.
pub fn kernel_series<T: Real>(
    z: Complex<T>,
    w: Complex<T>,
    zp: Complex<T>,
    wp: Complex<T>,
    kappa: T,
    order: usize,
) -> Result<Complex<T>> {
    let mut s = Complex::zero();
    for n in 0..=order {
        for m in 0..=order {
            s += basis_fn(n, m, kappa, z, w)? * basis_fn(n, m, kappa, zp, wp)?.conj();
        }
    }
    Ok(s)
}

/// `w = (v − i)/(v + i)`, `z = 2iu/(v + i)`.
pub fn cayley<T: Real>(pt: &UpperHalfPoint<T>) -> Result<(Complex<T>, Complex<T>)> {
    if !(pt.v.im > T::zero()) {
        return Err(Error::DomainViolation(format!("Im v = {} is not positive", pt.v.im)));
    }
    let i = Complex::new(T::zero(), T::one());
    let den = pt.v + i;
    Ok(((pt.v - i) / den, i * pt.u * T::lit(2.0) / den))
}

/// `v = i(1 + w)/(1 − w)`, `u = z/(1 − w)`.
pub fn cayley_inverse<T: Real>(w: Complex<T>, z: Complex<T>) -> Result<UpperHalfPoint<T>> {
    if !(w.norm_sqr() < T::one()) {
        return Err(Error::DomainViolation(format!("|w| = {} is not below 1", w.norm())));
    }
    let one = re(T::one());
    let i = Complex::new(T::zero(), T::one());
    UpperHalfPoint::new(i * (one + w) / (one - w), z / (one - w))
}

/// Coefficients of `−iω = Σ H dξ_I ∧ dξ̄_J` over `ξ = (u, v)`:
/// `−2κ/(v̄ − v)² dv∧dv̄ + 2/(i(v̄ − v)) B∧B̄`, `B = du − (u − ū)/(v − v̄) dv`.
pub fn kb_form<T: Real>(pt: &UpperHalfPoint<T>, kappa: T) -> CMat<T> {
    let (v, u) = (pt.v, pt.u);
    let i = Complex::new(T::zero(), T::one());
    let dvb = v.conj() - v;
    let c = re(-T::lit(2.0) * kappa) / (dvb * dvb);
    let d = re(T::lit(2.0)) / (i * dvb);
    let p = -(u - u.conj()) / (v - v.conj());
    CMat::from_rows(&[
        vec![d, d * p.conj()],
        vec![d * p, c + d * p.norm_sqr()],
    ])
}

/// Holomorphic Jacobian `∂(z, w)/∂(u, v)` of [`cayley`].
pub fn cayley_jacobian<T: Real>(pt: &UpperHalfPoint<T>) -> CMat<T> {
    let i2 = Complex::new(T::zero(), T::lit(2.0));
    let den = pt.v + Complex::new(T::zero(), T::one());
    CMat::from_rows(&[
        vec![i2 / den, -i2 * pt.u / (den * den)],
        vec![Complex::zero(), i2 / (den * den)],
    ])
}

/// Largest entry of `Jᵀ H_disk J̄ − H_half`, with `H_disk` the Jacobi form at `k = 4κ`.
pub fn kb_form_check<T: Real>(pt: &UpperHalfPoint<T>, kappa: T) -> Result<T> {
    let (w, z) = cayley(pt)?;
    let x = CSPoint::new(vec![z], SiegelPoint::from_matrix_unchecked(CMat::scalar(w)))?;
    let h = kahler_form(&x, T::lit(4.0) * kappa)?;
    let j = cayley_jacobian(pt);
    let pulled = &(&j.transpose() * &h) * &j.conj();
    Ok((&pulled - &kb_form(pt, kappa)).norm_max())
}

/// `ds² = κ/(2y²)(dx² + dy²) + (1/y)[(x² + y²)dp² + dq² + 2x dp dq]` in `(x, y, p, q)`.
pub fn ez_metric<T: Real>(c: &EZCoords<T>, kappa: T) -> Result<[[T; 4]; 4]> {
    if !(c.y > T::zero()) {
        return Err(Error::DomainViolation(format!("y = {} is not positive", c.y)));
    }
    let z = T::zero();
    let a = kappa / (T::lit(2.0) * c.y * c.y);
    let iy = T::one() / c.y;
    Ok([
        [a, z, z, z],
        [z, a, z, z],
        [z, z, (c.x * c.x + c.y * c.y) * iy, c.x * iy],
        [z, z, c.x * iy, iy],
    ])
}

/// `Re(Lᵀ H L̄)` with `L = ∂(u, v)/∂(x, y, p, q)`: the real metric of [`kb_form`].
pub fn kb_real_metric<T: Real>(c: &EZCoords<T>, kappa: T) -> Result<[[T; 4]; 4]> {
    let pt = c.to_point()?;
    let h = kb_form(&pt, kappa);
    let i = Complex::new(T::zero(), T::one());
    let o = Complex::zero();
    let one = re(T::one());
    let p = re(c.p);
    let lu = [p, i * p, pt.v, one];
    let lv = [one, i, o, o];
    let l = [lu, lv];
    let mut g = [[T::zero(); 4]; 4];
    for (a, row) in g.iter_mut().enumerate() {
        for (b, out) in row.iter_mut().enumerate() {
            let mut s = Complex::zero();
            for (ii, li) in l.iter().enumerate() {
                for (jj, lj) in l.iter().enumerate() {
                    s += h[(ii, jj)] * li[a] * lj[b].conj();
                }
            }
            *out = s.re;
        }
    }
    Ok(g)
}

/// `(M, l) ∈ SL₂(ℝ) ⋉ ℝ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gj0Element<T> {
    pub m: [[T; 2]; 2],
    pub l: [T; 2],
}

impl<T: Real> Gj0Element<T> {
    pub fn new(m: [[T; 2]; 2], l: [T; 2], tol: T) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - T::one()).abs() > tol {
            return Err(Error::NotSymplectic {
                residual: (det - T::one()).abs().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { m, l })
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z], [z, o]],
            l: [z, z],
        }
    }

    /// `a ∈ [0.5, 1.5]`, `b, c, l ∈ [−1, 1]`, `d = (1 + bc)/a`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a: f64 = rng.random_range(0.5..1.5);
        let (b, c): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let l: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        Self {
            m: [[T::lit(a), T::lit(b)], [T::lit(c), T::lit((1.0 + b * c) / a)]],
            l: l.map(T::lit),
        }
    }
}

/// `v₁ = (av + b)/(cv + d)`, `u₁ = (u + l₁v + l₂)/(cv + d)`.
pub fn gj0_act<T: Real>(g: &Gj0Element<T>, pt: &UpperHalfPoint<T>) -> Result<UpperHalfPoint<T>> {
    let [[a, b], [c, d]] = g.m;
    let den = pt.v * c + d;
    if den.norm() == T::zero() {
        return Err(Error::Singular);
    }
    UpperHalfPoint::new((pt.v * a + b) / den, (pt.u + pt.v * g.l[0] + g.l[1]) / den)
}

/// `(M₁M₂, l₁ᵀM₂ + l₂)`, so that acting by the product is acting by `g₂` then `g₁`.
pub fn gj0_compose<T: Real>(g1: &Gj0Element<T>, g2: &Gj0Element<T>) -> Gj0Element<T> {
    let (a, b) = (g1.m, g2.m);
    let mut m = [[T::zero(); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, out) in row.iter_mut().enumerate() {
            *out = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    let l = [
        g1.l[0] * b[0][0] + g1.l[1] * b[1][0] + g2.l[0],
        g1.l[0] * b[0][1] + g1.l[1] * b[1][1] + g2.l[1],
    ];
    Gj0Element { m, l }
}

/// The element of `G^J_1` matching `(M, l)` under [`cayley`]: `g = CMC⁻¹` with
/// `C = [[1, −i], [1, i]]`, `α = l₂ + il₁`, `t = 0`.
pub fn gj0_to_jacobi<T: Real>(g: &Gj0Element<T>) -> JacobiElement<T> {
    let [[a, b], [c, d]] = g.m;
    let half = T::lit(0.5);
    // CMC⁻¹ = [[A, B], [B̄, Ā]]
    let big_a = Complex::new((a + d) * half, (b - c) * half);
    let big_b = Complex::new((a - d) * half, -(b + c) * half);
    JacobiElement {
        g: SpElement::from_blocks_unchecked(CMat::scalar(big_a), CMat::scalar(big_b)),
        alpha: vec![Complex::new(g.l[1], g.l[0])],
        t: T::zero(),
    }
}

/// `|cayley(g·p) − (g↦h)·cayley(p)|` over both coordinates.
pub fn intertwining_gap<T: Real>(g: &Gj0Element<T>, pt: &UpperHalfPoint<T>) -> Result<T> {
    let (w1, z1) = cayley(&gj0_act(g, pt)?)?;
    let (w, z) = cayley(pt)?;
    let x = CSPoint::new(vec![z], SiegelPoint::from_matrix_unchecked(CMat::scalar(w)))?;
    let y = act(&gj0_to_jacobi(g), &x)?;
    Ok((y.z[0] - z1).norm().max((y.w.w()[(0, 0)] - w1).norm()))
}
