//! The Jacobi group `G^J_n = H_n ⋊ Sp(n, ℝ)` acting on `ℂⁿ × 𝒟_n`: composition, action,
//! multiplier, reproducing kernel, Kähler geometry and the invariant measure.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matfun::{
    detpow, dotu, herm_eig, re, sqrt_psd, vadd, vconj, vsub, CMat, CVec,
};
use crate::scalar::Real;
use crate::symplectic::{
    jn, moebius, siegel_random, sp_compose, sp_inverse, sp_random, sym_pairs, sym_unit,
    SiegelPoint, SpElement,
};

/// Coefficient `c` in the central phase `exp(i c t)`.
pub const CENTRAL_PHASE: i32 = 1;

/// `(g, α, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct JacobiElement<T> {
    pub g: SpElement<T>,
    pub alpha: CVec<T>,
    pub t: T,
}

impl<T: Real> JacobiElement<T> {
    pub fn new(g: SpElement<T>, alpha: CVec<T>, t: T) -> Result<Self> {
        if alpha.len() != g.dim() {
            return Err(Error::DimensionMismatch(format!(
                "α has {} entries for n = {}",
                alpha.len(),
                g.dim()
            )));
        }
        if alpha.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) || !t.is_finite() {
            return Err(Error::DomainViolation("non-finite Jacobi parameter".into()));
        }
        Ok(Self { g, alpha, t })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            g: SpElement::identity(n),
            alpha: vec![Complex::zero(); n],
            t: T::zero(),
        }
    }

    pub fn translation(alpha: CVec<T>) -> Self {
        Self {
            g: SpElement::identity(alpha.len()),
            alpha,
            t: T::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `g` from [`sp_random`], `α` Gaussian times `alpha_scale`, `t` uniform in `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, scale: T, alpha_scale: T, rng: &mut R) -> Self {
        let g = sp_random(n, scale, rng);
        let alpha = gaussian_vec(n, alpha_scale, rng);
        let t = T::lit(rng.random_range(-1.0..1.0));
        Self { g, alpha, t }
    }
}

/// `(z, W) ∈ ℂⁿ × 𝒟_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CSPoint<T> {
    pub z: CVec<T>,
    #[serde(flatten)]
    pub w: SiegelPoint<T>,
}

impl<T: Real> CSPoint<T> {
    pub fn new(z: CVec<T>, w: SiegelPoint<T>) -> Result<Self> {
        if z.len() != w.dim() {
            return Err(Error::DimensionMismatch(format!(
                "z has {} entries for n = {}",
                z.len(),
                w.dim()
            )));
        }
        Ok(Self { z, w })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            z: vec![Complex::zero(); n],
            w: SiegelPoint::origin(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Holomorphic coordinates `(z_1, …, z_n, w_{ij} (i ≤ j))`.
    pub fn coords(&self) -> CVec<T> {
        let mut v = self.z.clone();
        v.extend(crate::fd::sym_coords(self.w.w()));
        v
    }

    pub fn from_coords(n: usize, v: &[Complex<T>]) -> Self {
        Self {
            z: v[..n].to_vec(),
            w: SiegelPoint::from_matrix_unchecked(crate::fd::sym_from_coords(n, &v[n..])),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, z_scale: T, w_scale: T, rng: &mut R) -> Self {
        let w = siegel_random(n, w_scale, rng);
        let z = gaussian_vec(n, z_scale, rng);
        Self { z, w }
    }
}

fn gaussian_vec<T: Real, R: Rng + ?Sized>(n: usize, scale: T, rng: &mut R) -> CVec<T> {
    (0..n)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(x), T::lit(y)) * scale
        })
        .collect()
}

/// `g⁻¹·α = a*α − bᵗᾱ`.
pub fn act_vec_inverse<T: Real>(g: &SpElement<T>, alpha: &[Complex<T>]) -> CVec<T> {
    vsub(&g.a().adjoint().matvec(alpha), &g.b().transpose().matvec(&vconj(alpha)))
}

/// `Im(Σ uᵢ v̄ᵢ)`.
fn im_pair<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> T {
    dotu(u, &vconj(v)).im
}

/// `(g₁g₂, g₂⁻¹·α₁ + α₂, t₁ + t₂ + Im(g₂⁻¹·α₁ · ᾱ₂))`.
pub fn jacobi_compose<T: Real>(h1: &JacobiElement<T>, h2: &JacobiElement<T>) -> Result<JacobiElement<T>> {
    let g = sp_compose(&h1.g, &h2.g)?;
    let moved = act_vec_inverse(&h2.g, &h1.alpha);
    let t = h1.t + h2.t + im_pair(&moved, &h2.alpha);
    Ok(JacobiElement {
        g,
        alpha: vadd(&moved, &h2.alpha),
        t,
    })
}

/// `(g⁻¹, −g·α, −t)`.
pub fn jacobi_inverse<T: Real>(h: &JacobiElement<T>) -> JacobiElement<T> {
    JacobiElement {
        g: sp_inverse(&h.g),
        alpha: h.g.act_vec(&h.alpha).into_iter().map(|a| -a).collect(),
        t: -h.t,
    }
}

/// `Wb* + a*`.
fn pmat<T: Real>(g: &SpElement<T>, w: &SiegelPoint<T>) -> CMat<T> {
    &(w.w() * &g.b().adjoint()) + &g.a().adjoint()
}

/// `z₁ = (Wb* + a*)⁻¹(z + α − Wᾱ)`, `W₁ = g·W`.
pub fn act<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>) -> Result<CSPoint<T>> {
    let w = &x.w;
    let rhs = vsub(&vadd(&x.z, &h.alpha), &w.w().matvec(&vconj(&h.alpha)));
    let z1 = pmat(&h.g, w).solve(&CMat::from_fn(rhs.len(), 1, |i, _| rhs[i]))?.col(0);
    Ok(CSPoint {
        z: z1,
        w: moebius(&h.g, w)?,
    })
}

/// Everything produced alongside `λ(h, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CocycleData<T> {
    pub z1: CVec<T>,
    #[serde(rename = "W1")]
    pub w1: SiegelPoint<T>,
    pub x: CVec<T>,
    pub y: CVec<T>,
    pub lambda: Complex<T>,
}

fn even_weight<T: Real>(k: T) -> Result<()> {
    if (k / T::lit(2.0)).fract() != T::zero() {
        return Err(Error::OddWeight(k.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// `S(g)D(α)e_{z,W} = λ e_{z₁,W₁}`; `k` must be an even integer.
pub fn lambda_cocycle<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>, k: T) -> Result<CocycleData<T>> {
    even_weight(k)?;
    lambda_cocycle_unchecked(h, x, k)
}

/// As [`lambda_cocycle`] for any real `k`, on the principal branch of `det(Wb* + a*)^{−k/2}`.
///
/// `λ = det(Wb* + a*)^{−k/2}·exp(x̄ᵗz/2 − ȳᵗz₁/2)·exp(i Im(αᵗx̄))` with
/// `x = (1 − WW̄)⁻¹(z + Wz̄)` and `y = a(α + x) + b(ᾱ + x̄)`.
pub fn lambda_cocycle_unchecked<T: Real>(
    h: &JacobiElement<T>,
    pt: &CSPoint<T>,
    k: T,
) -> Result<CocycleData<T>> {
    let (g, alpha, z, w) = (&h.g, &h.alpha, &pt.z, &pt.w);
    let x = pt.w.gap().solve(&col(&vadd(z, &w.w().matvec(&vconj(z)))))?.col(0);
    let y = vadd(
        &g.a().matvec(&vadd(alpha, &x)),
        &g.b().matvec(&vadd(&vconj(alpha), &vconj(&x))),
    );
    let image = act(h, pt)?;
    let half = T::lit(0.5);
    let expo = (dotu(&vconj(&x), z) - dotu(&vconj(&y), &image.z)) * half
        + Complex::i() * im_pair(alpha, &x);
    let lambda = detpow(&pmat(g, w), -k * half)? * expo.exp();
    Ok(CocycleData {
        z1: image.z,
        w1: image.w,
        x,
        y,
        lambda,
    })
}

/// `exp(i c t)·λ(h, x)`, exactly multiplicative along [`jacobi_compose`].
pub fn lambda_full<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>, k: T) -> Result<Complex<T>> {
    let l = lambda_cocycle_unchecked(h, x, k)?.lambda;
    Ok(l * Complex::new(T::zero(), T::from_i32(CENTRAL_PHASE).unwrap() * h.t).exp())
}

fn col<T: Real>(v: &[Complex<T>]) -> CMat<T> {
    CMat::from_fn(v.len(), 1, |i, _| v[i])
}

fn row_times<T: Real>(v: &[Complex<T>], m: &CMat<T>) -> CVec<T> {
    m.transpose().matvec(v)
}

/// `2λ₁ = zᵗRz + (αᵗR + ᾱᵗS)(2z + z₀)` with `R = (ā + b̄W)⁻¹b̄`, `S = (1 + Wā⁻¹b̄)⁻¹`,
/// `z₀ = α − Wᾱ`. Defined whenever `ā` is invertible, including `b = 0`.
pub fn lambda1_regular<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>) -> Result<Complex<T>> {
    let (g, alpha, z, w) = (&h.g, &h.alpha, &x.z, x.w.w());
    let n = x.dim();
    let abar = g.a().conj();
    let bbar = g.b().conj();
    let r = (&abar + &(&bbar * w)).solve(&bbar)?;
    let s = (&CMat::identity(n) + &(w * &abar.solve(&bbar)?)).inverse()?;
    let z0 = vsub(alpha, &w.matvec(&vconj(alpha)));
    let lin = vadd(&row_times(alpha, &r), &row_times(&vconj(alpha), &s));
    let two_z = z.iter().map(|&c| c + c).collect::<CVec<T>>();
    let total = dotu(z, &r.matvec(z)) + dotu(&lin, &vadd(&two_z, &z0));
    Ok(total * T::lit(0.5))
}

/// `2λ₁ = zᵗ(W + T)⁻¹z + (α + ᾱᵗT)(W + T)⁻¹(2z + z₀)` with `T = b̄⁻¹ā`; needs invertible `b`.
pub fn lambda1_tmatrix<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>) -> Result<Complex<T>> {
    let (g, alpha, z, w) = (&h.g, &h.alpha, &x.z, x.w.w());
    let tm = g.b().conj().solve(&g.a().conj())?;
    let wt = (w + &tm).inverse()?;
    let z0 = vsub(alpha, &w.matvec(&vconj(alpha)));
    let lin = vadd(alpha, &row_times(&vconj(alpha), &tm));
    let two_z = z.iter().map(|&c| c + c).collect::<CVec<T>>();
    let total = dotu(z, &wt.matvec(z)) + dotu(&row_times(&lin, &wt), &vadd(&two_z, &z0));
    Ok(total * T::lit(0.5))
}

/// Which closed form produced `λ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda1Route {
    Regular,
    TMatrix,
}

/// `λ = det(Wb* + a*)^{−k/2}·exp(−λ₁)`, preferring the `T = b̄⁻¹ā` form when `b` is
/// comfortably invertible.
pub fn lambda_cocycle_ez<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>, k: T) -> Result<Complex<T>> {
    even_weight(k)?;
    Ok(lambda_cocycle_ez_unchecked(h, x, k)?.0)
}

pub fn lambda_cocycle_ez_unchecked<T: Real>(
    h: &JacobiElement<T>,
    x: &CSPoint<T>,
    k: T,
) -> Result<(Complex<T>, Lambda1Route)> {
    let pre = detpow(&pmat(&h.g, &x.w), -k * T::lit(0.5))?;
    let b_ok = crate::matfun::spectral_norm(&h.g.b().inverse().unwrap_or_else(|_| {
        CMat::from_fn(1, 1, |_, _| re(T::infinity()))
    }))
    .map(|s| s < T::lit(1e6))
    .unwrap_or(false);
    if b_ok {
        if let Ok(l1) = lambda1_tmatrix(h, x) {
            return Ok((pre * (-l1).exp(), Lambda1Route::TMatrix));
        }
    }
    let l1 = lambda1_regular(h, x).map_err(|_| Error::Singular)?;
    Ok((pre * (-l1).exp(), Lambda1Route::Regular))
}

/// `K(x, y) = (e_y, e_x) = det U^{k/2}·exp ½[2x̄_yᵗU z + zᵗV̄U z + x̄_yᵗUW x̄_y]`,
/// `U = (1 − WV̄)⁻¹`, for `x = (z, W)` and `y = (x_y, V)`. Holomorphic in `x`.
pub fn kernel<T: Real>(x: &CSPoint<T>, y: &CSPoint<T>, k: T) -> Result<Complex<T>> {
    let n = x.dim();
    let (w, v) = (x.w.w(), y.w.w());
    let gap = &CMat::identity(n) - &(w * &v.conj());
    let u = gap.inverse()?;
    let yb = vconj(&y.z);
    let uz = u.matvec(&x.z);
    let e = dotu(&yb, &uz) * T::lit(2.0)
        + dotu(&x.z, &(&v.conj() * &u).matvec(&x.z))
        + dotu(&yb, &(&u * w).matvec(&yb));
    Ok(detpow(&gap, -k * T::lit(0.5))? * (e * T::lit(0.5)).exp())
}

/// `f = −(k/2) log det(1 − WW̄) + z̄ᵗMz + Re(zᵗW̄Mz)`, `M = (1 − WW̄)⁻¹`.
pub fn kahler_potential<T: Real>(x: &CSPoint<T>, k: T) -> Result<T> {
    let gap = x.w.gap();
    let m = gap.inverse()?;
    let ld = crate::matfun::principal_logdet(&gap)?.re;
    let zb = vconj(&x.z);
    let quad = dotu(&zb, &m.matvec(&x.z)).re + dotu(&x.z, &(&x.w.w().conj() * &m).matvec(&x.z)).re;
    Ok(-k * T::lit(0.5) * ld + quad)
}

/// The z-dependent part `F = z̄ᵗMz + Re(zᵗW̄Mz)` of the potential.
fn z_quadratic<T: Real>(m: &CMat<T>, wbm: &CMat<T>, z: &[Complex<T>]) -> T {
    dotu(&vconj(z), &m.matvec(z)).re + dotu(z, &wbm.matvec(z)).re
}

/// Coefficients `H_{IJ}` of `ω` in `dξ_I ∧ dξ̄_J` over `ξ = (z_i, w_{ij} (i ≤ j))`:
/// `H_{IJ} = (k/2)Tr(M E_I M̄ E_J) + a_Iᵗ M̄ ā_J`, with `a_I = e_i` on `z_i`, `a_I = E_I x̄` on
/// `w_I`, and `x = M(z + Wz̄)`.
pub fn kahler_form<T: Real>(x: &CSPoint<T>, k: T) -> Result<CMat<T>> {
    let n = x.dim();
    let gap = x.w.gap();
    let m = gap.inverse()?;
    let mb = m.conj();
    let xv = m.matvec(&vadd(&x.z, &x.w.w().matvec(&vconj(&x.z))));
    let xb = vconj(&xv);
    let mut mats: Vec<Option<CMat<T>>> = Vec::new();
    let mut vecs: Vec<CVec<T>> = Vec::new();
    for i in 0..n {
        let mut e = vec![Complex::zero(); n];
        e[i] = re(T::one());
        vecs.push(e);
        mats.push(None);
    }
    for p in sym_pairs(n) {
        let e = sym_unit::<T>(n, p);
        vecs.push(e.matvec(&xb));
        mats.push(Some(e));
    }
    let half_k = re(k * T::lit(0.5));
    let dim = vecs.len();
    Ok(CMat::from_fn(dim, dim, |i, j| {
        let geo = match (&mats[i], &mats[j]) {
            (Some(ei), Some(ej)) => (&(&(&m * ei) * &mb) * ej).trace() * half_k,
            _ => Complex::zero(),
        };
        geo + dotu(&vecs[i], &mb.matvec(&vconj(&vecs[j])))
    }))
}

/// `Q = det(1 − WW̄)^{−(n+2)}`.
pub fn density<T: Real>(x: &CSPoint<T>) -> Result<T> {
    let n = x.dim();
    Ok(detpow(&x.w.gap(), -T::from_usize(n + 2).unwrap())?.re)
}

/// Normalization of `(f, g) = Λ∫ f̄ g Q K⁻¹ dz dW`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConstants<T> {
    pub n: usize,
    pub k: T,
    pub p: T,
    #[serde(rename = "Lambda")]
    pub lambda: T,
}

/// `Λ = (k−3)/(2π^{n(n+3)/2}) ∏_{i<n} ((k−3)/2 − n + i)·Γ(k+i−n−2)/Γ(k+2(i−n−1))`.
pub fn lambda_product<T: Real>(n: usize, k: T) -> T {
    let two = T::lit(2.0);
    let nn = T::from_usize(n).unwrap();
    let three = T::lit(3.0);
    let lg = |x: T| T::lit(ln_gamma(x.to_f64().expect("finite")));
    let mut acc = (k - three) / (two * T::PI().powf(nn * (nn + three) / two));
    for i in 1..n {
        let i = T::from_usize(i).unwrap();
        acc = acc
            * ((k - three) / two - nn + i)
            * (lg(k + i - nn - two) - lg(k + two * (i - nn - T::one()))).exp();
    }
    acc
}

/// `Λ = π⁻ⁿ/J_n(p)`, `p = (k−3)/2 − n`, checked against [`lambda_product`].
pub fn measure_constants<T: Real>(n: usize, k: T) -> Result<MeasureConstants<T>> {
    let two = T::lit(2.0);
    let nn = T::from_usize(n).unwrap();
    let p = (k - T::lit(3.0)) / two - nn;
    if !(p > -T::one()) {
        return Err(Error::OutOfDomain(format!("the measure needs k > 2n + 1, got k = {k}")));
    }
    debug_assert!((p - (k / two - nn - T::one()) + T::lit(0.5)).abs() <= T::epsilon() * k);
    let lambda = T::PI().powi(-(n as i32)) / jn(p, n)?;
    let alt = lambda_product(n, k);
    let gap = ((alt - lambda) / lambda).abs();
    if gap > T::lit(1e3) * T::epsilon() {
        return Err(Error::FormMismatch {
            gap: gap.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(MeasureConstants { n, k, p, lambda })
}

/// Importance sampler for `Λ Q K⁻¹ dz dW`.
///
/// `W` is uniform on the box `[−1, 1]` per real coordinate (zero weight outside the ball);
/// for fixed `W`, `z` is exactly Gaussian with density `∝ exp(−F)`, whose normalizer
/// `πⁿ det(1 − WW̄)^{1/2}` is folded into the weight.
#[derive(Clone, Debug)]
pub struct BaseMeasure<T> {
    pub consts: MeasureConstants<T>,
    box_volume: T,
}

/// Block size of the counter-based substreams.
pub const BLOCK: usize = 4096;

/// Weighted mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Estimate<T> {
    pub value: Complex<T>,
    pub stderr: T,
    pub samples: usize,
}

impl<T: Real> BaseMeasure<T> {
    pub fn new(n: usize, k: T) -> Result<Self> {
        let consts = measure_constants(n, k)?;
        let dim = n * (n + 1);
        Ok(Self {
            consts,
            box_volume: T::lit(2.0).powi(dim as i32),
        })
    }

    fn rng_for_block(seed: u64, block: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(block);
        r
    }

    /// One draw; the weight is zero when the `W` proposal lands outside the ball.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(CSPoint<T>, T)> {
        let n = self.consts.n;
        let pairs = sym_pairs(n);
        let coords: CVec<T> = pairs
            .iter()
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                Complex::new(T::lit(a), T::lit(b))
            })
            .collect();
        let normals: Vec<T> = (0..2 * n)
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let w = crate::fd::sym_from_coords(n, &coords);
        let gap = &CMat::identity(n) - &(&w * &w.conj());
        let margin = herm_eig(&gap.hermitian_part(), T::default_tol())?.min_eval();
        let sp = SiegelPoint::from_matrix_unchecked(w);
        if !(margin > T::zero()) {
            return Ok((
                CSPoint {
                    z: vec![Complex::zero(); n],
                    w: sp,
                },
                T::zero(),
            ));
        }
        let det = detpow(&gap, T::one())?.re;
        let m = gap.inverse()?;
        let wbm = &sp.w().conj() * &m;
        // real quadratic form F(ξ) = ξᵀAξ on ξ = (Re z, Im z)
        let basis = |i: usize| -> CVec<T> {
            let mut v = vec![Complex::zero(); n];
            if i < n {
                v[i] = re(T::one());
            } else {
                v[i - n] = Complex::new(T::zero(), T::one());
            }
            v
        };
        let f = |v: &[Complex<T>]| z_quadratic(&m, &wbm, v);
        let diag: Vec<T> = (0..2 * n).map(|i| f(&basis(i))).collect();
        let a = CMat::from_fn(2 * n, 2 * n, |i, j| {
            if i == j {
                re(diag[i])
            } else {
                re((f(&vadd(&basis(i), &basis(j))) - diag[i] - diag[j]) * T::lit(0.5))
            }
        });
        let cov = a.scale_re(T::lit(2.0)).inverse()?.hermitian_part();
        let l = sqrt_psd(&cov)?;
        let xi = l.matvec(&normals.iter().map(|&x| re(x)).collect::<CVec<T>>());
        let z: CVec<T> = (0..n).map(|i| Complex::new(xi[i].re, xi[i + n].re)).collect();
        let nn = T::from_usize(n).unwrap();
        let weight = self.consts.lambda
            * self.box_volume
            * det.powf(-(nn + T::lit(2.0)) + self.consts.k * T::lit(0.5) + T::lit(0.5))
            * T::PI().powi(n as i32);
        Ok((CSPoint { z, w: sp }, weight))
    }

    /// Sequential stream of weighted samples for `seed`, block by block.
    pub fn stream(&self, seed: u64) -> impl Iterator<Item = (CSPoint<T>, T)> + '_ {
        (0u64..).flat_map(move |b| {
            let mut r = Self::rng_for_block(seed, b);
            (0..BLOCK)
                .map(move |_| self.draw(&mut r).expect("interior draw"))
                .collect::<Vec<_>>()
        })
    }

    /// Estimates `Λ∫ f Q K⁻¹ dz dW` with `count` samples (rounded up to whole blocks).
    ///
    /// Blocks are evaluated in parallel and reduced in block order, so the result does not
    /// depend on the number of worker threads.
    pub fn integrate<F>(&self, f: F, count: usize, seed: u64) -> Result<Estimate<T>>
    where
        F: Fn(&CSPoint<T>) -> Complex<T> + Sync,
    {
        let blocks = count.div_ceil(BLOCK).max(1);
        let partial: Vec<Result<(Complex<T>, T)>> = (0..blocks as u64)
            .into_par_iter()
            .map(|b| {
                let mut r = Self::rng_for_block(seed, b);
                let mut s = Complex::zero();
                let mut s2 = T::zero();
                for _ in 0..BLOCK {
                    let (x, wgt) = self.draw(&mut r)?;
                    if wgt > T::zero() {
                        let v = f(&x) * wgt;
                        s += v;
                        s2 += v.norm_sqr();
                    }
                }
                Ok((s, s2))
            })
            .collect();
        let mut s = Complex::zero();
        let mut s2 = T::zero();
        for p in partial {
            let (a, b) = p?;
            s += a;
            s2 += b;
        }
        let total = blocks * BLOCK;
        let nt = T::from_usize(total).unwrap();
        let mean = s / nt;
        let var = (s2 / nt - mean.norm_sqr()).max(T::zero());
        Ok(Estimate {
            value: mean,
            stderr: (var / nt).sqrt(),
            samples: total,
        })
    }
}

/// Draws `count` weighted samples (rounded up to whole blocks is not applied here).
pub fn sample_base_measure<T: Real>(
    n: usize,
    k: T,
    count: usize,
    seed: u64,
) -> Result<Vec<(CSPoint<T>, T)>> {
    let m = BaseMeasure::new(n, k)?;
    Ok(m.stream(seed).take(count).collect())
}

/// `f(x₀)` against the Monte-Carlo value of `Λ∫K(x₀, y) f(y) Q(y) K(y, y)⁻¹ dy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReproduceResult<T> {
    pub lhs: Complex<T>,
    pub rhs: Estimate<T>,
    pub relerr: T,
}

pub fn reproduce_check<T: Real, F>(
    f: F,
    x0: &CSPoint<T>,
    k: T,
    samples: usize,
    seed: u64,
) -> Result<ReproduceResult<T>>
where
    F: Fn(&CSPoint<T>) -> Complex<T> + Sync,
{
    if x0.dim() != 1 {
        return Err(Error::OutOfDomain("the reproducing check runs at n = 1".into()));
    }
    if !(k > T::lit(3.0)) {
        return Err(Error::OutOfDomain(format!("needs k > 3, got {k}")));
    }
    let m = BaseMeasure::new(1, k)?;
    let rhs = m.integrate(
        |y| kernel(x0, y, k).unwrap_or_else(|_| Complex::zero()) * f(y),
        samples,
        seed,
    )?;
    let lhs = f(x0);
    Ok(ReproduceResult {
        lhs,
        rhs,
        relerr: (lhs - rhs.value).norm() / lhs.norm(),
    })
}

/// `(π_K(h)f)(x) = λ(h⁻¹, x)·f(h⁻¹·x)`, with the central phase included; `k` even.
pub fn pik_apply<T: Real>(
    h: &JacobiElement<T>,
    k: T,
    f: impl Fn(&CSPoint<T>) -> Complex<T>,
    x: &CSPoint<T>,
) -> Result<Complex<T>> {
    even_weight(k)?;
    let hi = jacobi_inverse(h);
    let lam = lambda_full(&hi, x, k)?;
    Ok(lam * f(&act(&hi, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{holo_jacobian, mixed_hessian};
    use crate::matfun::dist_identity;
    use proptest::prelude::*;

    type P = CSPoint<f64>;
    type H = JacobiElement<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    fn p1(z: Complex<f64>, w: Complex<f64>) -> P {
        CSPoint::new(vec![z], SiegelPoint::from_matrix_unchecked(CMat::scalar(w))).unwrap()
    }

    fn close(a: &H, b: &H, tol: f64) -> bool {
        (&a.g.matrix() - &b.g.matrix()).norm_fro() < tol
            && vsub(&a.alpha, &b.alpha).iter().all(|d| d.norm() < tol)
            && (a.t - b.t).abs() < tol
    }

    #[test]
    fn compose_identity_and_hw_law() {
        let mut r = rng(1);
        let h = H::random(2, 0.5, 0.4, &mut r);
        assert!(close(&jacobi_compose(&h, &H::identity(2)).unwrap(), &h, 1e-14));
        let a1 = vec![c(0.3, -0.2)];
        let a2 = vec![c(-0.1, 0.5)];
        let h1 = JacobiElement { t: 0.2, ..H::translation(a1.clone()) };
        let h2 = JacobiElement { t: -0.4, ..H::translation(a2.clone()) };
        let h12 = jacobi_compose(&h1, &h2).unwrap();
        assert!((h12.alpha[0] - (a1[0] + a2[0])).norm() < 1e-15);
        assert!((h12.t - (0.2 - 0.4 + (a1[0] * a2[0].conj()).im)).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert!(close(&jacobi_inverse(&H::identity(2)), &H::identity(2), 0.0 + 1e-300));
        let tr = H::translation(vec![c(0.3, 0.1)]);
        assert_eq!(jacobi_inverse(&tr).alpha, vec![c(-0.3, -0.1)]);
        let mut r = rng(2);
        for n in 1..=3 {
            let h = H::random(n, 0.5, 0.5, &mut r);
            let e = jacobi_compose(&h, &jacobi_inverse(&h)).unwrap();
            assert!(close(&e, &H::identity(n), 1e-11));
            let e = jacobi_compose(&jacobi_inverse(&h), &h).unwrap();
            assert!(close(&e, &H::identity(n), 1e-11));
        }
    }

    #[test]
    fn act_examples() {
        let mut r = rng(3);
        let x = P::random(2, 0.4, 0.5, &mut r);
        let same = act(&H::identity(2), &x).unwrap();
        assert!(vsub(&same.z, &x.z).iter().all(|d| d.norm() < 1e-15));
        let alpha = vec![c(0.2, 0.1), c(-0.3, 0.05)];
        let moved = act(&H::translation(alpha.clone()), &x).unwrap();
        let expect = vsub(&vadd(&x.z, &alpha), &x.w.w().matvec(&vconj(&alpha)));
        assert!(vsub(&moved.z, &expect).iter().all(|d| d.norm() < 1e-15));
        assert_eq!(moved.w, x.w);
    }

    #[test]
    fn lambda_examples() {
        let mut r = rng(4);
        let x = P::random(2, 0.4, 0.5, &mut r);
        let d = lambda_cocycle(&H::identity(2), &x, 2.0).unwrap();
        assert!((d.lambda - c(1.0, 0.0)).norm() < 1e-14);
        let u = crate::symplectic::random_unitary::<f64, _>(2, &mut r);
        let h = JacobiElement::new(
            SpElement::from_blocks_unchecked(u.clone(), CMat::zeros(2, 2)),
            vec![Complex::zero(); 2],
            0.0,
        )
        .unwrap();
        let d = lambda_cocycle(&h, &P::origin(2), 4.0).unwrap();
        assert!((d.lambda - detpow(&u.adjoint(), -2.0).unwrap()).norm() < 1e-14);
        assert!(matches!(lambda_cocycle(&h, &x, 1.0), Err(Error::OddWeight(_))));
    }

    #[test]
    fn lambda_routes_agree() {
        let mut r = rng(5);
        for n in 1..=2 {
            for _ in 0..20 {
                let h = H::random(n, 0.5, 0.4, &mut r);
                let x = P::random(n, 0.4, 0.5, &mut r);
                let l1 = lambda1_regular(&h, &x).unwrap();
                let l7 = lambda1_tmatrix(&h, &x).unwrap();
                assert!((l1 - l7).norm() < 1e-10);
                let a = lambda_cocycle(&h, &x, 2.0).unwrap().lambda;
                let b = lambda_cocycle_ez(&h, &x, 2.0).unwrap();
                assert!((a - b).norm() < 1e-9 * a.norm());
            }
        }
        let x = P::random(2, 0.4, 0.5, &mut r);
        let (v, route) = lambda_cocycle_ez_unchecked(&H::identity(2), &x, 2.0).unwrap();
        assert_eq!(route, Lambda1Route::Regular);
        assert!((v - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let o = P::origin(2);
        assert_eq!(kernel(&o, &o, 3.0).unwrap(), c(1.0, 0.0));
        let mut r = rng(6);
        let mut x = P::random(2, 0.4, 0.5, &mut r);
        let mut y = P::random(2, 0.4, 0.5, &mut r);
        let kxy = kernel(&x, &y, 2.5).unwrap();
        assert!((kxy - kernel(&y, &x, 2.5).unwrap().conj()).norm() < 1e-12);
        x.z = vec![Complex::zero(); 2];
        y.z = vec![Complex::zero(); 2];
        let sk = crate::symplectic::sp_kernel(&y.w, &x.w, 2.5).unwrap();
        assert!((kernel(&x, &y, 2.5).unwrap() - sk).norm() < 1e-14);
    }

    #[test]
    fn kernel_n1_closed_form() {
        let x = p1(c(0.2, 0.1), c(0.1, -0.3));
        let y = p1(c(-0.1, 0.3), c(0.25, 0.1));
        let (z, w, xb, vb) = (x.z[0], x.w.w()[(0, 0)], y.z[0].conj(), y.w.w()[(0, 0)].conj());
        let k = 3.0;
        let d = c(1.0, 0.0) - w * vb;
        let expect = d.powf(-k / 2.0) * ((z * xb * 2.0 + vb * z * z + w * xb * xb) / (d * 2.0)).exp();
        assert!((kernel(&x, &y, k).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn kernel_gram_is_psd() {
        let mut r = rng(7);
        for n in 1..=2 {
            for k in [2.0, 4.0] {
                let pts: Vec<P> = (0..20).map(|_| P::random(n, 0.5, 0.5, &mut r)).collect();
                let g = CMat::from_fn(20, 20, |i, j| kernel(&pts[j], &pts[i], k).unwrap());
                let e = herm_eig(&g, 1e-10).unwrap();
                assert!(e.min_eval() >= -1e-9 * g.norm_fro());
            }
        }
    }

    #[test]
    fn potential_is_log_kernel() {
        assert_eq!(kahler_potential(&P::origin(2), 4.0).unwrap(), 0.0);
        let mut r = rng(8);
        for n in 1..=3 {
            let mut x = P::random(n, 0.5, 0.5, &mut r);
            let kd = kernel(&x, &x, 3.0).unwrap();
            assert!(kd.im.abs() < 1e-12 * kd.re && kd.re > 0.0);
            assert!((kd.re.ln() - kahler_potential(&x, 3.0).unwrap()).abs() < 1e-11);
            x.z = vec![Complex::zero(); n];
            let ld = crate::symplectic::log_det_gap(&x.w).unwrap();
            assert!((kahler_potential(&x, 3.0).unwrap() + 1.5 * ld).abs() < 1e-13);
        }
    }

    #[test]
    fn form_at_origin() {
        let f = kahler_form(&P::origin(2), 4.0).unwrap();
        let expect = CMat::from_real_diag(&[1.0, 1.0, 2.0, 4.0, 2.0]);
        assert!((&f - &expect).norm_fro() < 1e-15);
    }

    #[test]
    fn form_n1_closed_form() {
        let (z, w) = (c(0.3, -0.2), c(0.2, 0.4));
        let x = p1(z, w);
        let k = 4.0;
        let g = 1.0 - w.norm_sqr();
        let a0 = (z + z.conj() * w) / g;
        // A = dz + ᾱ₀ dw:  |A|²/g + (k/2)|dw|²/g²
        let expect = CMat::from_rows(&[
            vec![c(1.0 / g, 0.0), a0 / g],
            vec![a0.conj() / g, c(k / 2.0 / (g * g) + a0.norm_sqr() / g, 0.0)],
        ]);
        assert!((&kahler_form(&x, k).unwrap() - &expect).norm_max() < 1e-10);
    }

    #[test]
    fn form_matches_hessian_and_is_positive() {
        let mut r = rng(9);
        for n in 1..=2 {
            for _ in 0..5 {
                let x = P::random(n, 0.4, 0.5, &mut r);
                let fd = mixed_hessian(
                    |v| kahler_potential(&P::from_coords(n, v), 3.0).unwrap(),
                    &x.coords(),
                    1e-4,
                );
                let h = kahler_form(&x, 3.0).unwrap();
                assert!((&fd - &h).norm_max() < 1e-5 * (1.0 + h.norm_max()));
                assert!(herm_eig(&h, 1e-10).unwrap().min_eval() > 0.0);
            }
        }
    }

    #[test]
    fn form_and_density_are_invariant() {
        let mut r = rng(10);
        for n in 1..=2 {
            for _ in 0..3 {
                let h = H::random(n, 0.5, 0.3, &mut r);
                let x = P::random(n, 0.3, 0.4, &mut r);
                let hx = act(&h, &x).unwrap();
                let jac = holo_jacobian(
                    |v| act(&h, &P::from_coords(n, v)).unwrap().coords(),
                    &x.coords(),
                    1e-5,
                );
                let pulled = &(&jac.transpose() * &kahler_form(&hx, 3.0).unwrap()) * &jac.conj();
                let f0 = kahler_form(&x, 3.0).unwrap();
                assert!((&pulled - &f0).norm_max() < 1e-6 * (1.0 + f0.norm_max()));
                let dj = jac.det().unwrap().norm_sqr();
                assert!((density(&hx).unwrap() * dj / density(&x).unwrap() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&P::origin(2)).unwrap(), 1.0);
        let v = density(&p1(c(0.7, 0.0), c(0.5, 0.0))).unwrap();
        assert!((v - 0.75f64.powi(-3)).abs() < 1e-12);
    }

    #[test]
    fn measure_constant_values() {
        let pi = std::f64::consts::PI;
        for k in [4.5, 5.0, 6.0, 9.0] {
            let m = measure_constants(1, k).unwrap();
            assert!((m.lambda / ((k - 3.0) / (2.0 * pi * pi)) - 1.0).abs() < 1e-12);
        }
        assert!((measure_constants(1, 5.0).unwrap().lambda * pi * pi - 1.0).abs() < 1e-12);
        for (n, k) in [(2, 9.0f64), (3, 11.0), (4, 13.5)] {
            let m = measure_constants(n, k).unwrap();
            assert!((lambda_product(n, k) / m.lambda - 1.0).abs() < 1e-12);
            assert!((m.p - (k / 2.0 - n as f64 - 1.0) + 0.5).abs() < 1e-15);
        }
        assert!(measure_constants(2, 5.0).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_base_measure::<f64>(1, 6.0, 100, 7).unwrap();
        let b = sample_base_measure::<f64>(1, 6.0, 100, 7).unwrap();
        assert_eq!(a, b);
        let m = BaseMeasure::<f64>::new(1, 6.0).unwrap();
        let e1 = m.integrate(|_| c(1.0, 0.0), 20_000, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let e2 = pool.install(|| m.integrate(|_| c(1.0, 0.0), 20_000, 3).unwrap());
        assert_eq!(e1, e2);
    }

    #[test]
    fn normalization_coarse() {
        let m = BaseMeasure::<f64>::new(1, 6.0).unwrap();
        let e = m.integrate(|_| c(1.0, 0.0), 200_000, 11).unwrap();
        assert!((e.value.re - 1.0).abs() < 5.0 * e.stderr + 1e-3);
    }

    #[test]
    fn pik_examples() {
        let mut r = rng(12);
        let x = P::random(1, 0.3, 0.4, &mut r);
        let f = |p: &P| p.z[0] * p.z[0] + p.w.w()[(0, 0)] + c(1.0, 0.0);
        assert!((pik_apply(&H::identity(1), 2.0, f, &x).unwrap() - f(&x)).norm() < 1e-14);
        let h = H::random(1, 0.5, 0.3, &mut r);
        let one = pik_apply(&h, 2.0, |_| c(1.0, 0.0), &x).unwrap();
        assert!((one - lambda_full(&jacobi_inverse(&h), &x, 2.0).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn serde_shapes() {
        let x = p1(c(0.1, 0.2), c(0.3, 0.0));
        let s = serde_json::to_string(&x).unwrap();
        assert!(s.starts_with(r#"{"z":[[0.1,0.2]],"W":{"rows":1"#), "{s}");
        let back: P = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        let h = H::random(1, 0.3, 0.3, &mut rng(1));
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.starts_with(r#"{"g":{"a":"#));
        let back: H = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn compose_is_associative(s in 0u64..10_000, n in 1usize..=3) {
            let mut r = rng(s);
            let h: Vec<H> = (0..3).map(|_| H::random(n, 0.5, 0.5, &mut r)).collect();
            let a = jacobi_compose(&jacobi_compose(&h[0], &h[1]).unwrap(), &h[2]).unwrap();
            let b = jacobi_compose(&h[0], &jacobi_compose(&h[1], &h[2]).unwrap()).unwrap();
            prop_assert!(close(&a, &b, 1e-10));
        }

        #[test]
        fn act_is_left_action(s in 0u64..10_000, n in 1usize..=3) {
            let mut r = rng(s);
            let h1 = H::random(n, 0.5, 0.4, &mut r);
            let h2 = H::random(n, 0.5, 0.4, &mut r);
            let x = P::random(n, 0.4, 0.5, &mut r);
            let a = act(&h1, &act(&h2, &x).unwrap()).unwrap();
            let b = act(&jacobi_compose(&h1, &h2).unwrap(), &x).unwrap();
            prop_assert!(vsub(&a.z, &b.z).iter().all(|d| d.norm() < 1e-10));
            prop_assert!((a.w.w() - b.w.w()).norm_fro() < 1e-10);
        }

        #[test]
        fn lambda_is_multiplicative(s in 0u64..10_000, n in 1usize..=2, k in prop::sample::select(vec![2.0, 4.0])) {
            let mut r = rng(s);
            let h1 = H::random(n, 0.5, 0.4, &mut r);
            let h2 = H::random(n, 0.5, 0.4, &mut r);
            let x = P::random(n, 0.4, 0.5, &mut r);
            let h12 = jacobi_compose(&h1, &h2).unwrap();
            let lhs = lambda_full(&h12, &x, k).unwrap();
            let rhs = lambda_full(&h1, &act(&h2, &x).unwrap(), k).unwrap() * lambda_full(&h2, &x, k).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-9 * lhs.norm());
        }

        #[test]
        fn unitarity(s in 0u64..10_000, n in 1usize..=2, k in prop::sample::select(vec![2.0, 4.0])) {
            let mut r = rng(s);
            let h = H::random(n, 0.5, 0.4, &mut r);
            let x = P::random(n, 0.4, 0.5, &mut r);
            let d = lambda_cocycle(&h, &x, k).unwrap();
            let hx = CSPoint { z: d.z1.clone(), w: d.w1.clone() };
            let lhs = d.lambda.norm_sqr() * kernel(&hx, &hx, k).unwrap().re;
            let rhs = kernel(&x, &x, k).unwrap().re;
            prop_assert!((lhs / rhs - 1.0).abs() < 1e-9);
        }

        #[test]
        fn pik_is_homomorphism(s in 0u64..10_000) {
            let mut r = rng(s);
            let h1 = H::random(1, 0.4, 0.3, &mut r);
            let h2 = H::random(1, 0.4, 0.3, &mut r);
            let x = P::random(1, 0.3, 0.4, &mut r);
            let f = |p: &P| p.z[0] + p.w.w()[(0, 0)] * 2.0 + c(0.5, 0.0);
            let inner = |p: &P| pik_apply(&h2, 2.0, f, p).unwrap();
            let a = pik_apply(&h1, 2.0, inner, &x).unwrap();
            let b = pik_apply(&jacobi_compose(&h1, &h2).unwrap(), 2.0, f, &x).unwrap();
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn inverse_of_compose() {
        let mut r = rng(13);
        let h1 = H::random(2, 0.5, 0.4, &mut r);
        let h2 = H::random(2, 0.5, 0.4, &mut r);
        let a = jacobi_inverse(&jacobi_compose(&h1, &h2).unwrap());
        let b = jacobi_compose(&jacobi_inverse(&h2), &jacobi_inverse(&h1)).unwrap();
        assert!(close(&a, &b, 1e-11));
        assert!(dist_identity(&jacobi_compose(&h1, &jacobi_inverse(&h1)).unwrap().g.a().clone()) < 1e-11);
    }
}
