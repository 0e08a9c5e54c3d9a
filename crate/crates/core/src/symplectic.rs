//! `Sp(n, ℝ)` in the complex block realization `g = [[a, b], [b̄, ā]]`, its action on the
//! Siegel ball, decompositions, kernel, invariant geometry and normalization constants.

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matfun::{
    arctanhc_sq, cartan_blocks, check_symmetric, detpow, herm_eig, herm_func, inv_sqrt_psd,
    is_siegel, orthonormalize, principal_logdet, re, spectral_norm, sqrt_psd, tanhc_sq, CMat,
};
use crate::scalar::Real;

/// Top block row `(a, b)` of a symplectic element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpElement<T> {
    pub(crate) a: CMat<T>,
    pub(crate) b: CMat<T>,
}

impl<T: Real> SpElement<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            a: CMat::identity(n),
            b: CMat::zeros(n, n),
        }
    }

    /// Skips validation; callers must guarantee membership.
    pub fn from_blocks_unchecked(a: CMat<T>, b: CMat<T>) -> Self {
        Self { a, b }
    }

    pub fn a(&self) -> &CMat<T> {
        &self.a
    }

    pub fn b(&self) -> &CMat<T> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Largest Frobenius residual of `aa* − bb* = 1`, `abᵗ = baᵗ`, `a*a − bᵗb̄ = 1`, `aᵗb̄ = b*a`.
    pub fn residual(&self) -> T {
        let (a, b) = (&self.a, &self.b);
        let id = CMat::identity(a.rows());
        let r1 = (&(&(a * &a.adjoint()) - &(b * &b.adjoint())) - &id).norm_fro();
        let r2 = (&(a * &b.transpose()) - &(b * &a.transpose())).norm_fro();
        let r3 = (&(&(&a.adjoint() * a) - &(&b.transpose() * &b.conj())) - &id).norm_fro();
        let r4 = (&(&a.transpose() * &b.conj()) - &(&b.adjoint() * a)).norm_fro();
        r1.max(r2).max(r3).max(r4)
    }

    /// Full `2n × 2n` matrix `[[a, b], [b̄, ā]]`.
    pub fn matrix(&self) -> CMat<T> {
        CMat::from_blocks(&self.a, &self.b, &self.b.conj(), &self.a.conj())
    }

    /// `g·α = aα + bᾱ`.
    pub fn act_vec(&self, alpha: &[Complex<T>]) -> Vec<Complex<T>> {
        let ac: Vec<_> = alpha.iter().map(Complex::conj).collect();
        crate::matfun::vadd(&self.a.matvec(alpha), &self.b.matvec(&ac))
    }
}

/// Validates `(a, b)` against the four block identities.
pub fn sp_new<T: Real>(a: CMat<T>, b: CMat<T>, tol: T) -> Result<SpElement<T>> {
    if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "blocks {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let g = SpElement { a, b };
    let r = g.residual();
    if !(r <= tol) {
        return Err(Error::NotSymplectic {
            residual: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(g)
}

/// `(a*, −bᵗ)`.
pub fn sp_inverse<T: Real>(g: &SpElement<T>) -> SpElement<T> {
    SpElement {
        a: g.a.adjoint(),
        b: -g.b.transpose(),
    }
}

/// Block product `g₁ g₂`.
pub fn sp_compose<T: Real>(g1: &SpElement<T>, g2: &SpElement<T>) -> Result<SpElement<T>> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch("composing different n".into()));
    }
    let a = &(&g1.a * &g2.a) + &(&g1.b * &g2.b.conj());
    let b = &(&g1.a * &g2.b) + &(&g1.b * &g2.a.conj());
    let g = SpElement { a, b };
    let scale = T::one() + g.a.norm_fro() * g.a.norm_fro();
    let r = g.residual();
    if r > T::lit(10.0) * T::default_tol() * scale {
        return Err(Error::NotSymplectic {
            residual: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(g)
}

/// `Y = bā⁻¹`, `Y′ = ā⁻¹b̄`, `δ = ā`, `γ = (a*)⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussFactors<T> {
    #[serde(rename = "Y")]
    pub y: CMat<T>,
    #[serde(rename = "Yp")]
    pub yp: CMat<T>,
    pub gamma: CMat<T>,
    pub delta: CMat<T>,
}

impl<T: Real> GaussFactors<T> {
    /// `[[1, Y], [0, 1]]·diag(γ, δ)·[[1, 0], [Y′, 1]]`.
    pub fn reassemble(&self) -> CMat<T> {
        let yd = &self.y * &self.delta;
        let dyp = &self.delta * &self.yp;
        let tl = &self.gamma + &(&yd * &self.yp);
        CMat::from_blocks(&tl, &yd, &dyp, &self.delta)
    }
}

pub fn gauss_decompose<T: Real>(g: &SpElement<T>) -> Result<GaussFactors<T>> {
    let abar = g.a.conj();
    let lu = abar.lu()?;
    let y = abar.solve_right(&g.b)?;
    let yp = lu.solve(&g.b.conj());
    let gamma = g.a.adjoint().inverse()?;
    Ok(GaussFactors {
        y,
        yp,
        gamma,
        delta: abar,
    })
}

/// `g = exp([[0, Z], [Z̄, 0]])·diag(v, v̄)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CartanFactors<T> {
    #[serde(rename = "Z")]
    pub z: CMat<T>,
    pub v: CMat<T>,
}

impl<T: Real> CartanFactors<T> {
    pub fn synthesize(&self) -> Result<SpElement<T>> {
        let (m, n) = cartan_blocks(&self.z)?;
        Ok(SpElement {
            a: &m * &self.v,
            b: &n * &self.v.conj(),
        })
    }
}

pub fn cartan_decompose<T: Real>(g: &SpElement<T>) -> Result<CartanFactors<T>> {
    let y = g.a.conj().solve_right(&g.b)?.symmetrized();
    let z = z_of_y(&y)?;
    let (m, _) = cartan_blocks(&z)?;
    let v = m.solve(&g.a)?;
    Ok(CartanFactors { z, v })
}

fn z_of_y<T: Real>(y: &CMat<T>) -> Result<CMat<T>> {
    let yy = y * &y.adjoint();
    let f = herm_func(&yy, |x| arctanhc_sq(x.max(T::zero()))).map_err(|_| {
        Error::DomainViolation("‖Y‖ ≥ 1: point is not inside the Siegel ball".into())
    })?;
    Ok((&f * y).symmetrized())
}

/// Symmetric `W` with `1 − WW̄ ≻ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SiegelPoint<T> {
    #[serde(rename = "W")]
    pub(crate) w: CMat<T>,
}

impl<T: Real> SiegelPoint<T> {
    pub fn new(w: CMat<T>, tol: T) -> Result<Self> {
        check_symmetric(&w)?;
        if !is_siegel(&w, tol) {
            return Err(Error::DomainViolation("1 − WW̄ is not positive definite".into()));
        }
        Ok(Self { w: w.symmetrized() })
    }

    pub fn origin(n: usize) -> Self {
        Self { w: CMat::zeros(n, n) }
    }

    pub fn from_matrix_unchecked(w: CMat<T>) -> Self {
        Self { w }
    }

    pub fn w(&self) -> &CMat<T> {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    /// `1 − WW̄`.
    pub fn gap(&self) -> CMat<T> {
        &CMat::identity(self.dim()) - &(&self.w * &self.w.conj())
    }
}

/// `W = tanhc(√(ZZ̄))·Z`.
pub fn w_of_z<T: Real>(z: &CMat<T>) -> Result<SiegelPoint<T>> {
    check_symmetric(z)?;
    let zz = z * &z.adjoint();
    let f = herm_func(&zz, |x| tanhc_sq(x.max(T::zero())))?;
    Ok(SiegelPoint {
        w: (&f * z).symmetrized(),
    })
}

/// `Z = arctanhc(√(WW*))·W`.
pub fn z_of_w<T: Real>(w: &SiegelPoint<T>) -> Result<CMat<T>> {
    z_of_y(&w.w)
}

/// `η = log(1 − WW*)`.
pub fn eta<T: Real>(w: &SiegelPoint<T>) -> Result<CMat<T>> {
    let gap = &CMat::identity(w.dim()) - &(&w.w * &w.w.adjoint());
    herm_func(&gap, |x| if x > T::zero() { x.ln() } else { T::nan() })
}

/// `g·W = (aW + b)(b̄W + ā)⁻¹`.
pub fn moebius<T: Real>(g: &SpElement<T>, w: &SiegelPoint<T>) -> Result<SiegelPoint<T>> {
    let num = &(&g.a * &w.w) + &g.b;
    let den = &(&g.b.conj() * &w.w) + &g.a.conj();
    Ok(SiegelPoint {
        w: den.solve_right(&num)?.symmetrized(),
    })
}

/// The left-factored form `(Wb* + a*)⁻¹(bᵗ + Waᵗ)`.
pub fn moebius_alt<T: Real>(g: &SpElement<T>, w: &SiegelPoint<T>) -> Result<CMat<T>> {
    let den = &(&w.w * &g.b.adjoint()) + &g.a.adjoint();
    let num = &g.b.transpose() + &(&w.w * &g.a.transpose());
    den.solve(&num)
}

/// Cartan synthesis with `v = 1`: the boost carrying `0` to `W`.
pub fn sp_of<T: Real>(w: &SiegelPoint<T>) -> Result<SpElement<T>> {
    let gap = &CMat::identity(w.dim()) - &(&w.w * &w.w.adjoint());
    let m = inv_sqrt_psd(&gap)?;
    let b = &m * &w.w;
    Ok(SpElement { a: m, b })
}

/// Result of composing two ball boosts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BallComposition<T> {
    pub w3: SiegelPoint<T>,
    pub v: CMat<T>,
    pub detv: Complex<T>,
}

/// `sp_of(W₁)·sp_of(W₂) = sp_of(W₃)·diag(v, v̄)`.
pub fn ball_compose<T: Real>(w1: &SiegelPoint<T>, w2: &SiegelPoint<T>) -> Result<BallComposition<T>> {
    let n = w1.dim();
    let id = CMat::identity(n);
    let (a, b) = (&w1.w, &w2.w);
    let left = inv_sqrt_psd(&(&id - &(a * &a.adjoint())))?;
    let right = sqrt_psd(&(&id - &(&a.adjoint() * a)))?;
    let mid = (&id + &(&a.adjoint() * b)).inverse()?;
    let w3 = &(&(&left * &(a + b)) * &mid) * &right;

    let m2 = inv_sqrt_psd(&(&id - &(b * &b.adjoint())))?;
    let m = &(&left * &(&id + &(a * &b.adjoint()))) * &m2;
    let v = &inv_sqrt_psd(&(&m * &m.adjoint()))? * &m;

    let d = (&id + &(a * &b.adjoint())).det()?;
    let detv = (d / d.conj()).sqrt();
    Ok(BallComposition {
        w3: SiegelPoint { w: w3.symmetrized() },
        v,
        detv,
    })
}

/// `det(1 − Z′Z*)^{−k/2}`, the overlap `(e_Z, e_{Z′})`.
pub fn sp_kernel<T: Real>(z: &SiegelPoint<T>, zp: &SiegelPoint<T>, k: T) -> Result<Complex<T>> {
    let m = &CMat::identity(z.dim()) - &(&zp.w * &z.w.adjoint());
    detpow(&m, -k / T::lit(2.0))
}

/// Holomorphic multiplier `J(g, W) = det(a* + Wb*)^{k/2}` of the kernel transformation.
pub fn sp_multiplier<T: Real>(g: &SpElement<T>, w: &SiegelPoint<T>, k: T) -> Result<Complex<T>> {
    let m = &g.a.adjoint() + &(&w.w * &g.b.adjoint());
    detpow(&m, k / T::lit(2.0))
}

/// Independent coordinates `w_{ij}`, `i ≤ j`, in row-major order.
pub fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// `∂W/∂w_{ij}`: `e_ij + e_ji`, or `e_ii` on the diagonal.
pub(crate) fn sym_unit<T: Real>(n: usize, (i, j): (usize, usize)) -> CMat<T> {
    let mut e = CMat::zeros(n, n);
    e[(i, j)] = re(T::one());
    e[(j, i)] = re(T::one());
    e
}

/// Coefficients `H_{IJ}` of `ω` in `dw_I ∧ dw̄_J`: `(k/2)·Tr(M E_I M̄ E_J)` with `M = (1 − WW̄)⁻¹`.
pub fn sp_two_form<T: Real>(w: &SiegelPoint<T>, k: T) -> Result<CMat<T>> {
    let n = w.dim();
    let m = w.gap().inverse()?;
    let mb = m.conj();
    let pairs = sym_pairs(n);
    let units: Vec<CMat<T>> = pairs.iter().map(|&p| sym_unit(n, p)).collect();
    let half_k = re(k / T::lit(2.0));
    Ok(CMat::from_fn(pairs.len(), pairs.len(), |i, j| {
        (&(&(&m * &units[i]) * &mb) * &units[j]).trace() * half_k
    }))
}

/// `det(1 − WW̄)^{−(n+1)}`.
pub fn sp_density<T: Real>(w: &SiegelPoint<T>) -> Result<T> {
    let n = w.dim();
    Ok(detpow(&w.gap(), -T::from_usize(n + 1).unwrap())?.re)
}

fn ln_gamma_t<T: Real>(x: T) -> T {
    T::lit(ln_gamma(x.to_f64().expect("finite")))
}

/// Product form `2ⁿ π^{n(n+1)/2} ∏ Γ(2p+2i)/Γ(2p+n+i+1)`.
pub fn jn_product<T: Real>(p: T, n: usize) -> T {
    let two = T::lit(2.0);
    let nn = T::from_usize(n).unwrap();
    let log = (1..=n).fold(T::zero(), |acc, i| {
        let i = T::from_usize(i).unwrap();
        acc + ln_gamma_t(two * p + two * i) - ln_gamma_t(two * p + nn + i + T::one())
    });
    two.powi(n as i32) * T::PI().powf(nn * (nn + T::one()) / two) * log.exp()
}

/// Ratio form `π^{n(n+1)/2}/((p+1)⋯(p+n)) · Γ(2p+3)⋯Γ(2p+2n−1) / (Γ(2p+n+2)⋯Γ(2p+2n))`.
pub fn jn_ratio<T: Real>(p: T, n: usize) -> T {
    let two = T::lit(2.0);
    let nn = T::from_usize(n).unwrap();
    let poch = (1..=n).fold(T::one(), |acc, i| acc * (p + T::from_usize(i).unwrap()));
    let num = (1..n).fold(T::zero(), |acc, i| {
        acc + ln_gamma_t(two * p + T::from_usize(2 * i + 1).unwrap())
    });
    let den = (n + 2..=2 * n).fold(T::zero(), |acc, j| {
        acc + ln_gamma_t(two * p + T::from_usize(j).unwrap())
    });
    T::PI().powf(nn * (nn + T::one()) / two) / poch * (num - den).exp()
}

/// `∫_{𝒟_n} det(1 − WW̄)^p dW`; both closed forms are evaluated and must agree.
pub fn jn<T: Real>(p: T, n: usize) -> Result<T> {
    if !(p > -T::one()) {
        return Err(Error::OutOfDomain(format!("J_n(p) needs p > −1, got {p}")));
    }
    let a = jn_product(p, n);
    let b = jn_ratio(p, n);
    let gap = ((a - b) / a).abs();
    if gap > T::lit(1e3) * T::epsilon() {
        return Err(Error::FormMismatch {
            gap: gap.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(a)
}

/// `Λ₁ = 2⁻ⁿ π^{−n(n+1)/2} ∏ Γ(k−i)/Γ(k−2i)`, checked against `1/J_n(k/2 − n − 1)`.
pub fn lambda1<T: Real>(k: T, n: usize) -> Result<T> {
    let two = T::lit(2.0);
    let nn = T::from_usize(n).unwrap();
    if !(k > two * nn) {
        return Err(Error::OutOfDomain(format!("Λ₁ needs k > 2n, got k = {k}")));
    }
    let log = (1..=n).fold(T::zero(), |acc, i| {
        let i = T::from_usize(i).unwrap();
        acc + ln_gamma_t(k - i) - ln_gamma_t(k - two * i)
    });
    let direct = two.powi(-(n as i32)) * T::PI().powf(-nn * (nn + T::one()) / two) * log.exp();
    let via_j = jn(k / two - nn - T::one(), n)?.recip();
    let gap = ((direct - via_j) / via_j).abs();
    if gap > T::lit(1e3) * T::epsilon() {
        return Err(Error::FormMismatch {
            gap: gap.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(direct)
}

/// `k ∈ {0, 1, …, n−1} ∪ (n−1, ∞)`.
pub fn wallach_admissible<T: Real>(k: T, n: usize) -> bool {
    let top = T::from_usize(n).unwrap() - T::one();
    k > top || (k >= T::zero() && k.fract() == T::zero())
}

fn even_weight<T: Real>(k: T) -> Result<()> {
    if (k / T::lit(2.0)).fract() != T::zero() {
        return Err(Error::OddWeight(k.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// `det(a − Wb̄)^{−k/2}·f((a − Wb̄)⁻¹(−b + Wā))`; `k` must be an even integer.
pub fn sp_rep_apply<T: Real>(
    g: &SpElement<T>,
    k: T,
    f: impl Fn(&SiegelPoint<T>) -> Complex<T>,
    w: &SiegelPoint<T>,
) -> Result<Complex<T>> {
    even_weight(k)?;
    sp_rep_apply_unchecked(g, k, f, w)
}

/// As [`sp_rep_apply`] for any real `k`, using the principal branch of the determinant power.
pub fn sp_rep_apply_unchecked<T: Real>(
    g: &SpElement<T>,
    k: T,
    f: impl Fn(&SiegelPoint<T>) -> Complex<T>,
    w: &SiegelPoint<T>,
) -> Result<Complex<T>> {
    let den = &g.a - &(&w.w * &g.b.conj());
    let num = &(&w.w * &g.a.conj()) - &g.b;
    let pre = SiegelPoint {
        w: den.solve(&num)?.symmetrized(),
    };
    Ok(detpow(&den, -k / T::lit(2.0))? * f(&pre))
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(x), T::lit(y))
}

/// Symmetric matrix with Gaussian entries times `scale`.
pub fn random_symmetric<T: Real, R: Rng + ?Sized>(n: usize, scale: T, rng: &mut R) -> CMat<T> {
    CMat::from_fn(n, n, |_, _| gaussian::<T, R>(rng) * scale).symmetrized()
}

pub fn random_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat<T> {
    loop {
        let g = CMat::from_fn(n, n, |_, _| gaussian::<T, R>(rng));
        if let Ok(q) = orthonormalize(&g) {
            return q;
        }
    }
}

/// Cartan synthesis from a random symmetric `Z` and a random unitary `v`.
pub fn sp_random<T: Real, R: Rng + ?Sized>(n: usize, scale: T, rng: &mut R) -> SpElement<T> {
    let z = random_symmetric(n, scale, rng);
    let v = random_unitary(n, rng);
    CartanFactors { z, v }
        .synthesize()
        .expect("symmetric input by construction")
}

pub fn sp_random_seeded<T: Real>(n: usize, scale: T, seed: u64) -> SpElement<T> {
    sp_random(n, scale, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Image of the origin under a random element.
pub fn siegel_random<T: Real, R: Rng + ?Sized>(n: usize, scale: T, rng: &mut R) -> SiegelPoint<T> {
    w_of_z(&random_symmetric(n, scale, rng)).expect("symmetric input by construction")
}

/// Smallest eigenvalue of `1 − WW*`.
pub fn ball_margin<T: Real>(w: &SiegelPoint<T>) -> Result<T> {
    let gap = &CMat::identity(w.dim()) - &(&w.w * &w.w.adjoint());
    Ok(herm_eig(&gap, T::default_tol())?.min_eval())
}

/// Spectral norm of `W`.
pub fn ball_radius<T: Real>(w: &SiegelPoint<T>) -> Result<T> {
    spectral_norm(&w.w)
}

/// `log det(1 − WW̄)` (real for interior points).
pub fn log_det_gap<T: Real>(w: &SiegelPoint<T>) -> Result<T> {
    Ok(principal_logdet(&w.gap())?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{holo_jacobian, mixed_hessian, sym_coords, sym_from_coords};
    use crate::matfun::dist_identity;
    use proptest::prelude::*;

    type M = CMat<f64>;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    fn boost(r: f64) -> SpElement<f64> {
        sp_new(M::scalar(c(r.cosh())), M::scalar(c(r.sinh())), 1e-12).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sp_new_examples() {
        assert!(sp_new(M::identity(2), M::zeros(2, 2), 1e-12).is_ok());
        boost(0.3);
        let bad = sp_new(M::scalar(c(1.0)), M::scalar(c(0.5)), 1e-10);
        assert!(matches!(bad, Err(Error::NotSymplectic { .. })));
        let mut r = rng(0);
        for n in 1..=3 {
            for _ in 0..50 {
                let g = sp_random::<f64, _>(n, 0.7, &mut r);
                assert!(g.residual() <= 1e-10);
            }
        }
    }

    #[test]
    fn inverse_and_compose() {
        assert_eq!(sp_inverse(&SpElement::<f64>::identity(2)), SpElement::identity(2));
        let inv = sp_inverse(&boost(0.3));
        assert!((inv.b[(0, 0)] + c(0.3f64.sinh())).norm() < 1e-15);
        let mut r = rng(1);
        let g = sp_random::<f64, _>(3, 0.6, &mut r);
        let e = sp_compose(&g, &sp_inverse(&g)).unwrap();
        assert!(dist_identity(&e.a) < 1e-11 && e.b.norm_fro() < 1e-11);
        let id = sp_compose(&g, &SpElement::identity(3)).unwrap();
        assert!((&id.a - &g.a).norm_fro() < 1e-15);
    }

    #[test]
    fn gauss_examples() {
        let f = gauss_decompose(&SpElement::<f64>::identity(2)).unwrap();
        assert_eq!(f.y, M::zeros(2, 2));
        assert_eq!(f.gamma, M::identity(2));
        let f = gauss_decompose(&boost(0.3)).unwrap();
        assert!((f.y[(0, 0)] - c(0.3f64.tanh())).norm() < 1e-15);
        let mut r = rng(2);
        let g = sp_random::<f64, _>(3, 0.7, &mut r);
        let f = gauss_decompose(&g).unwrap();
        assert!((&f.reassemble() - &g.matrix()).norm_fro() < 1e-10);
        assert!(f.y.asymmetry() < 1e-12);
        let gap = &M::identity(3) - &(&f.y * &f.y.adjoint());
        let aa = (&g.a * &g.a.adjoint()).inverse().unwrap();
        assert!((&gap - &aa).norm_fro() < 1e-10);
    }

    #[test]
    fn cartan_examples() {
        let f = cartan_decompose(&SpElement::<f64>::identity(2)).unwrap();
        assert!(f.z.norm_fro() < 1e-15 && dist_identity(&f.v) < 1e-15);
        let f = cartan_decompose(&boost(0.3)).unwrap();
        assert!((f.z[(0, 0)] - c(0.3)).norm() < 1e-14);
        assert!((f.v[(0, 0)] - c(1.0)).norm() < 1e-14);
        let mut r = rng(3);
        let g = sp_random::<f64, _>(3, 0.7, &mut r);
        let f = cartan_decompose(&g).unwrap();
        let back = f.synthesize().unwrap();
        assert!((&back.matrix() - &g.matrix()).norm_fro() < 1e-9);
        assert!(dist_identity(&(&f.v * &f.v.adjoint())) < 1e-10);
    }

    #[test]
    fn coordinate_maps() {
        let w = w_of_z(&M::scalar(c(0.4))).unwrap();
        assert!((w.w[(0, 0)] - c(0.4f64.tanh())).norm() < 1e-15);
        assert!(z_of_w(&SiegelPoint::<f64>::origin(2)).unwrap().norm_fro() == 0.0);
        let mut r = rng(4);
        for _ in 0..20 {
            let z = random_symmetric::<f64, _>(2, 0.8, &mut r);
            let w = w_of_z(&z).unwrap();
            assert!(ball_radius(&w).unwrap() < 1.0);
            assert!((&z_of_w(&w).unwrap() - &z).norm_fro() < 1e-11);
        }
        let edge = SiegelPoint::from_matrix_unchecked(M::scalar(c(1.0)));
        assert!(matches!(z_of_w(&edge), Err(Error::DomainViolation(_))));
        let e = eta(&SiegelPoint::from_matrix_unchecked(M::scalar(c(0.6)))).unwrap();
        assert!((e[(0, 0)] - c(0.64f64.ln())).norm() < 1e-15);
    }

    #[test]
    fn moebius_examples() {
        let mut r = rng(5);
        let w = siegel_random::<f64, _>(2, 0.5, &mut r);
        let same = moebius(&SpElement::identity(2), &w).unwrap();
        assert!((&same.w - &w.w).norm_fro() < 1e-15);
        let u = random_unitary::<f64, _>(2, &mut r);
        let rot = SpElement::from_blocks_unchecked(u.clone(), M::zeros(2, 2));
        let img = moebius(&rot, &w).unwrap();
        assert!((&img.w - &(&(&u * &w.w) * &u.transpose())).norm_fro() < 1e-14);
        for _ in 0..20 {
            let g = sp_random::<f64, _>(3, 0.6, &mut r);
            let w = siegel_random::<f64, _>(3, 0.6, &mut r);
            let a = moebius(&g, &w).unwrap();
            assert!((&a.w - &moebius_alt(&g, &w).unwrap()).norm_fro() < 1e-11);
            assert!(is_siegel(&a.w, 1e-12));
        }
    }

    #[test]
    fn ball_compose_examples() {
        let mut r = rng(6);
        let w = siegel_random::<f64, _>(2, 0.5, &mut r);
        let o = SiegelPoint::origin(2);
        let bc = ball_compose(&o, &w).unwrap();
        assert!((&bc.w3.w - &w.w).norm_fro() < 1e-14 && dist_identity(&bc.v) < 1e-14);
        let bc = ball_compose(&w, &o).unwrap();
        assert!((&bc.w3.w - &w.w).norm_fro() < 1e-14 && (bc.detv - c(1.0)).norm() < 1e-14);
        let p = SiegelPoint::from_matrix_unchecked(M::scalar(c(0.3)));
        let bc = ball_compose(&p, &p).unwrap();
        assert!((bc.w3.w[(0, 0)] - c(0.6 / 1.09)).norm() < 1e-15);
        assert!((bc.detv - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn ball_compose_matches_product() {
        let mut r = rng(7);
        for n in 1..=3 {
            let w1 = siegel_random::<f64, _>(n, 0.5, &mut r);
            let w2 = siegel_random::<f64, _>(n, 0.5, &mut r);
            let bc = ball_compose(&w1, &w2).unwrap();
            let g = sp_compose(&sp_of(&w1).unwrap(), &sp_of(&w2).unwrap()).unwrap();
            let w3 = g.a.conj().solve_right(&g.b).unwrap();
            assert!((&bc.w3.w - &w3).norm_fro() < 1e-9);
            let f = cartan_decompose(&g).unwrap();
            assert!((&bc.v - &f.v).norm_fro() < 1e-9);
            assert!((bc.detv.norm() - 1.0).abs() < 1e-10);
            assert!((bc.detv - f.v.det().unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn kernel_examples() {
        let o = SiegelPoint::<f64>::origin(2);
        assert_eq!(sp_kernel(&o, &o, 3.0).unwrap(), c(1.0));
        let p = SiegelPoint::from_matrix_unchecked(M::scalar(c(0.6)));
        assert!((sp_kernel(&p, &p, 4.0).unwrap() - c(2.44140625)).norm() < 1e-12);
        let mut r = rng(8);
        let x = siegel_random::<f64, _>(3, 0.5, &mut r);
        let y = siegel_random::<f64, _>(3, 0.5, &mut r);
        let kxy = sp_kernel(&x, &y, 2.5).unwrap();
        assert!((kxy - sp_kernel(&y, &x, 2.5).unwrap().conj()).norm() < 1e-12);
    }

    #[test]
    fn kernel_transformation_law() {
        let mut r = rng(9);
        for n in 1..=3 {
            for _ in 0..10 {
                let g = sp_random::<f64, _>(n, 0.5, &mut r);
                let x = siegel_random::<f64, _>(n, 0.4, &mut r);
                let y = siegel_random::<f64, _>(n, 0.4, &mut r);
                let k = 4.0;
                let lhs = sp_kernel(&moebius(&g, &x).unwrap(), &moebius(&g, &y).unwrap(), k).unwrap();
                let rhs = sp_multiplier(&g, &y, k).unwrap()
                    * sp_kernel(&x, &y, k).unwrap()
                    * sp_multiplier(&g, &x, k).unwrap().conj();
                assert!((lhs - rhs).norm() < 1e-9 * lhs.norm());
            }
        }
    }

    #[test]
    fn two_form_origin_and_scalar() {
        let f = sp_two_form(&SiegelPoint::<f64>::origin(1), 4.0).unwrap();
        assert!((f[(0, 0)] - c(2.0)).norm() < 1e-15);
        let f = sp_two_form(&SiegelPoint::<f64>::origin(2), 4.0).unwrap();
        // diagonal coordinates carry k/2, the off-diagonal one k
        assert!((f[(0, 0)] - c(2.0)).norm() < 1e-15);
        assert!((f[(1, 1)] - c(4.0)).norm() < 1e-15);
        assert!((f[(2, 2)] - c(2.0)).norm() < 1e-15);
        let w = SiegelPoint::from_matrix_unchecked(M::scalar(Complex::new(0.3, 0.2)));
        let v = 4.0 / 2.0 / (1.0f64 - 0.13).powi(2);
        assert!((sp_two_form(&w, 4.0).unwrap()[(0, 0)] - c(v)).norm() < 1e-14);
    }

    #[test]
    fn two_form_is_positive_and_matches_hessian() {
        let mut r = rng(10);
        for _ in 0..100 {
            let w = siegel_random::<f64, _>(2, 0.6, &mut r);
            let h = sp_two_form(&w, 4.0).unwrap();
            assert!(herm_eig(&h, 1e-10).unwrap().min_eval() > 0.0);
        }
        for n in 1..=2 {
            let w = siegel_random::<f64, _>(n, 0.5, &mut r);
            let fd = mixed_hessian(
                |v| -(4.0 / 2.0) * log_det_gap(&SiegelPoint::from_matrix_unchecked(sym_from_coords(n, v))).unwrap(),
                &sym_coords(w.w()),
                1e-4,
            );
            let h = sp_two_form(&w, 4.0).unwrap();
            assert!((&fd - &h).norm_max() < 1e-6 * h.norm_max());
        }
    }

    #[test]
    fn density_and_invariance() {
        assert_eq!(sp_density(&SiegelPoint::<f64>::origin(2)).unwrap(), 1.0);
        let p = SiegelPoint::from_matrix_unchecked(M::scalar(c(0.6)));
        assert!((sp_density(&p).unwrap() - 2.44140625).abs() < 1e-12);
        let mut r = rng(11);
        for n in 1..=2 {
            let g = sp_random::<f64, _>(n, 0.5, &mut r);
            let w = siegel_random::<f64, _>(n, 0.5, &mut r);
            let jac = holo_jacobian(
                |v| sym_coords(moebius(&g, &SiegelPoint::from_matrix_unchecked(sym_from_coords(n, v))).unwrap().w()),
                &sym_coords(w.w()),
                1e-5,
            );
            let dj = jac.det().unwrap().norm_sqr();
            let q1 = sp_density(&moebius(&g, &w).unwrap()).unwrap();
            assert!((q1 * dj / sp_density(&w).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn jn_values() {
        let pi = std::f64::consts::PI;
        assert!((jn(0.0, 1).unwrap() / pi - 1.0).abs() < 1e-12);
        assert!((jn(2.0, 1).unwrap() / (pi / 3.0) - 1.0).abs() < 1e-12);
        let p: f64 = 1.3;
        let v = pi.powi(3) / ((p + 1.0) * (p + 2.0) * (2.0 * p + 3.0));
        assert!((jn(p, 2).unwrap() / v - 1.0).abs() < 1e-13);
        assert!(matches!(jn(-1.0, 2), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn lambda1_values() {
        let pi = std::f64::consts::PI;
        assert!((lambda1(4.0, 1).unwrap() * pi - 1.0).abs() < 1e-12);
        assert!((lambda1(6.0, 1).unwrap() * pi / 2.0 - 1.0).abs() < 1e-12);
        let k: f64 = 8.0;
        let closed = (k - 2.0) * (k - 3.0) * (k - 4.0) / (4.0 * pi.powi(3));
        assert!((lambda1(k, 2).unwrap() / closed - 1.0).abs() < 1e-12);
        assert!(lambda1(4.0, 2).is_err());
    }

    #[test]
    fn wallach() {
        assert!(wallach_admissible(3.0, 2));
        assert!(!wallach_admissible(0.5, 2));
        assert!(wallach_admissible(0.0, 2));
        assert!(wallach_admissible(1.0, 3));
        assert!(!wallach_admissible(1.5, 3));
        assert!(!wallach_admissible(-1.0, 1));
    }

    #[test]
    fn rep_examples() {
        let mut r = rng(12);
        let w = siegel_random::<f64, _>(2, 0.5, &mut r);
        let f = |p: &SiegelPoint<f64>| p.w[(0, 1)] + c(2.0) * p.w[(0, 0)];
        let v = sp_rep_apply(&SpElement::identity(2), 4.0, f, &w).unwrap();
        assert!((v - f(&w)).norm() < 1e-15);
        let u = random_unitary::<f64, _>(2, &mut r);
        let rot = SpElement::from_blocks_unchecked(u.clone(), M::zeros(2, 2));
        let v = sp_rep_apply(&rot, 4.0, |_| c(1.0), &SiegelPoint::origin(2)).unwrap();
        assert!((v - detpow(&u, -2.0).unwrap()).norm() < 1e-14);
        assert!(matches!(sp_rep_apply(&rot, 3.0, |_| c(1.0), &w), Err(Error::OddWeight(_))));
        assert!(sp_rep_apply_unchecked(&rot, 3.0, |_| c(1.0), &w).is_ok());
    }

    #[test]
    fn multiplier_cocycle() {
        let mut r = rng(13);
        for n in 1..=3 {
            let g1 = sp_random::<f64, _>(n, 0.5, &mut r);
            let g2 = sp_random::<f64, _>(n, 0.5, &mut r);
            let w = siegel_random::<f64, _>(n, 0.5, &mut r);
            let g12 = sp_compose(&g1, &g2).unwrap();
            let k = 2.0;
            let lhs = sp_multiplier(&g12, &w, k).unwrap();
            let rhs = sp_multiplier(&g1, &moebius(&g2, &w).unwrap(), k).unwrap()
                * sp_multiplier(&g2, &w, k).unwrap();
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
            // the representation is a homomorphism for even k
            let f = |p: &SiegelPoint<f64>| p.w[(0, 0)] + c(0.5);
            let inner = |p: &SiegelPoint<f64>| sp_rep_apply(&g2, k, f, p).unwrap();
            let a = sp_rep_apply(&g1, k, inner, &w).unwrap();
            let b = sp_rep_apply(&g12, k, f, &w).unwrap();
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn random_is_deterministic() {
        let a = sp_random_seeded::<f64>(3, 0.5, 42);
        let b = sp_random_seeded::<f64>(3, 0.5, 42);
        assert_eq!(a, b);
        let u = sp_random_seeded::<f64>(2, 0.0, 1);
        assert!(u.b.norm_fro() == 0.0 && u.residual() < 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let g = sp_random_seeded::<f64>(2, 0.5, 1);
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.starts_with(r#"{"a":{"rows":2"#));
        let back: SpElement<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn moebius_is_left_action(s1 in 0u64..1000, n in 1usize..=3) {
            let mut r = rng(s1);
            let g1 = sp_random::<f64, _>(n, 0.6, &mut r);
            let g2 = sp_random::<f64, _>(n, 0.6, &mut r);
            let w = siegel_random::<f64, _>(n, 0.6, &mut r);
            let lhs = moebius(&g1, &moebius(&g2, &w).unwrap()).unwrap();
            let rhs = moebius(&sp_compose(&g1, &g2).unwrap(), &w).unwrap();
            prop_assert!((&lhs.w - &rhs.w).norm_fro() < 1e-10);
        }

        #[test]
        fn compose_is_associative(s in 0u64..1000, n in 1usize..=3) {
            let mut r = rng(s);
            let g: Vec<_> = (0..3).map(|_| sp_random::<f64, _>(n, 0.6, &mut r)).collect();
            let l = sp_compose(&sp_compose(&g[0], &g[1]).unwrap(), &g[2]).unwrap();
            let rr = sp_compose(&g[0], &sp_compose(&g[1], &g[2]).unwrap()).unwrap();
            prop_assert!((&l.matrix() - &rr.matrix()).norm_fro() < 1e-11);
        }

        #[test]
        fn decompositions_round_trip(s in 0u64..1000, n in 1usize..=3) {
            let g = sp_random_seeded::<f64>(n, 0.7, s);
            let gf = gauss_decompose(&g).unwrap();
            prop_assert!((&gf.reassemble() - &g.matrix()).norm_fro() < 1e-9);
            let cf = cartan_decompose(&g).unwrap();
            prop_assert!((&cf.synthesize().unwrap().matrix() - &g.matrix()).norm_fro() < 1e-9);
        }

        #[test]
        fn jn_forms_agree(p in -0.99f64..20.0, n in 1usize..=4) {
            let a = jn_product(p, n);
            let b = jn_ratio(p, n);
            prop_assert!(((a - b) / a).abs() < 1e-12);
        }
    }
}
