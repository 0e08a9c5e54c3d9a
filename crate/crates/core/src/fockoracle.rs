//! Single-mode boson Fock space truncated at `|N⟩`: ladder, displacement and squeeze
//! operators as dense matrices, used as brute-force ground truth for the `n = 1`, `k = 1`
//! identities.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{kernel, lambda_cocycle_ez_unchecked, lambda_cocycle_unchecked, CSPoint, JacobiElement};
use crate::matfun::{dotu, expm, re, vconj, CMat, CVec};
use crate::scalar::Real;
use crate::symplectic::{cartan_decompose, moebius, SiegelPoint, SpElement};

/// Default bound on the relative amplitude mass above `0.9N`.
pub const TAIL_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FockOp<T> {
    pub cutoff: usize,
    pub mat: CMat<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FockVec<T> {
    pub cutoff: usize,
    pub amps: CVec<T>,
}

impl<T: Real> FockOp<T> {
    pub fn identity(cutoff: usize) -> Self {
        Self {
            cutoff,
            mat: CMat::identity(cutoff + 1),
        }
    }

    pub fn apply(&self, v: &FockVec<T>) -> FockVec<T> {
        FockVec {
            cutoff: self.cutoff,
            amps: self.mat.matvec(&v.amps),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            cutoff: self.cutoff,
            mat: &self.mat * &other.mat,
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            cutoff: self.cutoff,
            mat: &(&self.mat * &other.mat) - &(&other.mat * &self.mat),
        }
    }

    pub fn exp(&self) -> Self {
        Self {
            cutoff: self.cutoff,
            mat: expm(&self.mat),
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            cutoff: self.cutoff,
            mat: self.mat.scale(c),
        }
    }

    /// Largest entry of `self − other` over the levels `0..block`.
    pub fn block_residual(&self, other: &Self, block: usize) -> T {
        let d = &self.mat - &other.mat;
        d.block(0, 0, block, block).norm_max()
    }
}

impl<T: Real> FockVec<T> {
    pub fn vacuum(cutoff: usize) -> Self {
        let mut amps = vec![Complex::zero(); cutoff + 1];
        amps[0] = re(T::one());
        Self { cutoff, amps }
    }

    pub fn norm(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    /// `(u, v) = Σ ū_m v_m`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        dotu(&vconj(&self.amps), &other.amps)
    }

    /// Relative mass `Σ_{m > 0.9N}|c_m|² / Σ|c_m|²`.
    pub fn tail_mass(&self) -> T {
        let start = (self.cutoff * 9) / 10 + 1;
        let tot = self.amps.iter().map(|a| a.norm_sqr()).sum::<T>();
        if tot == T::zero() {
            return T::zero();
        }
        self.amps[start.min(self.amps.len())..].iter().map(|a| a.norm_sqr()).sum::<T>() / tot
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            cutoff: self.cutoff,
            amps: self.amps.iter().map(|&a| a * c).collect(),
        }
    }

    /// `‖(self − other)|_{0..len}‖`.
    pub fn head_distance(&self, other: &Self, len: usize) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .take(len)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }
}

/// Table 1 realization on levels `0..=N`.
#[derive(Clone, Debug)]
pub struct Fock<T> {
    pub cutoff: usize,
    pub tail_limit: f64,
    pub a: FockOp<T>,
    pub adag: FockOp<T>,
    pub kp: FockOp<T>,
    pub km: FockOp<T>,
    pub k0: FockOp<T>,
}

impl<T: Real> Fock<T> {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::OutOfDomain(format!("cutoff must be at least 2, got {cutoff}")));
        }
        let (a, adag) = ladder(cutoff);
        let op = |m: CMat<T>| FockOp { cutoff, mat: m };
        let kp = op((&adag.mat * &adag.mat).scale_re(T::lit(0.5)));
        let km = op((&a.mat * &a.mat).scale_re(T::lit(0.5)));
        let k0 = op((&(&adag.mat * &a.mat) + &(&a.mat * &adag.mat)).scale_re(T::lit(0.25)));
        Ok(Self {
            cutoff,
            tail_limit: TAIL_LIMIT,
            a,
            adag,
            kp,
            km,
            k0,
        })
    }

    pub fn with_tail_limit(mut self, limit: f64) -> Self {
        self.tail_limit = limit;
        self
    }

    /// Operators are certified on the levels `0..N/4`.
    pub fn block(&self) -> usize {
        (self.cutoff / 4).max(1)
    }

    /// Vectors are compared on the levels `0..3N/5`.
    pub fn head(&self) -> usize {
        (self.cutoff * 3 / 5).max(1)
    }

    fn certify_vec(&self, v: &FockVec<T>) -> Result<()> {
        let tail = v.tail_mass().to_f64().unwrap_or(f64::INFINITY);
        if !(tail <= self.tail_limit) {
            return Err(Error::CutoffTooSmall {
                tail,
                limit: self.tail_limit,
            });
        }
        Ok(())
    }

    fn certify_op(&self, op: &FockOp<T>) -> Result<()> {
        self.certify_vec(&op.apply(&FockVec::vacuum(self.cutoff)))
    }

    fn lin(&self, terms: &[(Complex<T>, &FockOp<T>)]) -> FockOp<T> {
        let mut m = CMat::zeros(self.cutoff + 1, self.cutoff + 1);
        for (c, op) in terms {
            m += &op.mat.scale(*c);
        }
        FockOp {
            cutoff: self.cutoff,
            mat: m,
        }
    }

    /// `exp(αa⁺ − ᾱa)`.
    pub fn displacement(&self, alpha: Complex<T>) -> Result<FockOp<T>> {
        let d = self.lin(&[(alpha, &self.adag), (-alpha.conj(), &self.a)]).exp();
        self.certify_op(&d)?;
        Ok(d)
    }

    /// `exp(−|α|²/2)·exp(αa⁺)·exp(−ᾱa)`.
    pub fn displacement_normal(&self, alpha: Complex<T>) -> Result<FockOp<T>> {
        let up = self.lin(&[(alpha, &self.adag)]).exp();
        let down = self.lin(&[(-alpha.conj(), &self.a)]).exp();
        let d = up
            .compose(&down)
            .scale(re((-alpha.norm_sqr() * T::lit(0.5)).exp()));
        self.certify_op(&d)?;
        Ok(d)
    }

    /// `exp(ζK⁺ − ζ̄K⁻)`.
    pub fn underline_s(&self, zeta: Complex<T>) -> Result<FockOp<T>> {
        let s = self.lin(&[(zeta, &self.kp), (-zeta.conj(), &self.km)]).exp();
        self.certify_op(&s)?;
        Ok(s)
    }

    /// `exp(θ·2iK⁰)`, diagonal.
    pub fn rotation(&self, theta: T) -> FockOp<T> {
        let n = self.cutoff + 1;
        FockOp {
            cutoff: self.cutoff,
            mat: CMat::from_fn(n, n, |i, j| {
                if i == j {
                    let e = T::from_usize(2 * i + 1).unwrap() * T::lit(0.5) * theta;
                    Complex::new(T::zero(), e).exp()
                } else {
                    Complex::zero()
                }
            }),
        }
    }

    fn check_w(w: Complex<T>) -> Result<T> {
        let g = T::one() - w.norm_sqr();
        if !(g > T::zero()) {
            return Err(Error::DomainViolation(format!("|w| = {} is not below 1", w.norm())));
        }
        Ok(g)
    }

    /// `exp(wK⁺)·exp(ηK⁰)·exp(−w̄K⁻)`, `η = log(1 − |w|²)`.
    pub fn squeeze(&self, w: Complex<T>) -> Result<FockOp<T>> {
        let eta = re(Self::check_w(w)?.ln());
        let s = self
            .lin(&[(w, &self.kp)])
            .exp()
            .compose(&self.lin(&[(eta, &self.k0)]).exp())
            .compose(&self.lin(&[(-w.conj(), &self.km)]).exp());
        self.certify_op(&s)?;
        Ok(s)
    }

    /// `exp(−w̄K⁻)·exp(−ηK⁰)·exp(wK⁺)`.
    pub fn squeeze_alt(&self, w: Complex<T>) -> Result<FockOp<T>> {
        let eta = re(Self::check_w(w)?.ln());
        let s = self
            .lin(&[(-w.conj(), &self.km)])
            .exp()
            .compose(&self.lin(&[(-eta, &self.k0)]).exp())
            .compose(&self.lin(&[(w, &self.kp)]).exp());
        self.certify_op(&s)?;
        Ok(s)
    }

    /// `S(g) = S̲(Z)·exp(2iθK⁰)` from the Cartan factors `(Z, v = e^{iθ})` of `g`.
    pub fn s_of_g(&self, g: &SpElement<T>) -> Result<FockOp<T>> {
        if g.dim() != 1 {
            return Err(Error::DimensionMismatch(format!("the oracle is single-mode, got n = {}", g.dim())));
        }
        let c = cartan_decompose(g)?;
        let theta = c.v[(0, 0)].arg();
        Ok(self.underline_s(c.z[(0, 0)])?.compose(&self.rotation(theta)))
    }

    /// `exp(za⁺ + wK⁺)|0⟩`, with components `P_m(z, w)/√m!`, `P_{m+1} = zP_m + m w P_{m−1}`.
    pub fn cs_vector(&self, z: Complex<T>, w: Complex<T>) -> Result<FockVec<T>> {
        let mut amps = vec![Complex::zero(); self.cutoff + 1];
        amps[0] = re(T::one());
        if self.cutoff >= 1 {
            amps[1] = z;
        }
        for m in 1..self.cutoff {
            let mf = T::from_usize(m).unwrap();
            amps[m + 1] = (z * amps[m] + w * amps[m - 1] * mf.sqrt()) / (mf + T::one()).sqrt();
        }
        let v = FockVec {
            cutoff: self.cutoff,
            amps,
        };
        self.certify_vec(&v)?;
        Ok(v)
    }
}

/// `a|m⟩ = √m|m−1⟩` and its adjoint on levels `0..=N`.
pub fn ladder<T: Real>(cutoff: usize) -> (FockOp<T>, FockOp<T>) {
    let n = cutoff + 1;
    let a = CMat::from_fn(n, n, |i, j| {
        if j == i + 1 {
            re(T::from_usize(j).unwrap().sqrt())
        } else {
            Complex::zero()
        }
    });
    let adag = a.adjoint();
    (FockOp { cutoff, mat: a }, FockOp { cutoff, mat: adag })
}

pub fn displacement<T: Real>(alpha: Complex<T>, cutoff: usize) -> Result<FockOp<T>> {
    Fock::new(cutoff)?.displacement(alpha)
}

pub fn squeeze<T: Real>(w: Complex<T>, cutoff: usize) -> Result<FockOp<T>> {
    Fock::new(cutoff)?.squeeze(w)
}

pub fn cs_vector<T: Real>(z: Complex<T>, w: Complex<T>, cutoff: usize) -> Result<FockVec<T>> {
    Fock::new(cutoff)?.cs_vector(z, w)
}

/// `‖D(α)S(w)|0⟩ − (1 − |w|²)^{1/4}·exp(−ᾱz/2)·e_{z,w}‖` with `z = α − wᾱ`.
pub fn check_lemma6<T: Real>(alpha: Complex<T>, w: Complex<T>, cutoff: usize) -> Result<T> {
    let f = Fock::new(cutoff)?;
    let lhs = f
        .displacement(alpha)?
        .apply(&f.squeeze(w)?.apply(&FockVec::vacuum(cutoff)));
    let z = alpha - w * alpha.conj();
    let pre = re((T::one() - w.norm_sqr()).powf(T::lit(0.25))) * (-alpha.conj() * z * T::lit(0.5)).exp();
    let rhs = f.cs_vector(z, w)?.scale(pre);
    Ok(lhs.head_distance(&rhs, f.head()))
}

/// `β = cosh|ζ|·α − (sinh|ζ|/|ζ|)·ζᾱ`, so that `D(α)S̲(ζ) = S̲(ζ)D(β)`.
pub fn exchange_beta<T: Real>(zeta: Complex<T>, alpha: Complex<T>) -> Complex<T> {
    let (m, n) = mn(zeta);
    alpha * m - n * alpha.conj()
}

/// `α = cosh|ζ|·β + (sinh|ζ|/|ζ|)·ζβ̄`.
pub fn exchange_alpha<T: Real>(zeta: Complex<T>, beta: Complex<T>) -> Complex<T> {
    let (m, n) = mn(zeta);
    beta * m + n * beta.conj()
}

/// `α = (1 − |w|²)^{−1/2}(β + wβ̄)`.
pub fn exchange_alpha_w<T: Real>(zeta: Complex<T>, beta: Complex<T>) -> Complex<T> {
    let r = zeta.norm();
    let w = zeta * crate::matfun::tanhc_sq(r * r);
    (beta + w * beta.conj()) / (T::one() - w.norm_sqr()).sqrt()
}

fn mn<T: Real>(zeta: Complex<T>) -> (T, Complex<T>) {
    let r2 = zeta.norm_sqr();
    (r2.sqrt().cosh(), zeta * crate::matfun::sinhc_sq(r2))
}

/// Residuals of the Bogoliubov relations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpbResiduals<T> {
    /// `S̲⁻¹aS̲` against `cosh|ζ|·a + (sinh|ζ|/|ζ|)·ζa⁺`.
    pub conjugation: T,
    /// `D(α)S̲(ζ)` against `S̲(ζ)D(β)`.
    pub exchange: T,
    /// `S(g)D(α)S(g)⁻¹` against `D(aα + bᾱ)`, `g` the Cartan element `(ζ, e^{iθ})`.
    pub sp_conjugation: T,
    /// `|α − α(β(α))|` for both inverse forms.
    pub beta_roundtrip: T,
}

impl<T: Real> HpbResiduals<T> {
    pub fn max(&self) -> T {
        self.conjugation
            .max(self.exchange)
            .max(self.sp_conjugation)
            .max(self.beta_roundtrip)
    }
}

pub fn check_hpb<T: Real>(zeta: Complex<T>, alpha: Complex<T>, theta: T, cutoff: usize) -> Result<HpbResiduals<T>> {
    let f = Fock::new(cutoff)?;
    let b = f.block();
    let s = f.underline_s(zeta)?;
    let s_inv = f.underline_s(-zeta)?;
    let (m, n) = mn(zeta);
    let conj_lhs = s_inv.compose(&f.a).compose(&s);
    let conj_rhs = f.lin(&[(re(m), &f.a), (n, &f.adag)]);
    let beta = exchange_beta(zeta, alpha);
    let ex_l = f.displacement(alpha)?.compose(&s);
    let ex_r = s.compose(&f.displacement(beta)?);
    let v = Complex::new(T::zero(), theta).exp();
    let g = SpElement::from_blocks_unchecked(CMat::scalar(v * m), CMat::scalar(n * v.conj()));
    let sg = f.s_of_g(&g)?;
    let sg_inv = f.rotation(-theta).compose(&s_inv);
    let alpha_g = g.act_vec(&[alpha])[0];
    let sp_l = sg.compose(&f.displacement(alpha)?).compose(&sg_inv);
    let sp_r = f.displacement(alpha_g)?;
    let rt = (exchange_alpha(zeta, beta) - alpha)
        .norm()
        .max((exchange_alpha_w(zeta, beta) - alpha).norm());
    Ok(HpbResiduals {
        conjugation: conj_lhs.block_residual(&conj_rhs, b),
        exchange: ex_l.block_residual(&ex_r, b),
        sp_conjugation: sp_l.block_residual(&sp_r, b),
        beta_roundtrip: rt,
    })
}

/// `(e_y, e_x)` on the truncated space.
pub fn oracle_kernel<T: Real>(x: &CSPoint<T>, y: &CSPoint<T>, cutoff: usize) -> Result<Complex<T>> {
    oracle_kernel_in(&Fock::new(cutoff)?, x, y)
}

/// [`oracle_kernel`] on a prepared space, e.g. one with a relaxed tail limit.
pub fn oracle_kernel_in<T: Real>(f: &Fock<T>, x: &CSPoint<T>, y: &CSPoint<T>) -> Result<Complex<T>> {
    let (ex, ey) = (single(f, x)?, single(f, y)?);
    Ok(ey.inner(&ex))
}

fn single<T: Real>(f: &Fock<T>, x: &CSPoint<T>) -> Result<FockVec<T>> {
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch(format!("the oracle is single-mode, got n = {}", x.dim())));
    }
    f.cs_vector(x.z[0], x.w.w()[(0, 0)])
}

/// `|oracle − kernel(·, ·, k = 1)|`.
pub fn kernel_gap<T: Real>(x: &CSPoint<T>, y: &CSPoint<T>, cutoff: usize) -> Result<T> {
    Ok((oracle_kernel(x, y, cutoff)? - kernel(x, y, T::one())?).norm())
}

/// End-to-end comparison of `S(g)D(α)e_{z,w}` with `λe_{z₁,w₁}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ActionCheck<T> {
    pub residual: T,
    pub lambda: Complex<T>,
    /// `|λ − λ_alt|` for the `λ₁` closed form.
    pub alt_gap: T,
}

pub fn check_action<T: Real>(h: &JacobiElement<T>, x: &CSPoint<T>, cutoff: usize) -> Result<ActionCheck<T>> {
    let f = Fock::new(cutoff)?;
    let lhs = f
        .s_of_g(&h.g)?
        .apply(&f.displacement(h.alpha[0])?.apply(&single(&f, x)?));
    let d = lambda_cocycle_unchecked(h, x, T::one())?;
    let img = CSPoint {
        z: d.z1.clone(),
        w: d.w1.clone(),
    };
    let rhs = single(&f, &img)?.scale(d.lambda);
    let (alt, _) = lambda_cocycle_ez_unchecked(h, x, T::one())?;
    Ok(ActionCheck {
        residual: lhs.head_distance(&rhs, f.head()),
        lambda: d.lambda,
        alt_gap: (alt - d.lambda).norm(),
    })
}

/// Residuals of the coherent-vector relations under the two readings of the factor `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IConventionReport<T> {
    /// `S(g)e₀` against `(ā)^{−1/2}e_{bā⁻¹}`.
    pub r2_free: T,
    /// `S(g)e₀` against `(ā)^{−1/2}e_{−ibā⁻¹}`.
    pub r2_printed: T,
    /// `S(g)e_w` against `(wb̄ + ā)^{−1/2}e_{g·w}`.
    pub r3_free: T,
    /// `S(g)e_{w/i}` against `(wb̄ + ā)^{−1/2}e_{(g·w)/i}`.
    pub r3_printed: T,
    /// `S̲(ζ)e₀` against `(1 − |w|²)^{1/4}e_w`.
    pub r1: T,
}

impl<T: Real> IConventionReport<T> {
    pub fn i_free_holds(&self, tol: T) -> bool {
        self.r1 <= tol && self.r2_free <= tol && self.r3_free <= tol
    }

    pub fn printed_holds(&self, tol: T) -> bool {
        self.r2_printed <= tol && self.r3_printed <= tol
    }
}

pub fn check_i_convention<T: Real>(g: &SpElement<T>, w: Complex<T>, cutoff: usize) -> Result<IConventionReport<T>> {
    let f = Fock::new(cutoff)?;
    let head = f.head();
    let sg = f.s_of_g(g)?;
    let (a, b) = (g.a()[(0, 0)], g.b()[(0, 0)]);
    let half = -T::lit(0.5);
    let vac = FockVec::vacuum(cutoff);
    let e0 = sg.apply(&vac);
    let pre2 = a.conj().powf(half);
    let y = b / a.conj();
    let i = Complex::<T>::i();
    let r2_free = e0.head_distance(&f.cs_vector(Complex::zero(), y)?.scale(pre2), head);
    let r2_printed = e0.head_distance(&f.cs_vector(Complex::zero(), -i * y)?.scale(pre2), head);
    let gw = moebius(g, &SiegelPoint::from_matrix_unchecked(CMat::scalar(w)))?.w()[(0, 0)];
    let pre3 = (w * b.conj() + a.conj()).powf(half);
    let lhs = sg.apply(&f.cs_vector(Complex::zero(), w)?);
    let r3_free = lhs.head_distance(&f.cs_vector(Complex::zero(), gw)?.scale(pre3), head);
    let lhs_i = sg.apply(&f.cs_vector(Complex::zero(), -i * w)?);
    let r3_printed = lhs_i.head_distance(&f.cs_vector(Complex::zero(), -i * gw)?.scale(pre3), head);
    let r = w.norm();
    let zeta = w * crate::matfun::arctanhc_sq(r * r);
    let r1_lhs = f.underline_s(zeta)?.apply(&vac);
    let r1_rhs = f.cs_vector(Complex::zero(), w)?.scale(re((T::one() - r * r).powf(T::lit(0.25))));
    Ok(IConventionReport {
        r2_free,
        r2_printed,
        r3_free,
        r3_printed,
        r1: r1_lhs.head_distance(&r1_rhs, head),
    })
}
