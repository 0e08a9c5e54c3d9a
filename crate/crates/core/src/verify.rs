//! Verification suites behind `gjn verify`. Every check reports the largest residual over its
//! samples against a tolerance; reports are deterministic for a given configuration.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffops::{
    heisenberg_table, jacobi_generators_diff, mixed_table, scan_conventions, sp_table,
    verify_structure_constants, Conventions, GaussRational,
};
use crate::error::{Error, Result};
use crate::fd::{holo_jacobian, mixed_hessian};
use crate::fockoracle::{check_action, check_hpb, check_lemma6, kernel_gap, oracle_kernel_in, Fock};
use crate::gj1;
use crate::jacobi::{
    act, density, jacobi_compose, kahler_form, kahler_potential, kernel, lambda_cocycle,
    lambda_full, measure_constants, reproduce_check, BaseMeasure, CSPoint, JacobiElement,
    CENTRAL_PHASE,
};
use crate::matfun::{herm_eig, CMat};
use crate::symplectic::{
    ball_compose, cartan_decompose, gauss_decompose, jn_product, jn_ratio, lambda1, siegel_random,
    random_symmetric, sp_compose, sp_of, sp_random, w_of_z, z_of_w, CartanFactors, SiegelPoint,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Symplectic,
    Jacobi,
    Oracle,
    Gj1,
    Measure,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["algebra", "symplectic", "jacobi", "oracle", "gj1", "measure", "all"];

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Algebra,
                Suite::Symplectic,
                Suite::Jacobi,
                Suite::Oracle,
                Suite::Gj1,
                Suite::Measure,
            ],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "algebra" => Suite::Algebra,
            "symplectic" => Suite::Symplectic,
            "jacobi" => Suite::Jacobi,
            "oracle" => Suite::Oracle,
            "gj1" => Suite::Gj1,
            "measure" => Suite::Measure,
            "all" => Suite::All,
            _ => return Err(Error::OutOfDomain(format!("unknown suite `{s}`"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = Suite::NAMES
            .iter()
            .position(|n| n.parse::<Suite>().ok() == Some(*self))
            .expect("named");
        f.write_str(Suite::NAMES[i])
    }
}

/// Overrides for a run; `None` selects each check's own parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n: Option<usize>,
    pub k: Option<f64>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub cutoff: Option<usize>,
    pub tol: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: None,
            k: None,
            seed: 7,
            samples: None,
            cutoff: None,
            tol: None,
        }
    }
}

impl VerifyConfig {
    fn ns(&self, default: &[usize]) -> Vec<usize> {
        self.n.map_or_else(|| default.to_vec(), |n| vec![n])
    }

    fn ks(&self, default: &[f64]) -> Vec<f64> {
        self.k.map_or_else(|| default.to_vec(), |k| vec![k])
    }

    fn count(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(salt);
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub anchor: String,
    pub n: usize,
    pub k: Option<f64>,
    pub samples: usize,
    /// `None` when the check raised an error.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConventions {
    pub action_order: String,
    pub sigma: i8,
    pub central_phase: i32,
    pub kernel_placement: String,
    pub derivative: String,
}

impl ResolvedConventions {
    pub fn current() -> Self {
        Self {
            action_order: "left: act(h1, act(h2, x)) = act(h1*h2, x)".into(),
            sigma: 1,
            central_phase: CENTRAL_PHASE,
            kernel_placement: "K(x, y) = (e_y, e_x), holomorphic in x".into(),
            derivative: "symmetrized dW, transposed K0 labels".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
    pub conventions: ResolvedConventions,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Builds records; `tol` overrides every default tolerance.
struct Recorder<'a> {
    cfg: &'a VerifyConfig,
    out: Vec<CheckRecord>,
}

struct Spec<'s> {
    check: String,
    anchor: &'s str,
    n: usize,
    k: Option<f64>,
    tol: f64,
}

fn spec(check: impl Into<String>, anchor: &str, n: usize, k: Option<f64>, tol: f64) -> Spec<'_> {
    Spec {
        check: check.into(),
        anchor,
        n,
        k,
        tol,
    }
}

impl Recorder<'_> {
    /// `f` returns `(residual, samples)`; passes when `residual ≤ tol`.
    fn run(&mut self, s: Spec<'_>, f: impl FnOnce() -> Result<(f64, usize)>) {
        self.run_with(s, f, |r, t| r <= t)
    }

    /// Passes when `residual < tol`.
    fn run_strict(&mut self, s: Spec<'_>, f: impl FnOnce() -> Result<(f64, usize)>) {
        self.run_with(s, f, |r, t| r < t)
    }

    fn run_with(&mut self, s: Spec<'_>, f: impl FnOnce() -> Result<(f64, usize)>, ok: impl Fn(f64, f64) -> bool) {
        let tol = self.cfg.tol.unwrap_or(s.tol);
        let (residual, samples, error) = match f() {
            Ok((r, m)) => (Some(r), m, None),
            Err(e) => (None, 0, Some(e.to_string())),
        };
        let pass = residual.is_some_and(|r| r.is_finite() && ok(r, tol));
        self.out.push(CheckRecord {
            check: s.check,
            anchor: s.anchor.into(),
            n: s.n,
            k: s.k,
            samples,
            residual,
            tolerance: tol,
            pass,
            error,
        });
    }
}

/// Largest value of `f` over `count` draws.
fn max_over<R: Rng>(rng: &mut R, count: usize, mut f: impl FnMut(&mut R) -> Result<f64>) -> Result<(f64, usize)> {
    let mut m = f64::NEG_INFINITY;
    for _ in 0..count {
        let v = f(rng)?;
        if v.is_nan() {
            return Ok((f64::NAN, count));
        }
        m = m.max(v);
    }
    Ok((m, count))
}

pub fn run(suite: Suite, cfg: &VerifyConfig) -> VerifyReport {
    let mut rec = Recorder { cfg, out: Vec::new() };
    for s in suite.parts() {
        match s {
            Suite::Algebra => algebra(&mut rec),
            Suite::Symplectic => symplectic(&mut rec),
            Suite::Jacobi => jacobi(&mut rec),
            Suite::Oracle => oracle(&mut rec),
            Suite::Gj1 => gj1_suite(&mut rec),
            Suite::Measure => measure(&mut rec),
            Suite::All => unreachable!(),
        }
    }
    let pass = rec.out.iter().all(|c| c.pass);
    VerifyReport {
        suite: suite.to_string(),
        pass,
        checks: rec.out,
        conventions: ResolvedConventions::current(),
    }
}

fn algebra(rec: &mut Recorder<'_>) {
    for n in rec.cfg.ns(&[1, 2, 3]) {
        let gens = jacobi_generators_diff::<GaussRational>(n, Conventions::RESOLVED);
        let tables = [
            ("heisenberg", "heisenberg-brackets", heisenberg_table(n)),
            ("sp", "sp-brackets", sp_table(n)),
            ("mixed", "heisenberg-sp-brackets", mixed_table(n)),
        ];
        for (id, anchor, table) in tables {
            rec.run(spec(format!("algebra.{id}.n{n}"), anchor, n, None, 0.0), || {
                let r = verify_structure_constants(&gens, &table, 1)?;
                Ok((r.mismatches.len() as f64, r.checked))
            });
        }
    }
    if rec.cfg.n.is_none() {
        rec.run(spec("algebra.convention-unique", "generator-realization", 2, None, 0.0), || {
            let s = scan_conventions(&[1, 2])?;
            let ok = s.sigma == 1 && s.passing == vec![Conventions::RESOLVED];
            Ok((if ok { 0.0 } else { 1.0 }, Conventions::all().len()))
        });
    }
}

fn symplectic(rec: &mut Recorder<'_>) {
    let count = rec.cfg.count(200);
    for n in rec.cfg.ns(&[1, 2, 3]) {
        let mut r = rec.cfg.rng(100 + n as u64);
        rec.run(spec(format!("symplectic.gauss.n{n}"), "gauss-decomposition", n, None, 1e-9), || {
            max_over(&mut r, count, |r| {
                let g = sp_random::<f64, _>(n, 0.7, r);
                Ok((&gauss_decompose(&g)?.reassemble() - &g.matrix()).norm_max())
            })
        });
        rec.run(spec(format!("symplectic.cartan.n{n}"), "cartan-decomposition", n, None, 1e-9), || {
            max_over(&mut r, count, |r| {
                let g = sp_random::<f64, _>(n, 0.7, r);
                let back = cartan_decompose(&g)?.synthesize()?;
                Ok((&back.matrix() - &g.matrix()).norm_max())
            })
        });
        rec.run(spec(format!("symplectic.z-w.n{n}"), "ball-coordinates", n, None, 1e-11), || {
            max_over(&mut r, count, |r| {
                let w = siegel_random::<f64, _>(n, 0.6, r);
                let a = (w_of_z(&z_of_w(&w)?)?.w() - w.w()).norm_max();
                let z = random_symmetric::<f64, _>(n, 0.5, r);
                let b = (&z_of_w(&w_of_z(&z)?)? - &z).norm_max();
                Ok(a.max(b))
            })
        });
        rec.run(spec(format!("symplectic.ball-compose.n{n}"), "ball-composition", n, None, 1e-9), || {
            max_over(&mut r, count, |r| {
                let w1 = siegel_random::<f64, _>(n, 0.5, r);
                let w2 = siegel_random::<f64, _>(n, 0.5, r);
                let bc = ball_compose(&w1, &w2)?;
                let g = sp_compose(&sp_of(&w1)?, &sp_of(&w2)?)?;
                let w3 = g.a().conj().solve_right(g.b())?;
                let CartanFactors { v, .. } = cartan_decompose(&g)?;
                Ok((bc.w3.w() - &w3).norm_max().max((&bc.v - &v).norm_max()))
            })
        });
        rec.run(spec(format!("symplectic.det-v-unimodular.n{n}"), "ball-composition-phase", n, None, 1e-10), || {
            max_over(&mut r, count, |r| {
                let w1 = siegel_random::<f64, _>(n, 0.5, r);
                let w2 = siegel_random::<f64, _>(n, 0.5, r);
                Ok((ball_compose(&w1, &w2)?.v.det()?.norm() - 1.0).abs())
            })
        });
        rec.run(spec(format!("symplectic.det-v-closed-form.n{n}"), "ball-composition-phase", n, None, 1e-9), || {
            max_over(&mut r, count, |r| {
                let w1 = siegel_random::<f64, _>(n, 0.5, r);
                let w2 = siegel_random::<f64, _>(n, 0.5, r);
                let bc = ball_compose(&w1, &w2)?;
                Ok((bc.v.det()? - bc.detv).norm())
            })
        });
    }
}

fn pt(n: usize, r: &mut ChaCha8Rng) -> CSPoint<f64> {
    CSPoint::random(n, 0.4, 0.5, r)
}

fn jacobi(rec: &mut Recorder<'_>) {
    let count = rec.cfg.count(200);
    for n in rec.cfg.ns(&[1, 2]) {
        for k in rec.cfg.ks(&[2.0, 4.0]) {
            let mut r = rec.cfg.rng(200 + 10 * n as u64 + k as u64);
            rec.run(spec(format!("jacobi.cocycle.n{n}.k{k}"), "multiplier-cocycle", n, Some(k), 1e-9), || {
                max_over(&mut r, count, |r| {
                    let h1 = JacobiElement::random(n, 0.5, 0.4, r);
                    let h2 = JacobiElement::random(n, 0.5, 0.4, r);
                    let x = pt(n, r);
                    let lhs = lambda_full(&jacobi_compose(&h1, &h2)?, &x, k)?;
                    let rhs = lambda_full(&h1, &act(&h2, &x)?, k)? * lambda_full(&h2, &x, k)?;
                    Ok((lhs - rhs).norm() / lhs.norm())
                })
            });
            rec.run(spec(format!("jacobi.unitarity.n{n}.k{k}"), "kernel-transformation", n, Some(k), 1e-9), || {
                max_over(&mut r, count, |r| {
                    let h = JacobiElement::random(n, 0.5, 0.4, r);
                    let x = pt(n, r);
                    let d = lambda_cocycle(&h, &x, k)?;
                    let hx = CSPoint { z: d.z1.clone(), w: d.w1.clone() };
                    let lhs = d.lambda.norm_sqr() * kernel(&hx, &hx, k)?.re;
                    Ok((lhs / kernel(&x, &x, k)?.re - 1.0).abs())
                })
            });
        }
        let k = rec.cfg.k.unwrap_or(3.0);
        let mut r = rec.cfg.rng(300 + n as u64);
        let pts = rec.cfg.count(50);
        let coords = |x: &CSPoint<f64>| x.coords();
        rec.run(spec(format!("jacobi.form-hessian.n{n}"), "kahler-two-form", n, Some(k), 1e-5), || {
            max_over(&mut r, pts, |r| {
                let x = pt(n, r);
                let fd = mixed_hessian(|v| kahler_potential(&CSPoint::from_coords(n, v), k).unwrap_or(f64::NAN), &coords(&x), 1e-4);
                let h = kahler_form(&x, k)?;
                Ok((&fd - &h).norm_max() / (1.0 + h.norm_max()))
            })
        });
        rec.run_strict(spec(format!("jacobi.form-positive.n{n}"), "kahler-two-form", n, Some(k), 0.0), || {
            max_over(&mut r, pts, |r| Ok(-herm_eig(&kahler_form(&pt(n, r), k)?, 1e-12)?.min_eval()))
        });
        let elems = rec.cfg.count(20);
        rec.run(spec(format!("jacobi.form-invariant.n{n}"), "kahler-two-form", n, Some(k), 1e-5), || {
            max_over(&mut r, elems, |r| {
                let h = JacobiElement::random(n, 0.5, 0.3, r);
                let x = CSPoint::random(n, 0.3, 0.4, r);
                let jac = act_jacobian(&h, &x)?;
                let pulled = &(&jac.transpose() * &kahler_form(&act(&h, &x)?, k)?) * &jac.conj();
                let f0 = kahler_form(&x, k)?;
                Ok((&pulled - &f0).norm_max() / (1.0 + f0.norm_max()))
            })
        });
        rec.run(spec(format!("jacobi.density-invariant.n{n}"), "invariant-volume", n, None, 1e-5), || {
            max_over(&mut r, elems, |r| {
                let h = JacobiElement::random(n, 0.5, 0.3, r);
                let x = CSPoint::random(n, 0.3, 0.4, r);
                let dj = act_jacobian(&h, &x)?.det()?.norm_sqr();
                Ok((density(&act(&h, &x)?)? * dj / density(&x)? - 1.0).abs())
            })
        });
    }
}

fn act_jacobian(h: &JacobiElement<f64>, x: &CSPoint<f64>) -> Result<CMat<f64>> {
    let n = x.dim();
    act(h, x)?;
    Ok(holo_jacobian(
        |v| act(h, &CSPoint::from_coords(n, v)).map(|p| p.coords()).unwrap_or_else(|_| vec![Complex::new(f64::NAN, 0.0); v.len()]),
        &x.coords(),
        1e-5,
    ))
}

fn disk<R: Rng + ?Sized>(r: &mut R, rad: f64) -> Complex<f64> {
    let (s, t): (f64, f64) = (r.random(), r.random_range(0.0..std::f64::consts::TAU));
    Complex::from_polar(rad * s.sqrt(), t)
}

fn pt1(z: Complex<f64>, w: Complex<f64>) -> CSPoint<f64> {
    CSPoint {
        z: vec![z],
        w: SiegelPoint::from_matrix_unchecked(CMat::scalar(w)),
    }
}

fn oracle(rec: &mut Recorder<'_>) {
    let mut r = rec.cfg.rng(400);
    let small = rec.cfg.count(20);
    let n_ops = rec.cfg.cutoff.unwrap_or(80);
    rec.run(spec("oracle.lemma-squeezed-vector", "lemma-squeezed-vector", 1, Some(1.0), 1e-7), || {
        max_over(&mut r, small, |r| check_lemma6(disk(r, 0.4), disk(r, 0.3), n_ops))
    });
    rec.run(spec("oracle.hpb", "holstein-primakoff-bogoliubov", 1, Some(1.0), 1e-7), || {
        max_over(&mut r, small, |r| {
            let zeta = disk(r, 0.3);
            let alpha = disk(r, 0.3);
            let theta = r.random_range(-1.0..1.0);
            Ok(check_hpb(zeta, alpha, theta, n_ops)?.max())
        })
    });
    let n_k = rec.cfg.cutoff.unwrap_or(60);
    let pairs = rec.cfg.count(50);
    let mut pr = r.clone();
    rec.run(spec("oracle.kernel", "coherent-state-overlap", 1, Some(1.0), 1e-7), || {
        max_over(&mut pr, pairs, |r| {
            let x = pt1(disk(r, 0.4), disk(r, 0.4));
            let y = pt1(disk(r, 0.4), disk(r, 0.4));
            kernel_gap(&x, &y, n_k)
        })
    });
    // summed truncation error at N/4, N/2, N; the ratio of successive sums must not exceed 1
    rec.run(spec("oracle.kernel-cutoff-doubling", "coherent-state-overlap", 1, Some(1.0), 1.0), || {
        let ladder = [n_k / 4, n_k / 2, n_k];
        let focks: Vec<Fock<f64>> = ladder
            .iter()
            .map(|&c| Fock::new(c.max(2)).map(|f| f.with_tail_limit(1.0)))
            .collect::<Result<_>>()?;
        let mut tot = [0.0f64; 3];
        for _ in 0..pairs {
            let x = pt1(disk(&mut r, 0.4), disk(&mut r, 0.4));
            let y = pt1(disk(&mut r, 0.4), disk(&mut r, 0.4));
            let kx = kernel(&x, &y, 1.0)?;
            for (t, f) in tot.iter_mut().zip(&focks) {
                *t += (oracle_kernel_in(f, &x, &y)? - kx).norm();
            }
        }
        let floor = 1e-13 * pairs as f64;
        Ok(((tot[1] / tot[0]).max(tot[2] / tot[1].max(floor)), pairs))
    });
    let n_a = rec.cfg.cutoff.map_or(100, |c| c.max(100));
    let sets = rec.cfg.count(50);
    let mut ar = rec.cfg.rng(401);
    let mut alt = 0.0f64;
    rec.run(spec("oracle.action", "coherent-vector-transformation", 1, Some(1.0), 1e-6), || {
        max_over(&mut ar, sets, |r| {
            let h = oracle_element(r)?;
            let x = pt1(disk(r, 0.4), disk(r, 0.4));
            let c = check_action(&h, &x, n_a)?;
            alt = alt.max(c.alt_gap);
            Ok(c.residual)
        })
    });
    rec.run(spec("oracle.action-alt-lambda", "multiplier-closed-forms", 1, Some(1.0), 1e-9), || Ok((alt, sets)));
}

/// `g = exp([[0, ζ], [ζ̄, 0]])·diag(e^{iθ}, e^{−iθ})`, `α` with `|ζ|, |α| ≤ 0.4`, `θ ∈ [−1, 1]`, `t = 0`.
pub fn oracle_element<R: Rng + ?Sized>(r: &mut R) -> Result<JacobiElement<f64>> {
    let zeta = disk(r, 0.4);
    let theta: f64 = r.random_range(-1.0..1.0);
    let g = CartanFactors {
        z: CMat::scalar(zeta),
        v: CMat::scalar(Complex::new(0.0, theta).exp()),
    }
    .synthesize()?;
    JacobiElement::new(g, vec![disk(r, 0.4)], 0.0)
}

fn gj1_suite(rec: &mut Recorder<'_>) {
    let c = |a: f64, b: f64| Complex::new(a, b);
    rec.run(spec("gj1.pn-table", "pn-polynomials", 1, None, 0.0), || {
        let table = [
            "1",
            "z",
            "w + z^2",
            "3*z*w + z^3",
            "3*w^2 + 6*z^2*w + z^4",
            "15*z*w^2 + 10*z^3*w + z^5",
        ];
        let bad = table.iter().enumerate().filter(|(n, t)| gj1::pn_poly(*n).to_string() != **t).count();
        Ok((bad as f64, table.len()))
    });
    rec.run(spec("gj1.hermite-exact", "pn-hermite", 1, None, 0.0), || {
        let bad = (0..=8).filter(|&n| gj1::hermite_exact(n) != gj1::pn_poly_gauss(n)).count();
        Ok((bad as f64, 9))
    });
    rec.run(spec("gj1.hermite-numeric", "pn-hermite", 1, None, 1e-12), || {
        Ok((gj1::hermite_check(5, c(0.3, 0.0), c(0.2, 0.0))?, 1))
    });
    rec.run(spec("gj1.kernel-series", "n1-kernel-series", 1, Some(4.0), 1e-6), || {
        let (z, w, zp, wp) = (c(0.1, 0.0), c(0.2, 0.0), c(0.2, 0.0), c(0.1, 0.0));
        let closed = gj1::kernel_closed(z, w, zp, wp, 1.0);
        let s = gj1::kernel_series(z, w, zp, wp, 1.0, 40)?;
        Ok(((s - closed).norm() / closed.norm(), 41 * 41))
    });
    let count = rec.cfg.count(100);
    let mut r = rec.cfg.rng(500);
    rec.run(spec("gj1.cayley-roundtrip", "cayley-transform", 1, None, 1e-12), || {
        max_over(&mut r, count, |r| {
            let p = gj1::UpperHalfPoint::<f64>::random(r);
            let (w, z) = gj1::cayley(&p)?;
            let q = gj1::cayley_inverse(w, z)?;
            Ok((q.v - p.v).norm().max((q.u - p.u).norm()))
        })
    });
    let kappa = rec.cfg.k.map_or(1.0, |k| k / 4.0);
    rec.run(spec("gj1.kb-pullback", "kahler-berndt-form", 1, Some(4.0 * kappa), 1e-8), || {
        max_over(&mut r, count, |r| gj1::kb_form_check(&gj1::UpperHalfPoint::random(r), kappa))
    });
    rec.run(spec("gj1.ez-metric", "ez-metric", 1, Some(4.0 * kappa), 1e-8), || {
        max_over(&mut r, count, |r| {
            let e = gj1::EZCoords::from_point(&gj1::UpperHalfPoint::<f64>::random(r));
            let g = gj1::ez_metric(&e, kappa)?;
            let h = gj1::kb_real_metric(&e, kappa)?;
            let mut m = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    m = m.max((g[i][j] - h[i][j]).abs() / (1.0 + g[i][j].abs()));
                }
            }
            Ok(m)
        })
    });
    rec.run_strict(spec("gj1.ez-positive", "ez-metric", 1, Some(4.0 * kappa), 0.0), || {
        max_over(&mut r, count, |r| {
            let e = gj1::EZCoords::from_point(&gj1::UpperHalfPoint::<f64>::random(r));
            let g = gj1::ez_metric(&e, kappa)?;
            let m = CMat::from_fn(4, 4, |i, j| Complex::new(g[i][j], 0.0));
            Ok(-herm_eig(&m, 1e-12)?.min_eval())
        })
    });
    rec.run(spec("gj1.action-property", "sl2-heisenberg-action", 1, None, 1e-11), || {
        max_over(&mut r, count, |r| {
            let (g1, g2) = (gj1::Gj0Element::<f64>::random(r), gj1::Gj0Element::random(r));
            let p = gj1::UpperHalfPoint::random(r);
            let a = gj1::gj0_act(&g1, &gj1::gj0_act(&g2, &p)?)?;
            let b = gj1::gj0_act(&gj1::gj0_compose(&g1, &g2), &p)?;
            Ok((a.v - b.v).norm().max((a.u - b.u).norm()))
        })
    });
    rec.run(spec("gj1.intertwining", "cayley-transform", 1, None, 1e-8), || {
        max_over(&mut r, count, |r| {
            let g = gj1::Gj0Element::random(r);
            gj1::intertwining_gap(&g, &gj1::UpperHalfPoint::random(r))
        })
    });
}

/// `∫₀¹ (1 − r²)^p 2πr dr` by composite Simpson in `r = sin θ`.
pub fn j1_quadrature(p: f64, panels: usize) -> f64 {
    let m = 2 * panels;
    let h = std::f64::consts::FRAC_PI_2 / m as f64;
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        c.powf(2.0 * p + 1.0) * 2.0 * std::f64::consts::PI * s
    };
    let mut acc = f(0.0) + f(std::f64::consts::FRAC_PI_2);
    for i in 1..m {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn measure(rec: &mut Recorder<'_>) {
    let count = rec.cfg.count(1_000_000);
    let seed = rec.cfg.seed;
    for n in rec.cfg.ns(&[1]) {
        for k in rec.cfg.ks(&[5.0, 6.0]) {
            rec.run(spec(format!("measure.normalization.n{n}.k{k}"), "measure-normalization", n, Some(k), 0.01), || {
                let e = BaseMeasure::<f64>::new(n, k)?.integrate(|_| Complex::new(1.0, 0.0), count, seed)?;
                Ok(((e.value - 1.0).norm(), e.samples))
            });
            if n != 1 {
                continue;
            }
            let x0 = pt1(Complex::new(0.2, 0.1), Complex::new(0.15, -0.1));
            let fs: [(&str, fn(&CSPoint<f64>) -> Complex<f64>); 3] = [
                ("one", |_| Complex::new(1.0, 0.0)),
                ("z", |p| p.z[0]),
                ("w", |p| p.w.w()[(0, 0)]),
            ];
            for (name, f) in fs {
                rec.run(spec(format!("measure.reproducing.{name}.k{k}"), "reproducing-property", 1, Some(k), 0.03), || {
                    let res = reproduce_check(f, &x0, k, count, seed)?;
                    Ok((res.relerr, res.rhs.samples))
                });
            }
        }
    }
    rec.run(spec("measure.jn-forms", "siegel-ball-volume-integral", 4, None, 1e-12), || {
        let mut m = 0.0f64;
        for n in 1..=4 {
            for p in [0.0f64, 0.5, 1.0, 2.5, 4.0] {
                m = m.max((jn_product(p, n) / jn_ratio(p, n) - 1.0).abs());
            }
        }
        Ok((m, 20))
    });
    rec.run(spec("measure.lambda1", "siegel-ball-volume-integral", 4, None, 1e-12), || {
        let mut m = 0.0f64;
        for n in 1..=4 {
            for k in [2.0 * n as f64 + 1.0, 2.0 * n as f64 + 2.5, 2.0 * n as f64 + 6.0] {
                let via_j = crate::symplectic::jn(k / 2.0 - n as f64 - 1.0, n)?.recip();
                m = m.max((lambda1(k, n)? / via_j - 1.0).abs());
            }
        }
        Ok((m, 12))
    });
    rec.run(spec("measure.j1-quadrature", "siegel-ball-volume-integral", 1, None, 1e-6), || {
        let mut m = (j1_quadrature(0.0, 200) - std::f64::consts::PI).abs();
        for p in [0.5, 1.0, 3.0] {
            m = m.max((j1_quadrature(p, 200) / crate::symplectic::jn(p, 1)? - 1.0).abs());
        }
        Ok((m, 4))
    });
    rec.run(spec("measure.lambda-n1", "measure-normalization", 1, None, 1e-12), || {
        let mut m = 0.0f64;
        for k in [4.5, 5.0, 6.0, 9.0] {
            let expect = (k - 3.0) / (2.0 * std::f64::consts::PI.powi(2));
            m = m.max((measure_constants(1, k)?.lambda / expect - 1.0).abs());
        }
        Ok((m, 4))
    });
}
