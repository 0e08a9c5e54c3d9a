//! Exact first-order differential operators with polynomial coefficients in `z_i`, `w_{ij}`
//! (`i ≤ j`) and a non-differentiated symbol `κ` for the representation index `k`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact coefficient ring.
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Debug
    + Send
    + Sync
    + 'static
{
    fn ratio(num: i64, den: i64) -> Self;
    /// Canonical text of the coefficient.
    fn text(&self) -> String;
}

fn ratio_text(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Coeff for Rational64 {
    fn ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }

    fn text(&self) -> String {
        ratio_text(self)
    }
}

impl Coeff for Complex<Rational64> {
    fn ratio(num: i64, den: i64) -> Self {
        Complex::new(Rational64::new(num, den), Rational64::zero())
    }

    fn text(&self) -> String {
        let (a, b) = (&self.re, &self.im);
        let im = |b: &Rational64| match ratio_text(b).as_str() {
            "1" => "i".to_string(),
            "-1" => "-i".to_string(),
            s => format!("{s}i"),
        };
        match (a.is_zero(), b.is_zero()) {
            (_, true) => ratio_text(a),
            (true, false) => im(b),
            (false, false) => {
                let s = im(b);
                if s.starts_with('-') {
                    format!("({}{})", ratio_text(a), s)
                } else {
                    format!("({}+{})", ratio_text(a), s)
                }
            }
        }
    }
}

/// `a + bi` with `a, b ∈ ℚ`.
pub type GaussRational = Complex<Rational64>;

/// Polynomial ring variables for dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    Z(usize),
    W(usize, usize),
    Kappa,
}

impl Var {
    fn canonical(self) -> Self {
        match self {
            Var::W(i, j) if i > j => Var::W(j, i),
            v => v,
        }
    }

    /// Position in the exponent vector: `z`'s, then `w_{ij}` row-major, then `κ`.
    pub fn index(self, n: usize) -> Result<usize> {
        let bad = || Error::VariableMismatch(format!("{self:?} is not a variable for n = {n}"));
        match self.canonical() {
            Var::Z(i) if i < n => Ok(i),
            Var::W(i, j) if j < n => Ok(n + i * n - i * i.saturating_sub(1) / 2 + j - i),
            Var::Kappa => Ok(nvars(n) - 1),
            _ => Err(bad()),
        }
    }

    fn name(self, n: usize) -> String {
        let wide = n > 9;
        match self {
            Var::Z(_) if n == 1 => "z".into(),
            Var::W(..) if n == 1 => "w".into(),
            Var::Z(i) => format!("z{}", i + 1),
            Var::W(i, j) if wide => format!("w{}_{}", i + 1, j + 1),
            Var::W(i, j) => format!("w{}{}", i + 1, j + 1),
            Var::Kappa => "κ".into(),
        }
    }
}

fn nvars(n: usize) -> usize {
    n + n * (n + 1) / 2 + 1
}

fn var_at(n: usize, idx: usize) -> Var {
    if idx < n {
        return Var::Z(idx);
    }
    if idx == nvars(n) - 1 {
        return Var::Kappa;
    }
    let mut r = idx - n;
    for i in 0..n {
        let row = n - i;
        if r < row {
            return Var::W(i, i + r);
        }
        r -= row;
    }
    unreachable!("index {idx} out of range for n = {n}")
}

/// Sparse polynomial in the variables of dimension `n`.
#[derive(Clone, PartialEq)]
pub struct MPoly<C> {
    n: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl<C: Coeff> MPoly<C> {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: C) -> Self {
        let mut p = Self::zero(n);
        p.push(vec![0; nvars(n)], c);
        p
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, C::one())
    }

    pub fn var(n: usize, v: Var) -> Result<Self> {
        let mut e = vec![0; nvars(n)];
        e[v.index(n)?] += 1;
        let mut p = Self::zero(n);
        p.push(e, C::one());
        Ok(p)
    }

    /// `c·Π vᵢ`.
    pub fn monomial(n: usize, c: C, vars: &[Var]) -> Result<Self> {
        let mut e = vec![0; nvars(n)];
        for v in vars {
            e[v.index(n)?] += 1;
        }
        let mut p = Self::zero(n);
        p.push(e, c);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &C)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Highest power of `v` present.
    pub fn degree_in(&self, v: Var) -> Result<u32> {
        let i = v.index(self.n)?;
        Ok(self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
    }

    fn push(&mut self, e: Vec<u32>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(old) => {
                let s = old.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::VariableMismatch(format!(
                "polynomials over n = {} and n = {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.push(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = Self::zero(self.n);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.push(e, c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.n);
        for (e, x) in &self.terms {
            out.push(e.clone(), x.clone() * c.clone());
        }
        out
    }

    /// `∂p/∂v`; `κ` is a parameter and cannot be differentiated.
    pub fn diff(&self, v: Var) -> Result<Self> {
        if v == Var::Kappa {
            return Err(Error::VariableMismatch("κ is not a differentiation variable".into()));
        }
        let i = v.index(self.n)?;
        Ok(self.diff_index(i))
    }

    fn diff_index(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.push(e2, c.clone() * C::ratio(e[i] as i64, 1));
            }
        }
        out
    }
}

impl<C: Coeff> Add for &MPoly<C> {
    type Output = MPoly<C>;
    fn add(self, rhs: Self) -> MPoly<C> {
        self.try_add(rhs).expect("matching variable sets")
    }
}

impl<C: Coeff> Sub for &MPoly<C> {
    type Output = MPoly<C>;
    fn sub(self, rhs: Self) -> MPoly<C> {
        self.try_add(&-rhs).expect("matching variable sets")
    }
}

impl<C: Coeff> Mul for &MPoly<C> {
    type Output = MPoly<C>;
    fn mul(self, rhs: Self) -> MPoly<C> {
        self.try_mul(rhs).expect("matching variable sets")
    }
}

impl<C: Coeff> Neg for &MPoly<C> {
    type Output = MPoly<C>;
    fn neg(self) -> MPoly<C> {
        self.scale(&-C::one())
    }
}

fn monomial_text(n: usize, e: &[u32]) -> String {
    e.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(i, &p)| {
            let name = var_at(n, i).name(n);
            if p == 1 {
                name
            } else {
                format!("{name}^{p}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

impl<C: Coeff> Display for MPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let m = monomial_text(self.n, e);
                let ct = c.text();
                match (m.is_empty(), ct.as_str()) {
                    (true, _) => ct,
                    (false, "1") => m,
                    (false, "-1") => format!("-{m}"),
                    (false, _) => format!("{ct}*{m}"),
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl<C: Coeff> Debug for MPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MPoly[{self}]")
    }
}

/// `s + Σ_v c_v ∂/∂v`.
#[derive(Clone, PartialEq)]
pub struct PolyDiffOp<C> {
    pub scalar: MPoly<C>,
    first_order: BTreeMap<usize, MPoly<C>>,
}

impl<C: Coeff> PolyDiffOp<C> {
    pub fn zero(n: usize) -> Self {
        Self {
            scalar: MPoly::zero(n),
            first_order: BTreeMap::new(),
        }
    }

    /// Multiplication by `p`.
    pub fn multiplication(p: MPoly<C>) -> Self {
        Self {
            scalar: p,
            first_order: BTreeMap::new(),
        }
    }

    /// `c·∂/∂v`.
    pub fn derivative(n: usize, v: Var, c: C) -> Result<Self> {
        Self::zero(n).with_derivative(v, MPoly::constant(n, c))
    }

    /// Adds `p·∂/∂v`.
    pub fn with_derivative(mut self, v: Var, p: MPoly<C>) -> Result<Self> {
        if v == Var::Kappa {
            return Err(Error::VariableMismatch("κ is not a differentiation variable".into()));
        }
        self.scalar.compatible(&p)?;
        let i = v.index(self.dim())?;
        self.add_first(i, p);
        Ok(self)
    }

    fn add_first(&mut self, i: usize, p: MPoly<C>) {
        let sum = match self.first_order.remove(&i) {
            Some(old) => &old + &p,
            None => p,
        };
        if !sum.is_zero() {
            self.first_order.insert(i, sum);
        }
    }

    pub fn dim(&self) -> usize {
        self.scalar.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero() && self.first_order.is_empty()
    }

    pub fn coefficient(&self, v: Var) -> Result<MPoly<C>> {
        let i = v.index(self.dim())?;
        Ok(self.first_order.get(&i).cloned().unwrap_or_else(|| MPoly::zero(self.dim())))
    }

    /// Differentiation variables with a nonzero coefficient.
    pub fn derivative_vars(&self) -> Vec<Var> {
        self.first_order.keys().map(|&i| var_at(self.dim(), i)).collect()
    }

    pub fn scale(&self, c: &C) -> Self {
        Self {
            scalar: self.scalar.scale(c),
            first_order: self
                .first_order
                .iter()
                .map(|(&i, p)| (i, p.scale(c)))
                .filter(|(_, p)| !p.is_zero())
                .collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.scalar.compatible(&other.scalar)?;
        let mut out = self.clone();
        out.scalar = &out.scalar + &other.scalar;
        for (&i, p) in &other.first_order {
            out.add_first(i, p.clone());
        }
        Ok(out)
    }

    /// `p·D`.
    pub fn left_mul(&self, p: &MPoly<C>) -> Result<Self> {
        self.scalar.compatible(p)?;
        Ok(Self {
            scalar: p * &self.scalar,
            first_order: self
                .first_order
                .iter()
                .map(|(&i, c)| (i, p * c))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        })
    }
}

impl<C: Coeff> Add for &PolyDiffOp<C> {
    type Output = PolyDiffOp<C>;
    fn add(self, rhs: Self) -> PolyDiffOp<C> {
        self.try_add(rhs).expect("matching variable sets")
    }
}

impl<C: Coeff> Sub for &PolyDiffOp<C> {
    type Output = PolyDiffOp<C>;
    fn sub(self, rhs: Self) -> PolyDiffOp<C> {
        self.try_add(&rhs.scale(&-C::one())).expect("matching variable sets")
    }
}

impl<C: Coeff> Display for PolyDiffOp<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.scalar.is_zero() || self.first_order.is_empty() {
            parts.push(self.scalar.to_string());
        }
        for (&i, p) in &self.first_order {
            let d = format!("∂{}", var_at(self.dim(), i).name(self.dim()));
            let t = p.to_string();
            parts.push(if t == "1" {
                d
            } else if p.terms.len() == 1 && !t.contains('+') {
                format!("{t}*{d}")
            } else {
                format!("({t})*{d}")
            });
        }
        f.write_str(&parts.join(" + "))
    }
}

impl<C: Coeff> Debug for PolyDiffOp<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyDiffOp[{self}]")
    }
}

/// `D p`.
pub fn op_apply<C: Coeff>(d: &PolyDiffOp<C>, p: &MPoly<C>) -> Result<MPoly<C>> {
    d.scalar.compatible(p)?;
    let mut out = &d.scalar * p;
    for (&i, c) in &d.first_order {
        out = &out + &(c * &p.diff_index(i));
    }
    Ok(out)
}

/// `[D₁, D₂] = D₁D₂ − D₂D₁`, checking that the second-order parts cancel.
pub fn op_commutator<C: Coeff>(d1: &PolyDiffOp<C>, d2: &PolyDiffOp<C>) -> Result<PolyDiffOp<C>> {
    d1.scalar.compatible(&d2.scalar)?;
    let n = d1.dim();
    let mut second: BTreeMap<(usize, usize), MPoly<C>> = BTreeMap::new();
    for (sign, da, db) in [(C::one(), d1, d2), (-C::one(), d2, d1)] {
        for (&u, ca) in &da.first_order {
            for (&v, cb) in &db.first_order {
                let e = second.entry((u.min(v), u.max(v))).or_insert_with(|| MPoly::zero(n));
                *e = &*e + &(ca * cb).scale(&sign);
            }
        }
    }
    if let Some(((u, v), p)) = second.iter().find(|(_, p)| !p.is_zero()) {
        return Err(Error::SecondOrderResidue(format!(
            "({p})·∂{}∂{}",
            var_at(n, *u).name(n),
            var_at(n, *v).name(n)
        )));
    }
    let mut out = PolyDiffOp::zero(n);
    for (&u, c1) in &d1.first_order {
        out.scalar = &out.scalar + &(c1 * &d2.scalar.diff_index(u));
        for (&v, c2) in &d2.first_order {
            out.add_first(v, c1 * &c2.diff_index(u));
        }
    }
    for (&u, c2) in &d2.first_order {
        out.scalar = &out.scalar - &(c2 * &d1.scalar.diff_index(u));
        for (&v, c1) in &d1.first_order {
            out.add_first(v, -&(c2 * &c1.diff_index(u)));
        }
    }
    Ok(out)
}

/// Generator labels, 0-based; `K±_{ij}` are symmetric in `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GenLabel {
    One,
    A(usize),
    Ap(usize),
    Km(usize, usize),
    K0(usize, usize),
    Kp(usize, usize),
}

impl GenLabel {
    pub fn canonical(self) -> Self {
        match self {
            GenLabel::Km(i, j) if i > j => GenLabel::Km(j, i),
            GenLabel::Kp(i, j) if i > j => GenLabel::Kp(j, i),
            l => l,
        }
    }
}

impl Display for GenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenLabel::One => write!(f, "1"),
            GenLabel::A(i) => write!(f, "a{}", i + 1),
            GenLabel::Ap(i) => write!(f, "a+{}", i + 1),
            GenLabel::Km(i, j) => write!(f, "K-{}{}", i + 1, j + 1),
            GenLabel::K0(i, j) => write!(f, "K0{}{}", i + 1, j + 1),
            GenLabel::Kp(i, j) => write!(f, "K+{}{}", i + 1, j + 1),
        }
    }
}

/// Meaning of `∂/∂w_{ij}` for `i ≠ j` in matrix expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivConvention {
    /// The partial with respect to the independent coordinate `w_{ij}`.
    Independent,
    /// `½(1 + δ_{ij})·∂/∂w_{ij}`, i.e. the symmetrized entrywise derivative.
    Symmetrized,
}

/// Index order of `K⁰_{kl}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K0Labels {
    /// `[(∂/∂W)W]_{kl} = Σ ∂/∂w_{ki}·w_{il}` labelled `(k, l)`.
    AsWritten,
    /// The same operator labelled `(l, k)`.
    Transposed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub deriv: DerivConvention,
    pub k0: K0Labels,
}

impl Conventions {
    /// The convention under which all tables close for `n ≥ 2`.
    pub const RESOLVED: Self = Self {
        deriv: DerivConvention::Symmetrized,
        k0: K0Labels::Transposed,
    };

    pub fn all() -> [Self; 4] {
        use DerivConvention::*;
        use K0Labels::*;
        [
            Self { deriv: Independent, k0: AsWritten },
            Self { deriv: Independent, k0: Transposed },
            Self { deriv: Symmetrized, k0: AsWritten },
            Self { deriv: Symmetrized, k0: Transposed },
        ]
    }
}

impl Default for Conventions {
    fn default() -> Self {
        Self::RESOLVED
    }
}

/// Operators keyed by canonical label.
pub type Generators<C> = BTreeMap<GenLabel, PolyDiffOp<C>>;

/// Looks up `label` after canonicalization; `One` is the identity.
pub fn generator<'a, C: Coeff>(gens: &'a Generators<C>, label: GenLabel) -> Option<&'a PolyDiffOp<C>> {
    gens.get(&label.canonical())
}

struct Builder {
    n: usize,
    conv: Conventions,
}

impl Builder {
    fn q<C: Coeff>(&self, num: i64, den: i64) -> C {
        C::ratio(num, den)
    }

    fn mono<C: Coeff>(&self, c: C, vars: &[Var]) -> MPoly<C> {
        MPoly::monomial(self.n, c, vars).expect("in-range variables")
    }

    fn w(&self, i: usize, j: usize) -> Var {
        Var::W(i, j)
    }

    /// `∂/∂W` entry `(i, j)` under the derivative convention, times `p`.
    fn dw<C: Coeff>(&self, op: PolyDiffOp<C>, i: usize, j: usize, p: MPoly<C>) -> PolyDiffOp<C> {
        let f = match self.conv.deriv {
            DerivConvention::Symmetrized if i != j => self.q(1, 2),
            _ => C::one(),
        };
        op.with_derivative(self.w(i, j), p.scale(&f)).expect("in-range variables")
    }

    fn dz<C: Coeff>(&self, op: PolyDiffOp<C>, i: usize, p: MPoly<C>) -> PolyDiffOp<C> {
        op.with_derivative(Var::Z(i), p).expect("in-range variables")
    }

    fn km<C: Coeff>(&self, k: usize, l: usize) -> PolyDiffOp<C> {
        self.dw(PolyDiffOp::zero(self.n), k, l, MPoly::one(self.n))
    }

    /// `(κ/4)δ_{kl} + [z_l/2 ∂_{z_k}] + Σ_i w_{il} ∂W_{ki}`.
    fn k0_written<C: Coeff>(&self, k: usize, l: usize, heis: bool) -> PolyDiffOp<C> {
        let n = self.n;
        let scal = if k == l {
            self.mono(self.q(1, 4), &[Var::Kappa])
        } else {
            MPoly::zero(n)
        };
        let mut op = PolyDiffOp::multiplication(scal);
        if heis {
            op = self.dz(op, k, self.mono(self.q(1, 2), &[Var::Z(l)]));
        }
        for i in 0..n {
            op = self.dw(op, k, i, self.mono(C::one(), &[self.w(i, l)]));
        }
        op
    }

    fn k0<C: Coeff>(&self, k: usize, l: usize, heis: bool) -> PolyDiffOp<C> {
        match self.conv.k0 {
            K0Labels::AsWritten => self.k0_written(k, l, heis),
            K0Labels::Transposed => self.k0_written(l, k, heis),
        }
    }

    /// `(κ/2)w_{kl} + [z_k z_l/2 + ½Σ_i (z_l w_{ik} + z_k w_{il})∂_{z_i}] + Σ_{i,α} w_{αl} w_{ki} ∂W_{iα}`.
    fn kp<C: Coeff>(&self, k: usize, l: usize, heis: bool) -> PolyDiffOp<C> {
        let n = self.n;
        let mut scal = self.mono(self.q(1, 2), &[Var::Kappa, self.w(k, l)]);
        if heis {
            scal = &scal + &self.mono(self.q(1, 2), &[Var::Z(k), Var::Z(l)]);
        }
        let mut op = PolyDiffOp::multiplication(scal);
        if heis {
            for i in 0..n {
                let c = &self.mono(self.q(1, 2), &[Var::Z(l), self.w(i, k)])
                    + &self.mono(self.q(1, 2), &[Var::Z(k), self.w(i, l)]);
                op = self.dz(op, i, c);
            }
        }
        for i in 0..n {
            for a in 0..n {
                op = self.dw(op, i, a, self.mono(C::one(), &[self.w(a, l), self.w(k, i)]));
            }
        }
        op
    }

    fn sp<C: Coeff>(&self, heis: bool) -> Generators<C> {
        let n = self.n;
        let mut g = BTreeMap::new();
        for k in 0..n {
            for l in 0..n {
                if k <= l {
                    g.insert(GenLabel::Km(k, l), self.km(k, l));
                    g.insert(GenLabel::Kp(k, l), self.kp(k, l, heis));
                }
                g.insert(GenLabel::K0(k, l), self.k0(k, l, heis));
            }
        }
        g
    }
}

/// `𝕂⁻ = ∂/∂W`, `𝕂⁰ = (κ/4)1 + (∂/∂W)W`, `𝕂⁺ = (κ/2)W + W(∂/∂W)W` over the `w_{ij}`.
pub fn sp_generators_diff<C: Coeff>(n: usize, conv: Conventions) -> Generators<C> {
    Builder { n, conv }.sp(false)
}

/// `𝐚 = ∂/∂z`, `𝐚⁺ = z + W∂/∂z` and the `𝕂`'s with their `z`-dependent parts.
pub fn jacobi_generators_diff<C: Coeff>(n: usize, conv: Conventions) -> Generators<C> {
    let b = Builder { n, conv };
    let mut g = b.sp(true);
    for k in 0..n {
        g.insert(GenLabel::A(k), b.dz(PolyDiffOp::zero(n), k, MPoly::one(n)));
        let mut ap = PolyDiffOp::multiplication(b.mono(C::one(), &[Var::Z(k)]));
        for i in 0..n {
            ap = b.dz(ap, i, b.mono(C::one(), &[b.w(k, i)]));
        }
        g.insert(GenLabel::Ap(k), ap);
    }
    g
}

/// Linear combination of generators, `One` standing for the identity.
pub type LinComb = BTreeMap<GenLabel, Rational64>;

fn comb_add(out: &mut LinComb, l: GenLabel, c: Rational64) {
    let l = l.canonical();
    let s = out.get(&l).copied().unwrap_or_default() + c;
    if s.is_zero() {
        out.remove(&l);
    } else {
        out.insert(l, s);
    }
}

fn comb_text(c: &LinComb) -> String {
    if c.is_empty() {
        return "0".into();
    }
    c.iter()
        .map(|(l, x)| match ratio_text(x).as_str() {
            "1" => l.to_string(),
            "-1" => format!("-{l}"),
            s => format!("{s}*{l}"),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Structure constants `[X, Y] = Σ c_L L`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraTable {
    pub name: String,
    pub n: usize,
    entries: BTreeMap<(GenLabel, GenLabel), LinComb>,
}

fn d(i: usize, j: usize) -> i64 {
    (i == j) as i64
}

impl AlgebraTable {
    pub fn new(name: &str, n: usize) -> Self {
        Self {
            name: name.into(),
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Records `[x, y] = rhs/den`, rejecting entries that contradict earlier ones or
    /// antisymmetry.
    pub fn insert(&mut self, x: GenLabel, y: GenLabel, rhs: &[(i64, GenLabel)], den: i64) -> Result<()> {
        let mut comb = LinComb::new();
        for &(c, l) in rhs {
            comb_add(&mut comb, l, Rational64::new(c, den));
        }
        self.insert_comb(x, y, comb)
    }

    pub fn insert_comb(&mut self, x: GenLabel, y: GenLabel, comb: LinComb) -> Result<()> {
        let (x, y) = (x.canonical(), y.canonical());
        let comb: LinComb = comb.into_iter().fold(LinComb::new(), |mut acc, (l, c)| {
            comb_add(&mut acc, l, c);
            acc
        });
        let clash = |want: &LinComb, have: &LinComb| {
            Error::DomainViolation(format!(
                "{}: [{x}, {y}] given as {} and as {}",
                self.name,
                comb_text(want),
                comb_text(have)
            ))
        };
        if x == y && !comb.is_empty() {
            return Err(clash(&comb, &LinComb::new()));
        }
        if let Some(old) = self.entries.get(&(x, y)) {
            return if *old == comb { Ok(()) } else { Err(clash(&comb, old)) };
        }
        if let Some(old) = self.entries.get(&(y, x)) {
            let neg: LinComb = old.iter().map(|(l, c)| (*l, -c)).collect();
            return if neg == comb { Ok(()) } else { Err(clash(&comb, &neg)) };
        }
        self.entries.insert((x, y), comb);
        Ok(())
    }

    pub fn merge(&mut self, other: &AlgebraTable) -> Result<()> {
        for ((x, y), comb) in &other.entries {
            self.insert_comb(*x, *y, comb.clone())?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(GenLabel, GenLabel), &LinComb)> {
        self.entries.iter()
    }

    /// `[x, y]` from the table, using antisymmetry; `None` if absent.
    pub fn bracket(&self, x: GenLabel, y: GenLabel) -> Option<LinComb> {
        let (x, y) = (x.canonical(), y.canonical());
        if x == GenLabel::One || y == GenLabel::One || x == y {
            return Some(LinComb::new());
        }
        if let Some(c) = self.entries.get(&(x, y)) {
            return Some(c.clone());
        }
        self.entries
            .get(&(y, x))
            .map(|c| c.iter().map(|(l, v)| (*l, -v)).collect())
    }

    /// Canonical labels appearing anywhere in the table, `One` excluded.
    pub fn labels(&self) -> BTreeSet<GenLabel> {
        let mut s = BTreeSet::new();
        for ((x, y), c) in &self.entries {
            s.insert(*x);
            s.insert(*y);
            s.extend(c.keys().copied());
        }
        s.remove(&GenLabel::One);
        s
    }

    fn bracket_comb(&self, a: &LinComb, b: &LinComb) -> std::result::Result<LinComb, String> {
        let mut out = LinComb::new();
        for (x, cx) in a {
            for (y, cy) in b {
                let br = self
                    .bracket(*x, *y)
                    .ok_or_else(|| format!("[{x}, {y}] missing"))?;
                for (l, c) in br {
                    comb_add(&mut out, l, c * cx * cy);
                }
            }
        }
        Ok(out)
    }

    /// Triples violating the Jacobi identity, or with a bracket missing from the table.
    pub fn jacobi_violations(&self) -> Vec<String> {
        let labels: Vec<GenLabel> = self.labels().into_iter().collect();
        let single = |l: GenLabel| LinComb::from([(l, Rational64::one())]);
        let mut bad = Vec::new();
        for (i, &x) in labels.iter().enumerate() {
            for (j, &y) in labels.iter().enumerate().skip(i + 1) {
                for &z in labels.iter().skip(j + 1) {
                    let term = |p: GenLabel, q: GenLabel, r: GenLabel| {
                        let pq = self.bracket_comb(&single(p), &single(q))?;
                        self.bracket_comb(&pq, &single(r))
                    };
                    let sum = [term(x, y, z), term(y, z, x), term(z, x, y)]
                        .into_iter()
                        .try_fold(LinComb::new(), |mut acc, t| {
                            for (l, c) in t? {
                                comb_add(&mut acc, l, c);
                            }
                            Ok::<_, String>(acc)
                        });
                    match sum {
                        Ok(s) if s.is_empty() => {}
                        Ok(s) => bad.push(format!("[[{x},{y}],{z}] + cyclic = {}", comb_text(&s))),
                        Err(e) => bad.push(e),
                    }
                }
            }
        }
        bad
    }
}

/// `[a_i, a⁺_j] = δ_{ij}`, `[a_i, a_j] = [a⁺_i, a⁺_j] = 0`.
pub fn heisenberg_table(n: usize) -> AlgebraTable {
    use GenLabel::*;
    let mut t = AlgebraTable::new("heisenberg", n);
    for i in 0..n {
        for j in 0..n {
            let ok = [
                t.insert(A(i), Ap(j), &[(d(i, j), One)], 1),
                t.insert(A(i), A(j), &[], 1),
                t.insert(Ap(i), Ap(j), &[], 1),
            ];
            ok.into_iter().collect::<Result<()>>().expect("consistent table");
        }
    }
    t
}

/// The `sp(n, ℝ)` brackets among `K⁻`, `K⁰`, `K⁺`.
pub fn sp_table(n: usize) -> AlgebraTable {
    use GenLabel::*;
    let mut t = AlgebraTable::new("sp", n);
    let r = 0..n;
    for i in r.clone() {
        for j in r.clone() {
            for k in r.clone() {
                for l in r.clone() {
                    let ok = [
                        t.insert(Km(i, j), Km(k, l), &[], 1),
                        t.insert(Kp(i, j), Kp(k, l), &[], 1),
                        t.insert(
                            Km(i, j),
                            Kp(k, l),
                            &[
                                (d(l, i), K0(k, j)),
                                (d(k, i), K0(l, j)),
                                (d(l, j), K0(k, i)),
                                (d(k, j), K0(l, i)),
                            ],
                            2,
                        ),
                        t.insert(Km(i, j), K0(k, l), &[(d(k, j), Km(i, l)), (d(k, i), Km(j, l))], 2),
                        t.insert(Kp(i, j), K0(k, l), &[(-d(j, l), Kp(i, k)), (-d(l, i), Kp(j, k))], 2),
                        t.insert(K0(j, i), K0(k, l), &[(d(k, i), K0(j, l)), (-d(l, j), K0(k, i))], 2),
                    ];
                    ok.into_iter().collect::<Result<()>>().expect("consistent table");
                }
            }
        }
    }
    t
}

/// Brackets between the Heisenberg generators and `sp(n, ℝ)`.
pub fn mixed_table(n: usize) -> AlgebraTable {
    use GenLabel::*;
    let mut t = AlgebraTable::new("mixed", n);
    let r = 0..n;
    for i in r.clone() {
        for j in r.clone() {
            for k in r.clone() {
                let ok = [
                    t.insert(Ap(k), Kp(i, j), &[], 1),
                    t.insert(A(k), Km(i, j), &[], 1),
                    t.insert(A(i), Kp(k, j), &[(d(i, k), Ap(j)), (d(i, j), Ap(k))], 2),
                    t.insert(Km(k, j), Ap(i), &[(d(i, k), A(j)), (d(i, j), A(k))], 2),
                    t.insert(K0(i, j), Ap(k), &[(d(j, k), Ap(i))], 2),
                    t.insert(A(k), K0(i, j), &[(d(i, k), A(j))], 2),
                ];
                ok.into_iter().collect::<Result<()>>().expect("consistent table");
            }
        }
    }
    t
}

/// All three tables together.
pub fn jacobi_table(n: usize) -> AlgebraTable {
    let mut t = heisenberg_table(n);
    t.merge(&sp_table(n)).expect("disjoint tables");
    t.merge(&mixed_table(n)).expect("disjoint tables");
    t.name = "jacobi".into();
    t
}

/// A bracket whose realization disagrees with the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub bracket: String,
    pub expected: String,
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub table: String,
    pub n: usize,
    pub sigma: i8,
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn realize<C: Coeff>(gens: &Generators<C>, n: usize, comb: &LinComb) -> Result<PolyDiffOp<C>> {
    let mut out = PolyDiffOp::zero(n);
    for (l, c) in comb {
        let c = C::ratio(*c.numer(), *c.denom());
        let term = match l {
            GenLabel::One => PolyDiffOp::multiplication(MPoly::constant(n, c)),
            l => generator(gens, *l)
                .ok_or_else(|| Error::VariableMismatch(format!("no generator {l}")))?
                .scale(&c),
        };
        out = out.try_add(&term)?;
    }
    Ok(out)
}

/// Checks `σ[X, Y] = Σ c_L L` for every table entry.
pub fn verify_structure_constants<C: Coeff>(
    gens: &Generators<C>,
    table: &AlgebraTable,
    sigma: i8,
) -> Result<StructureReport> {
    let n = table.n;
    let s = C::ratio(sigma as i64, 1);
    let mut mismatches = Vec::new();
    for ((x, y), comb) in table.entries() {
        let gx = realize(gens, n, &LinComb::from([(*x, Rational64::one())]))?;
        let gy = realize(gens, n, &LinComb::from([(*y, Rational64::one())]))?;
        let lhs = op_commutator(&gx, &gy)?.scale(&s);
        let resid = &lhs - &realize(gens, n, comb)?;
        if !resid.is_zero() {
            mismatches.push(Mismatch {
                bracket: format!("[{x}, {y}]"),
                expected: comb_text(comb),
                residual: resid.to_string(),
            });
        }
    }
    Ok(StructureReport {
        table: table.name.clone(),
        n,
        sigma,
        checked: table.len(),
        mismatches,
    })
}

/// The sign `σ ∈ {+1, −1}` under which `gens` realize `table` exactly, if any.
pub fn fit_sigma<C: Coeff>(gens: &Generators<C>, table: &AlgebraTable) -> Result<Option<i8>> {
    for sigma in [1, -1] {
        if verify_structure_constants(gens, table, sigma)?.passed() {
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}

/// Outcome of the convention scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionScan {
    pub sigma: i8,
    pub passing: Vec<Conventions>,
    pub chosen: Conventions,
    pub reports: Vec<StructureReport>,
}

/// Fits `σ` at `n = 1`, keeps the conventions that close at `n = 2`, then asserts the
/// first of those (independent coordinates preferred) on every `n` in `ns`.
pub fn scan_conventions(ns: &[usize]) -> Result<ConventionScan> {
    type Q = GaussRational;
    let sigma = fit_sigma(&jacobi_generators_diff::<Q>(1, Conventions::RESOLVED), &jacobi_table(1))?
        .ok_or_else(|| Error::DomainViolation("no sign closes the n = 1 tables".into()))?;
    let table2 = jacobi_table(2);
    let mut passing = Vec::new();
    for conv in Conventions::all() {
        if verify_structure_constants(&jacobi_generators_diff::<Q>(2, conv), &table2, sigma)?.passed() {
            passing.push(conv);
        }
    }
    let chosen = *passing
        .first()
        .ok_or_else(|| Error::DomainViolation("no convention closes the n = 2 tables".into()))?;
    let mut reports = Vec::new();
    for &n in ns {
        let gens = jacobi_generators_diff::<Q>(n, chosen);
        reports.push(verify_structure_constants(&gens, &jacobi_table(n), sigma)?);
        reports.push(verify_structure_constants(
            &sp_generators_diff::<Q>(n, chosen),
            &sp_table(n),
            sigma,
        )?);
    }
    Ok(ConventionScan {
        sigma,
        passing,
        chosen,
        reports,
    })
}
