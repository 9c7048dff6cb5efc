//! Exact finite polyhomogeneous series `Σ a_{j,k} x^j (log x)^k`.
//!
//! These series are the symbolic carrier for every boundary tail in the
//! pipeline: large-radius tails in ρ = 1/r, and both ends of the transition
//! face in r̂ and 1/r̂. Exponents follow the exact-comparison policy of
//! [`crate::exact`]; coefficients are complex doubles. Each series declares
//! an `error_order`: it represents its function modulo
//! `O(x^{error_order}·(log x)^*)`, with `+∞` meaning "beyond all orders".

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::Error;
use crate::exact::{binomial, factorial, Alg, Exponent};
use crate::indexset::{Horizon, IndexSet, IndexTerm, SetKind};

/// Which formal variable a series expands in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Var {
    /// ρ = 1/r (large-radius side of the zero-energy face and of bf).
    Rho,
    /// r̂ = rσ (small end of the transition face).
    RHat,
    /// ρ̂ = 1/r̂ (large end of the transition face).
    RHatInv,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Rho => "rho",
            Var::RHat => "rhat",
            Var::RHatInv => "rhatinv",
        }
    }

    pub fn parse(s: &str) -> Option<Var> {
        match s {
            "rho" => Some(Var::Rho),
            "rhat" => Some(Var::RHat),
            "rhatinv" => Some(Var::RHatInv),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct Term {
    pub exponent: Exponent,
    pub logpower: u32,
    pub coeff: Complex64,
}

impl Term {
    pub fn new(exponent: Exponent, logpower: u32, coeff: Complex64) -> Self {
        Term { exponent, logpower, coeff }
    }

    pub fn real_exp(re: i64, logpower: u32, coeff: f64) -> Self {
        Term::new(Exponent::from_i64(re), logpower, Complex64::new(coeff, 0.0))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·x^{:?}·log^{}", self.coeff, self.exponent, self.logpower)
    }
}

const COEFF_PRUNE: f64 = 0.0; // exact zeros only; callers prune thresholds

/// Exact finite series with declared error order.
#[derive(Clone, PartialEq)]
pub struct PhgSeries {
    var: Var,
    /// keyed by (exponent, logpower); zero coefficients pruned
    terms: BTreeMap<(Exponent, u32), Complex64>,
    error_order: f64,
}

impl fmt::Debug for PhgSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhgSeries[{}; O({})](", self.var.name(), self.error_order)?;
        for ((e, k), c) in &self.terms {
            write!(f, " {:+}·x^{:?}·L{}", c, e, k)?;
        }
        write!(f, " )")
    }
}

impl PhgSeries {
    pub fn zero(var: Var) -> Self {
        PhgSeries { var, terms: BTreeMap::new(), error_order: f64::INFINITY }
    }

    pub fn zero_with_order(var: Var, error_order: f64) -> Self {
        PhgSeries { var, terms: BTreeMap::new(), error_order }
    }

    pub fn constant(var: Var, c: Complex64) -> Self {
        let mut s = Self::zero(var);
        s.add_term(Term::new(Exponent::from_i64(0), 0, c));
        s
    }

    pub fn from_terms<I: IntoIterator<Item = Term>>(var: Var, terms: I, error_order: f64) -> Self {
        let mut s = Self::zero_with_order(var, error_order);
        for t in terms {
            s.add_term(t);
        }
        s
    }

    pub fn monomial(var: Var, exponent: Exponent, logpower: u32, coeff: Complex64) -> Self {
        Self::from_terms(var, [Term::new(exponent, logpower, coeff)], f64::INFINITY)
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn error_order(&self) -> f64 {
        self.error_order
    }

    pub fn set_error_order(&mut self, e: f64) {
        self.error_order = e;
        let keys: Vec<_> = self
            .terms
            .keys()
            .filter(|(exp, _)| exp.re.to_f64() >= e)
            .cloned()
            .collect();
        for k in keys {
            self.terms.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms
            .iter()
            .map(|((e, k), c)| Term::new(e.clone(), *k, *c))
    }

    pub fn coeff(&self, exponent: &Exponent, logpower: u32) -> Complex64 {
        self.terms
            .get(&(exponent.clone(), logpower))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coeff_real(&self, re: i64, logpower: u32) -> Complex64 {
        self.coeff(&Exponent::from_i64(re), logpower)
    }

    fn add_term(&mut self, t: Term) {
        if t.exponent.re.to_f64() >= self.error_order {
            return; // unrepresented beyond the declared error order
        }
        let key = (t.exponent, t.logpower);
        let entry = self.terms.entry(key.clone()).or_insert(Complex64::new(0.0, 0.0));
        *entry += t.coeff;
        if entry.norm() <= COEFF_PRUNE {
            self.terms.remove(&key);
        }
    }

    pub fn min_re_exponent(&self) -> f64 {
        self.terms
            .keys()
            .map(|(e, _)| e.re.to_f64())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn pi_min(&self) -> Option<Alg> {
        self.terms.keys().map(|(e, _)| e.re.clone()).min()
    }

    pub fn add(&self, other: &PhgSeries) -> Result<PhgSeries, Error> {
        self.check_var(other)?;
        let mut out = PhgSeries::zero_with_order(self.var, self.error_order.min(other.error_order));
        for t in self.terms().chain(other.terms()) {
            out.add_term(t);
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> PhgSeries {
        let mut out = PhgSeries::zero_with_order(self.var, self.error_order);
        for mut t in self.terms() {
            t.coeff *= c;
            out.add_term(t);
        }
        out
    }

    pub fn neg(&self) -> PhgSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn multiply(&self, other: &PhgSeries) -> Result<PhgSeries, Error> {
        self.check_var(other)?;
        // error(a·b) = min(e_a + min Re b, e_b + min Re a); empty factors
        // have min Re = +∞, which degrades gracefully here.
        let pa = self.min_re_exponent();
        let pb = other.min_re_exponent();
        let error_order = (self.error_order + pb).min(other.error_order + pa);
        let mut out = PhgSeries::zero_with_order(self.var, error_order);
        for a in self.terms() {
            for b in other.terms() {
                out.add_term(Term::new(
                    a.exponent.add(&b.exponent),
                    a.logpower + b.logpower,
                    a.coeff * b.coeff,
                ));
            }
        }
        Ok(out)
    }

    /// Multiply by the single term `x^γ (log x)^κ`.
    pub fn mul_term(&self, gamma: &Exponent, kappa: u32, coeff: Complex64) -> PhgSeries {
        let mut out =
            PhgSeries::zero_with_order(self.var, self.error_order + gamma.re.to_f64());
        for t in self.terms() {
            out.add_term(Term::new(
                t.exponent.add(gamma),
                t.logpower + kappa,
                t.coeff * coeff,
            ));
        }
        out
    }

    /// x·d/dx, acting exactly: `x∂x (x^j log^k x) = j x^j log^k x + k x^j log^{k−1} x`.
    pub fn x_d_dx(&self) -> PhgSeries {
        let mut out = PhgSeries::zero_with_order(self.var, self.error_order);
        for t in self.terms() {
            let (jre, jim) = t.exponent.to_complex_f64();
            out.add_term(Term::new(
                t.exponent.clone(),
                t.logpower,
                t.coeff * Complex64::new(jre, jim),
            ));
            if t.logpower > 0 {
                out.add_term(Term::new(
                    t.exponent,
                    t.logpower - 1,
                    t.coeff * t.logpower as f64,
                ));
            }
        }
        out
    }

    /// d/dx, shifting exponents down by one.
    pub fn d_dx(&self) -> PhgSeries {
        self.x_d_dx().mul_term(&Exponent::from_i64(-1), 0, Complex64::new(1.0, 0.0))
    }

    /// d/dr on a series in the declared variable: for ρ = 1/r this is
    /// −ρ²∂ρ; for r̂ it is ∂r̂ scaled by σ, which callers track separately,
    /// so here it is plain d/dx; for ρ̂ = 1/r̂ it is −ρ̂²∂ρ̂.
    pub fn d_dr(&self) -> PhgSeries {
        match self.var {
            Var::Rho | Var::RHatInv => self
                .x_d_dx()
                .mul_term(&Exponent::from_i64(1), 0, Complex64::new(-1.0, 0.0)),
            Var::RHat => self.d_dx(),
        }
    }

    pub fn d_dr2(&self) -> PhgSeries {
        self.d_dr().d_dr()
    }

    /// Numeric evaluation at x (with natural log).
    pub fn eval(&self, x: f64) -> Complex64 {
        let lx = x.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for t in self.terms() {
            let (jre, jim) = t.exponent.to_complex_f64();
            let magnitude = Complex64::new(jre, jim) * lx;
            let xp = magnitude.exp();
            acc += t.coeff * xp * lx.powi(t.logpower as i32);
        }
        acc
    }

    /// The (exponent, logpower) support as a pre-index set.
    pub fn index_set(&self, horizon: Horizon) -> IndexSet {
        IndexSet::from_terms(
            SetKind::Pre,
            horizon,
            self.terms().map(|t| IndexTerm::new(t.exponent, t.logpower)),
        )
    }

    fn check_var(&self, other: &PhgSeries) -> Result<(), Error> {
        if self.var != other.var {
            return Err(Error::VariableMismatch {
                expected: self.var.name(),
                got: other.var.name(),
            });
        }
        Ok(())
    }

    /// Drops terms with |coeff| below `tol` (numeric cleanup after long
    /// exact manipulations).
    pub fn pruned(&self, tol: f64) -> PhgSeries {
        let mut out = PhgSeries::zero_with_order(self.var, self.error_order);
        for t in self.terms() {
            if t.coeff.norm() > tol {
                out.add_term(t);
            }
        }
        out
    }

    /// Text serialisation: header `# var <name> error_order <e>` then lines
    /// `Re(j) Im(j) k Re(coeff) Im(coeff)`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# var {} error_order {:e}\n", self.var.name(), self.error_order);
        for t in self.terms() {
            let (re, im) = t.exponent.to_complex_f64();
            out.push_str(&format!(
                "{:+.16e} {:+.16e} {} {:+.16e} {:+.16e}\n",
                re, im, t.logpower, t.coeff.re, t.coeff.im
            ));
        }
        out
    }
}

/// `ρ^a ∫_ρ^1 s^{−a−1} f(s) ds`, exactly, with the integration constant
/// fixed by the upper limit 1. Resonance (a term of `f` with exponent
/// exactly `a`) raises the log power by one; everything else integrates to
/// the same exponents plus a pure `ρ^a` boundary contribution. The support
/// of the output is contained in `(a,0) ⊎ support(f)`.
pub fn resonant_integral(a: &Exponent, f: &PhgSeries) -> PhgSeries {
    let mut out = PhgSeries::zero_with_order(f.var(), f.error_order());
    for t in f.terms() {
        if t.exponent == *a {
            // ∫_ρ^1 s^{−1} log^k s ds = −log^{k+1}ρ/(k+1)
            out.add_term(Term::new(
                a.clone(),
                t.logpower + 1,
                -t.coeff / (t.logpower + 1) as f64,
            ));
        } else {
            // m = j − a ≠ 0. With F(s) the primitive of s^{m−1} log^k s:
            // F(s) = s^m Σ_{i≤k} (−1)^i k!/(k−i)! log^{k−i}s / m^{i+1},
            // the contribution is ρ^a (F(1) − F(ρ)).
            let m = t.exponent.sub(a);
            let (mre, mim) = m.to_complex_f64();
            let mc = Complex64::new(mre, mim);
            let k = t.logpower;
            // F(1): only the i=k term survives (log 1 = 0).
            let f1 = (-1.0f64).powi(k as i32) * factorial(k) / mc.powu(k + 1);
            out.add_term(Term::new(a.clone(), 0, t.coeff * f1));
            let mut pref = Complex64::new(1.0, 0.0);
            for i in 0..=k {
                // (−1)^i k!/(k−i)! / m^{i+1}
                let fac = factorial(k) / factorial(k - i);
                let c = pref * fac / mc.powu(i + 1);
                out.add_term(Term::new(
                    t.exponent.clone(),
                    k - i,
                    -t.coeff * c,
                ));
                pref = -pref;
            }
        }
    }
    out
}

/// `ρ^a ∫_0^ρ s^{−a−1} f(s) ds`, exactly; requires every exponent of `f`
/// to exceed `Re a` strictly (otherwise the integral diverges at 0).
pub fn integral_from_zero(a: &Exponent, f: &PhgSeries) -> Result<PhgSeries, Error> {
    let mut out = PhgSeries::zero_with_order(f.var(), f.error_order());
    for t in f.terms() {
        let m = t.exponent.sub(a);
        if m.re.sign() <= 0 {
            return Err(Error::ForcingTooStrong(format!(
                "integral from zero needs Re j > Re a; got Re j − Re a = {}",
                m.re.to_f64()
            )));
        }
        let (mre, mim) = m.to_complex_f64();
        let mc = Complex64::new(mre, mim);
        let k = t.logpower;
        let mut pref = Complex64::new(1.0, 0.0);
        for i in 0..=k {
            let fac = factorial(k) / factorial(k - i);
            let c = pref * fac / mc.powu(i + 1);
            out.add_term(Term::new(t.exponent.clone(), k - i, t.coeff * c));
            pref = -pref;
        }
    }
    Ok(out)
}

/// One σ-stratum of a transition-face rewrite.
#[derive(Clone, Debug)]
pub struct SigmaStratum {
    pub sigma_exponent: Exponent,
    pub sigma_logpower: u32,
    /// Profile factor in the output variable r̂.
    pub term: Term,
}

/// Rewrites `ρ^j (log ρ)^k` with ρ = σ/r̂ into σ-strata with r̂-profiles:
///
/// ```text
/// ρ^j (log ρ)^k = σ^j r̂^{−j} Σ_κ C(k,κ) (log σ)^κ (−log r̂)^{k−κ}
/// ```
///
/// The sum of the output reproduces the input identically.
pub fn sigma_rewrite(term: &Term) -> Vec<SigmaStratum> {
    let mut out = Vec::with_capacity(term.logpower as usize + 1);
    for kappa in 0..=term.logpower {
        let sign = if (term.logpower - kappa) % 2 == 0 { 1.0 } else { -1.0 };
        let c = binomial(term.logpower, kappa) * sign;
        out.push(SigmaStratum {
            sigma_exponent: term.exponent.clone(),
            sigma_logpower: kappa,
            term: Term::new(
                term.exponent.neg(),
                term.logpower - kappa,
                term.coeff * c,
            ),
        });
    }
    out
}
