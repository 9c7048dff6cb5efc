//! Calculus of pre-index sets and index sets.
//!
//! A pre-index set is a subset of ℂ×ℕ that is finite below any real
//! threshold and closed downward in the log power: `(j,k+1)` present forces
//! `(j,k)`. An index set is additionally closed under `(j,k) → (j+1,k)`.
//! Every set here is truncated at a mandatory horizon, which keeps all sets
//! finite and all operations total; behaviour above the horizon is
//! unrepresented by construction.
//!
//! The central operation is `uplus`, which merges a single `(j,k)` into a
//! set while generating the logarithmic terms forced by resonance (exact
//! exponent collision):
//!
//! ```text
//! (j,k) ⊎ E = (j,k) ∪ E ∪ { (j+δ, k'+κ+1) : (j,κ) ∈ E, δ ∈ ℕ, 0 ≤ k' ≤ k }
//! ```
//!
//! On top of it sit the cone envelopes over indicial roots, the zf
//! fixed-point recursion that predicts which `(exponent, logpower)` pairs a
//! zero-energy solve can produce, and the tf step-set formulas that track
//! what a transition-face solve feeds back to the other faces.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Signed;

use crate::error::Error;
use crate::exact::{rat_from_i64, Alg, Exponent, Order, Rat};

/// One `(exponent, logpower)` pair of an asymptotic expansion.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexTerm {
    pub exponent: Exponent,
    pub logpower: u32,
}

impl IndexTerm {
    pub fn new(exponent: Exponent, logpower: u32) -> Self {
        IndexTerm { exponent, logpower }
    }

    pub fn real(re: i64, logpower: u32) -> Self {
        IndexTerm { exponent: Exponent::from_i64(re), logpower }
    }
}

impl fmt::Debug for IndexTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{})", self.exponent, self.logpower)
    }
}

/// Truncation threshold; everything with `Re j > horizon` is unrepresented.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Horizon {
    Finite(Alg),
    Inf,
}

impl Horizon {
    pub fn from_f64(x: f64) -> Self {
        Horizon::Finite(Alg::from_f64(x))
    }

    pub fn admits(&self, re: &Alg) -> bool {
        match self {
            Horizon::Inf => true,
            Horizon::Finite(h) => re.cmp_exact(h) != std::cmp::Ordering::Greater,
        }
    }

    pub fn min(&self, other: &Horizon) -> Horizon {
        match (self, other) {
            (Horizon::Inf, o) | (o, Horizon::Inf) => o.clone(),
            (Horizon::Finite(a), Horizon::Finite(b)) => {
                Horizon::Finite(if a <= b { a.clone() } else { b.clone() })
            }
        }
    }

    pub fn shifted(&self, delta: &Alg) -> Horizon {
        match self {
            Horizon::Inf => Horizon::Inf,
            Horizon::Finite(h) => Horizon::Finite(h.add(delta)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Horizon::Inf => f64::INFINITY,
            Horizon::Finite(h) => h.to_f64(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SetKind {
    Pre,
    Index,
}

/// Finite truncated pre-index set or index set.
///
/// Invariants maintained by every constructor and operation: downward-log
/// closure, truncation at the horizon, and (for `SetKind::Index`) eager
/// closure under integer exponent shifts up to the horizon.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexSet {
    terms: BTreeSet<IndexTerm>,
    horizon: Horizon,
    kind: SetKind,
}

/// Downward-log closure check on a raw collection of pairs; finiteness is
/// automatic for finite input.
pub fn is_pre_index_set<'a, I: IntoIterator<Item = &'a IndexTerm>>(terms: I) -> bool {
    let set: BTreeSet<&IndexTerm> = terms.into_iter().collect();
    set.iter().all(|t| {
        t.logpower == 0
            || set.contains(&IndexTerm::new(t.exponent.clone(), t.logpower - 1))
    })
}

impl IndexSet {
    pub fn empty(kind: SetKind, horizon: Horizon) -> Self {
        if kind == SetKind::Index {
            assert!(
                matches!(horizon, Horizon::Finite(_)),
                "index sets require a finite horizon"
            );
        }
        IndexSet { terms: BTreeSet::new(), horizon, kind }
    }

    pub fn from_terms<I: IntoIterator<Item = IndexTerm>>(
        kind: SetKind,
        horizon: Horizon,
        terms: I,
    ) -> Self {
        let mut s = Self::empty(kind, horizon);
        for t in terms {
            s.insert_raw(t);
        }
        s.close();
        s
    }

    /// The set generated by a single `(j,k)` (with log and shift closure).
    pub fn singleton(kind: SetKind, horizon: Horizon, term: IndexTerm) -> Self {
        Self::from_terms(kind, horizon, [term])
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IndexTerm> {
        self.terms.iter()
    }

    pub fn contains(&self, term: &IndexTerm) -> bool {
        self.terms.contains(term)
    }

    fn insert_raw(&mut self, term: IndexTerm) {
        if self.horizon.admits(&term.exponent.re) {
            self.terms.insert(term);
        }
    }

    /// Re-establishes downward-log closure and, for index sets, integer
    /// shift closure up to the horizon.
    fn close(&mut self) {
        let mut frontier: Vec<IndexTerm> = self.terms.iter().cloned().collect();
        while let Some(t) = frontier.pop() {
            if t.logpower > 0 {
                let down = IndexTerm::new(t.exponent.clone(), t.logpower - 1);
                if self.horizon.admits(&down.exponent.re) && self.terms.insert(down.clone()) {
                    frontier.push(down);
                }
            }
            if self.kind == SetKind::Index {
                let up = IndexTerm::new(t.exponent.add_i64(1), t.logpower);
                if self.horizon.admits(&up.exponent.re) && self.terms.insert(up.clone()) {
                    frontier.push(up);
                }
            }
        }
    }

    /// Promotes to an index set (applies integer-shift closure).
    pub fn into_index_kind(mut self) -> Self {
        if self.kind == SetKind::Pre {
            assert!(
                matches!(self.horizon, Horizon::Finite(_)),
                "index sets require a finite horizon"
            );
            self.kind = SetKind::Index;
            self.close();
        }
        self
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let kind = if self.kind == SetKind::Index && other.kind == SetKind::Index {
            SetKind::Index
        } else {
            SetKind::Pre
        };
        let horizon = self.horizon.min(&other.horizon);
        let mut s = IndexSet::empty(kind, horizon);
        for t in self.terms.iter().chain(other.terms.iter()) {
            s.insert_raw(t.clone());
        }
        s.close();
        s
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.terms.is_subset(&other.terms)
    }

    /// `{(j+γ, k+ϰ) : (j,k) ∈ E, 0 ≤ ϰ ≤ κ}`. The horizon shifts along
    /// with the content: completeness up to `h` becomes completeness up to
    /// `h + Re γ`.
    pub fn shift(&self, gamma: &Exponent, kappa: u32) -> IndexSet {
        let mut s = IndexSet::empty(self.kind, self.horizon.shifted(&gamma.re));
        for t in &self.terms {
            for dk in 0..=kappa {
                s.insert_raw(IndexTerm::new(t.exponent.add(gamma), t.logpower + dk));
            }
        }
        s.close();
        s
    }

    pub fn shift_re(&self, gamma: &Alg, kappa: u32) -> IndexSet {
        self.shift(&Exponent::real(gamma.clone()), kappa)
    }

    pub fn shift_i64(&self, gamma: i64, kappa: u32) -> IndexSet {
        self.shift(&Exponent::from_i64(gamma), kappa)
    }

    /// Keeps `{Re j < α}` (`below`) or its complement within the terms.
    pub fn truncate(&self, alpha: &Alg, below: bool) -> IndexSet {
        let mut s = IndexSet::empty(SetKind::Pre, self.horizon.clone());
        for t in &self.terms {
            let lt = t.exponent.re.cmp_exact(alpha) == std::cmp::Ordering::Less;
            if lt == below {
                s.insert_raw(t.clone());
            }
        }
        // Truncation generally breaks shift closure, so the result is
        // reported as a pre-index set; log closure survives either cut for
        // `below` and is re-established for the complement.
        s.close();
        s
    }

    pub fn truncate_f64(&self, alpha: f64, below: bool) -> IndexSet {
        self.truncate(&Alg::from_f64(alpha), below)
    }

    /// `min{Re j : (j,k) ∈ E}`, `+∞` for the empty set.
    pub fn pi_min(&self) -> Option<Alg> {
        self.terms.iter().map(|t| t.exponent.re.clone()).min()
    }

    pub fn pi_min_f64(&self) -> f64 {
        self.pi_min().map(|a| a.to_f64()).unwrap_or(f64::INFINITY)
    }

    /// Largest `k` with `(j,k)` present, if any.
    pub fn max_logpower_at(&self, j: &Exponent) -> Option<u32> {
        self.terms
            .iter()
            .filter(|t| &t.exponent == j)
            .map(|t| t.logpower)
            .max()
    }

    /// Distinct exponents, sorted.
    pub fn exponents(&self) -> Vec<Exponent> {
        let mut out: Vec<Exponent> = Vec::new();
        for t in &self.terms {
            if out.last() != Some(&t.exponent) {
                out.push(t.exponent.clone());
            }
        }
        out
    }

    /// Sorted text lines `Re(j) Im(j) k` (golden-test format).
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let (re, im) = t.exponent.to_complex_f64();
            out.push_str(&format!("{:+.12e} {:+.12e} {}\n", re, im, t.logpower));
        }
        out
    }
}

/// `(j,k) ⊎ E`: merge with resonance-generated logs, truncated at E's
/// horizon. The output keeps E's kind; as with every constructor the result
/// is completed to a valid pre-index set (and shift-closed when E is an
/// index set).
pub fn uplus(j: &Exponent, k: u32, e: &IndexSet) -> IndexSet {
    let mut out = IndexSet::empty(e.kind, e.horizon.clone());
    out.insert_raw(IndexTerm::new(j.clone(), k));
    for t in e.iter() {
        out.insert_raw(t.clone());
    }
    if let Some(kappa_max) = e.max_logpower_at(j) {
        // Resonance: every (j,κ) in E spawns (j+δ, k'+κ+1), δ ∈ ℕ.
        for kappa in 0..=kappa_max {
            for kp in 0..=k {
                let mut delta = 0i64;
                loop {
                    let exp = j.add_i64(delta);
                    if !e.horizon.admits(&exp.re) {
                        break;
                    }
                    out.insert_raw(IndexTerm::new(exp, kp + kappa + 1));
                    delta += 1;
                }
            }
        }
    }
    out.close();
    out
}

pub fn uplus_real(re: i64, k: u32, e: &IndexSet) -> IndexSet {
    uplus(&Exponent::from_i64(re), k, e)
}

/// Indicial roots of `−a² + (d−2)a + λ`, returned as `(b, c)` where the
/// roots are `−b ≤ 0` and `c ≥ d−2`.
pub fn indicial_roots(d: u32, lambda: &Rat) -> (Alg, Alg) {
    assert!(d >= 3, "dimension must be at least 3");
    assert!(!lambda.is_negative(), "boundary eigenvalue must be nonnegative");
    let dm2 = rat_from_i64(d as i64 - 2);
    let disc = &dm2 * &dm2 + lambda * rat_from_i64(4);
    let root = Alg::sqrt_rat(&disc);
    let b = root.add_rat(&(-dm2.clone())).half();
    let c = root.add_rat(&dm2).half();
    (b, c)
}

pub fn indicial_roots_f64(d: u32, lambda: f64) -> (f64, f64) {
    let (b, c) = indicial_roots(d, &crate::exact::rat_from_f64(lambda));
    (b.to_f64(), c.to_f64())
}

/// One harmonic line of the cone: boundary eigenvalue and indicial roots.
#[derive(Clone, Debug)]
pub struct Mode {
    pub lambda: Rat,
    pub b: Alg,
    pub c: Alg,
}

/// Dimension plus the list of boundary eigenvalues, with indicial roots
/// `b_l`, `c_l` precomputed per harmonic line. The eigenvalue list must be
/// nondecreasing; repeats are allowed.
#[derive(Clone, Debug)]
pub struct ConeData {
    pub d: u32,
    pub modes: Vec<Mode>,
}

impl ConeData {
    pub fn new(d: u32, lambdas: Vec<Rat>) -> Result<Self, Error> {
        if d < 3 {
            return Err(Error::Validation(format!("dimension d = {} < 3", d)));
        }
        for w in lambdas.windows(2) {
            if w[0] > w[1] {
                return Err(Error::Validation("eigenvalue list must be nondecreasing".into()));
            }
        }
        let modes = lambdas
            .into_iter()
            .map(|lambda| {
                if lambda.is_negative() {
                    return Err(Error::Validation("negative boundary eigenvalue".into()));
                }
                let (b, c) = indicial_roots(d, &lambda);
                Ok(Mode { lambda, b, c })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ConeData { d, modes })
    }

    /// Round sphere boundary: λ_l = l(l+d−2) for l = 0..=l_max (distinct
    /// eigenvalues, one line per l). Then b_l = l and c_l = d−2+l.
    pub fn sphere(d: u32, l_max: usize) -> Self {
        let lambdas = (0..=l_max as i64)
            .map(|l| rat_from_i64(l * (l + d as i64 - 2)))
            .collect();
        Self::new(d, lambdas).expect("sphere data is always valid")
    }

    pub fn mode(&self, l: usize) -> &Mode {
        &self.modes[l]
    }

    pub fn b_f64(&self, l: usize) -> f64 {
        self.modes[l].b.to_f64()
    }

    pub fn c_f64(&self, l: usize) -> f64 {
        self.modes[l].c.to_f64()
    }

    /// Checks the mode list reaches past the horizon in the given root
    /// family, so unions over `l ≥ ℓ` are complete below the horizon.
    fn certify_coverage(
        &self,
        ell: usize,
        horizon: &Horizon,
        use_c: bool,
    ) -> Result<(), Error> {
        let h = match horizon {
            Horizon::Inf => {
                return Err(Error::InsufficientModes(
                    "cannot certify mode coverage up to an infinite horizon".into(),
                ))
            }
            Horizon::Finite(h) => h,
        };
        let covered = self.modes.iter().skip(ell).any(|m| {
            let root = if use_c { &m.c } else { &m.b };
            root.cmp_exact(h) == std::cmp::Ordering::Greater
        });
        if covered {
            Ok(())
        } else {
            Err(Error::InsufficientModes(format!(
                "mode list (len {}) does not certify completeness past horizon {} from l = {}",
                self.modes.len(),
                h.to_f64(),
                ell
            )))
        }
    }
}

/// `𝓒_ℓ ⊎ E = ∪_{l ≥ ℓ} (c_l,0) ⊎ E`, truncated at E's horizon, closed as
/// an index set. Errors if the mode list cannot certify completeness.
pub fn c_uplus(cone: &ConeData, ell: usize, e: &IndexSet) -> Result<IndexSet, Error> {
    cone.certify_coverage(ell, e.horizon(), true)?;
    let e_idx = e.clone().into_index_kind();
    let mut acc = IndexSet::empty(SetKind::Index, e.horizon().clone());
    let mut any = false;
    for m in cone.modes.iter().skip(ell) {
        if !e.horizon().admits(&m.c) {
            continue;
        }
        any = true;
        acc = acc.union(&uplus(&Exponent::real(m.c.clone()), 0, &e_idx));
    }
    // All c_l above the horizon: each (c_l,0)⊎E term reduces to E below it.
    if !any && !e_idx.is_empty() {
        acc = e_idx;
    }
    Ok(acc)
}

/// Smallest index set containing `(b_j,0) ⊎ G` for every `j ≥ ℓ`.
pub fn b_envelope(cone: &ConeData, ell: usize, g: &IndexSet) -> Result<IndexSet, Error> {
    cone.certify_coverage(ell, g.horizon(), false)?;
    let g_idx = g.clone().into_index_kind();
    let mut acc = IndexSet::empty(SetKind::Index, g.horizon().clone());
    let mut any = false;
    for m in cone.modes.iter().skip(ell) {
        if !g.horizon().admits(&m.b) {
            continue;
        }
        any = true;
        acc = acc.union(&uplus(&Exponent::real(m.b.clone()), 0, &g_idx));
    }
    if !any && !g_idx.is_empty() {
        acc = g_idx;
    }
    Ok(acc)
}

fn shift_order(set: &IndexSet, order: Order) -> IndexSet {
    match order {
        Order::Inf => IndexSet::empty(set.kind(), set.horizon().clone()),
        Order::Finite(n) => set.shift_i64(1 + n as i64, 0),
    }
}

/// Least fixed point of the zero-energy index-set recursion
///
/// ```text
/// 𝓘^{k+1}   = 𝓘^k   ∪ (𝓒_ℓ ⊎ (𝓔   ∪ (1+ℶ₀+𝓘_∪^k) ∪ (1+ℶ+𝓘^k)))
/// 𝓘_l^{k+1} = 𝓘_l^k ∪ ((c_l,0) ⊎ (𝓔_l ∪ (1+ℶ₀+𝓘_∪^k) ∪ (1+ℶ+𝓘_l^k)))
/// ```
///
/// truncated at the horizon. `sym` is the decay order of symmetric
/// perturbations below subleading (ℶ), `brk` the symmetry-breaking one
/// (ℶ₀). Termination within `⌈(h − min{d−2, Π𝓔_∪})/(1+ℶ)⌉` rounds is a
/// theorem; exceeding the cap with slack signals an invariant violation.
pub fn zf_fixed_point(
    cone: &ConeData,
    ell: usize,
    e: &IndexSet,
    e_l: &[IndexSet],
    sym: Order,
    brk: Order,
    horizon: &Horizon,
) -> Result<(IndexSet, Vec<IndexSet>), Error> {
    assert_eq!(e_l.len(), ell, "one low-mode set per l < ℓ expected");
    if let (Order::Finite(a), Order::Finite(b)) = (sym, brk) {
        if a > b {
            return Err(Error::Validation("need ℶ ≤ ℶ₀".into()));
        }
    }
    let as_idx = |s: &IndexSet| -> IndexSet {
        let mut t = s.clone();
        if !matches!(t.horizon(), Horizon::Finite(_)) || t.horizon() != horizon {
            t = IndexSet::from_terms(SetKind::Pre, horizon.clone(), t.iter().cloned());
        }
        t.into_index_kind()
    };
    let e = as_idx(e);
    let e_l: Vec<IndexSet> = e_l.iter().map(&as_idx).collect();

    let mut cur = e.clone();
    let mut cur_l = e_l.clone();
    // Cap from the termination bound, with slack for the union bookkeeping.
    let pi_all = cur_l
        .iter()
        .chain(std::iter::once(&cur))
        .filter_map(|s| s.pi_min())
        .min();
    let base = match pi_all {
        Some(p) => p.to_f64().min(cone.d as f64 - 2.0),
        None => cone.d as f64 - 2.0,
    };
    let cap = match sym {
        Order::Inf => 2,
        Order::Finite(n) => {
            ((horizon.to_f64() - base) / (1.0 + n as f64)).ceil().max(1.0) as usize + 2
        }
    };

    for _ in 0..=cap {
        let mut cup = cur.clone();
        for s in &cur_l {
            cup = cup.union(s);
        }
        let brk_part = shift_order(&cup, brk);

        let arg = e.union(&brk_part).union(&shift_order(&cur, sym));
        let next = cur.union(&c_uplus(cone, ell, &arg)?);

        let mut next_l = Vec::with_capacity(ell);
        for (l, set_l) in cur_l.iter().enumerate() {
            let arg_l = e_l[l].union(&brk_part).union(&shift_order(set_l, sym));
            let piece = uplus(&Exponent::real(cone.mode(l).c.clone()), 0, &arg_l);
            next_l.push(set_l.union(&piece));
        }

        if next == cur && next_l == cur_l {
            return Ok((cur, cur_l));
        }
        cur = next;
        cur_l = next_l;
    }
    Err(Error::IterationCap(
        "zf index-set recursion did not stabilise within its termination bound".into(),
    ))
}

/// The six decay orders of the perturbation families: the second-order part
/// (metric + potential), the first-order σ-coefficient, and the zeroth-order
/// σ²-coefficient, each split into a radial (symmetric) and an angular
/// (symmetry-breaking) order.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationOrders {
    pub v_radial: Order,
    pub v_angular: Order,
    pub q_radial: Order,
    pub q_angular: Order,
    pub r_radial: Order,
    pub r_angular: Order,
}

impl PerturbationOrders {
    pub fn schrodinger(v_radial: Order, v_angular: Order) -> Self {
        PerturbationOrders {
            v_radial,
            v_angular,
            q_radial: Order::Inf,
            q_angular: Order::Inf,
            r_radial: Order::Inf,
            r_angular: Order::Inf,
        }
    }

    fn radial_min(&self) -> Order {
        self.v_radial.min(self.q_radial).min(self.r_radial)
    }

    fn angular_min(&self) -> Order {
        self.v_angular.min(self.q_angular).min(self.r_angular)
    }
}

/// Output of one tf step at the index-set level.
#[derive(Clone, Debug)]
pub struct TfStepSets {
    /// New zf content from the remainder modes.
    pub k_rem: IndexSet,
    /// New zf content per low mode.
    pub k_l: Vec<IndexSet>,
    /// Updated tf set for the remainder.
    pub f_plus: IndexSet,
    /// Updated tf sets per low mode.
    pub f_l_plus: Vec<IndexSet>,
}

/// Step-set formulas for solving away tf strata up to thresholds `K`, `K_l`:
///
/// ```text
/// 𝓚   = ∪_{(j,k)∈𝓕,  Re j ≤ K}   j + ℬ_{≥ℓ}[(1−j, k_j−k)]
/// 𝓚_l = ∪_{(j,k)∈𝓕_l, Re j ≤ K_l} (b_l+j,0) ⊎ (1, k_{l,j}−k)
/// 𝓕⁺   = 𝓕_{≥K}   ∪ (1+ℶ∧ℶ₁∧ℶ₃+𝓕) ∪ (1+ℶ₀∧ℶ₂∧ℶ₄+𝓕_∪)
/// 𝓕_l⁺ = 𝓕_{l,≥K_l} ∪ (1+ℶ∧ℶ₁∧ℶ₃+𝓕_l)
/// ```
///
/// where `k_{•,j}` is the largest log power at `j`. Inputs must satisfy
/// `𝓕_• ⊂ {Re > 0}×ℕ`; a resulting `min Π𝓚_• ≤ 0` is a hard error carrying
/// the offending term.
pub fn tf_step_sets(
    cone: &ConeData,
    ell: usize,
    f: &IndexSet,
    f_l: &[IndexSet],
    k_threshold: f64,
    k_l_thresholds: &[f64],
    orders: &PerturbationOrders,
) -> Result<TfStepSets, Error> {
    assert_eq!(f_l.len(), ell);
    assert_eq!(k_l_thresholds.len(), ell);
    for set in std::iter::once(f).chain(f_l.iter()) {
        if let Some(p) = set.pi_min() {
            if p.sign() <= 0 {
                return Err(Error::Validation(format!(
                    "tf index sets must lie in Re > 0; found min Re = {}",
                    p.to_f64()
                )));
            }
        }
    }
    let horizon = f.horizon().clone();
    let zero = Alg::zero();

    // Remainder: 𝓚 = ∪ (j + ℬ_{≥ℓ}[(1−j, k_j−k)]).
    let mut k_rem = IndexSet::empty(SetKind::Index, horizon.clone());
    for t in f.iter() {
        if t.exponent.re.to_f64() > k_threshold + 1e-12 {
            continue;
        }
        let k_j = f.max_logpower_at(&t.exponent).unwrap_or(t.logpower);
        let seed = IndexSet::singleton(
            SetKind::Index,
            horizon.shifted(&t.exponent.re.neg()),
            IndexTerm::new(
                Exponent::from_i64(1).sub(&t.exponent),
                k_j - t.logpower,
            ),
        );
        let env = b_envelope(cone, ell, &seed)?;
        k_rem = k_rem.union(&env.shift(&t.exponent, 0));
    }

    // Low modes: 𝓚_l = ∪ (b_l+j,0) ⊎ (1, k_{l,j}−k).
    let mut k_l = Vec::with_capacity(ell);
    for (l, set_l) in f_l.iter().enumerate() {
        let mut acc = IndexSet::empty(SetKind::Index, horizon.clone());
        for t in set_l.iter() {
            if t.exponent.re.to_f64() > k_l_thresholds[l] + 1e-12 {
                continue;
            }
            let k_lj = set_l.max_logpower_at(&t.exponent).unwrap_or(t.logpower);
            let seed = IndexSet::singleton(
                SetKind::Index,
                horizon.clone(),
                IndexTerm::real(1, k_lj - t.logpower),
            );
            acc = acc.union(&uplus(
                &t.exponent.add_alg(&cone.mode(l).b),
                0,
                &seed,
            ));
        }
        k_l.push(acc);
    }

    for (which, set) in std::iter::once((usize::MAX, &k_rem)).chain(k_l.iter().enumerate()) {
        if let Some(p) = set.pi_min() {
            if p.cmp_exact(&zero) != std::cmp::Ordering::Greater {
                return Err(Error::PositivityViolation(format!(
                    "tf step produced a zf term with Re exponent {} ≤ 0 (mode {})",
                    p.to_f64(),
                    if which == usize::MAX { "remainder".into() } else { which.to_string() }
                )));
            }
        }
    }

    // 𝓕⁺ updates.
    let f_cup = f_l.iter().fold(f.clone(), |acc, s| acc.union(s));
    let radial = shift_order(&f.clone(), orders.radial_min());
    let angular = shift_order(&f_cup, orders.angular_min());
    let f_plus = f
        .truncate(&Alg::from_f64(k_threshold), false)
        .union(&radial)
        .union(&angular);
    let f_l_plus = f_l
        .iter()
        .enumerate()
        .map(|(l, s)| {
            s.truncate(&Alg::from_f64(k_l_thresholds[l]), false)
                .union(&shift_order(s, orders.radial_min()))
        })
        .collect();

    Ok(TfStepSets { k_rem, k_l, f_plus, f_l_plus })
}

/// Large-radius update rule at bf:
/// `𝓔_•⁺⁺ = 𝓔_• ∪ ((2+ℶ)∧(1+ℶ₁)∧(1+ℶ₃)+𝓔_•⁺) ∪ ((2+ℶ₀)∧(1+ℶ₂)∧(1+ℶ₄)+𝓔_∪⁺)`
/// with `𝓔_•⁺ = ((d−1)/2, 0) ⊎ 𝓔_•`.
pub fn bf_update(
    cone: &ConeData,
    e_bullet: &[IndexSet],
    orders: &PerturbationOrders,
) -> Vec<IndexSet> {
    let half = Exponent::real(Alg::from_rat(Rat::new(
        (cone.d as i64 - 1).into(),
        2.into(),
    )));
    let e_plus: Vec<IndexSet> = e_bullet.iter().map(|e| uplus(&half, 0, e)).collect();
    let e_plus_cup = e_plus
        .iter()
        .skip(1)
        .fold(e_plus[0].clone(), |acc, s| acc.union(s));
    let rad = orders
        .v_radial
        .plus(2)
        .min(orders.q_radial.plus(1))
        .min(orders.r_radial.plus(1));
    let ang = orders
        .v_angular
        .plus(2)
        .min(orders.q_angular.plus(1))
        .min(orders.r_angular.plus(1));
    e_bullet
        .iter()
        .zip(&e_plus)
        .map(|(e, ep)| {
            let mut out = e.clone();
            if let Order::Finite(n) = rad {
                out = out.union(&ep.shift_i64(n as i64, 0));
            }
            if let Order::Finite(n) = ang {
                out = out.union(&e_plus_cup.shift_i64(n as i64, 0));
            }
            out
        })
        .collect()
}

/// zf-residual update of a zero-energy solve round:
/// `𝓘⁺ = 𝓕 ∪ 𝓘 ∪ (1+ℶ₀+𝓘_∪) ∪ (1+ℶ₂∧(1+ℶ₄)+𝓘_∪)`.
pub fn zf_residual_sets(
    f_bullet: &[IndexSet],
    i_bullet: &[IndexSet],
    orders: &PerturbationOrders,
) -> Vec<IndexSet> {
    assert_eq!(f_bullet.len(), i_bullet.len());
    let i_cup = i_bullet
        .iter()
        .skip(1)
        .fold(i_bullet[0].clone(), |acc, s| acc.union(s));
    let extra = orders.q_angular.min(orders.r_angular.plus(1));
    f_bullet
        .iter()
        .zip(i_bullet)
        .map(|(f, i)| {
            let mut out = f.union(i);
            if let Order::Finite(n) = orders.v_angular {
                out = out.union(&i_cup.shift_i64(1 + n as i64, 0));
            }
            if let Order::Finite(n) = extra {
                out = out.union(&i_cup.shift_i64(1 + n as i64, 0));
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat_from_f64;

    fn h(x: f64) -> Horizon {
        Horizon::from_f64(x)
    }

    fn pre(horizon: f64, terms: &[(i64, u32)]) -> IndexSet {
        IndexSet::from_terms(
            SetKind::Pre,
            h(horizon),
            terms.iter().map(|&(j, k)| IndexTerm::real(j, k)),
        )
    }

    fn idx(horizon: f64, terms: &[(i64, u32)]) -> IndexSet {
        pre(horizon, terms).into_index_kind()
    }

    fn as_pairs(s: &IndexSet) -> Vec<(f64, u32)> {
        s.iter()
            .map(|t| (t.exponent.re.to_f64(), t.logpower))
            .collect()
    }

    #[test]
    fn pre_index_set_predicate() {
        assert!(is_pre_index_set(&[]));
        let ok = [IndexTerm::real(0, 0), IndexTerm::real(0, 1), IndexTerm::real(1, 0)];
        assert!(is_pre_index_set(&ok));
        let bad = [IndexTerm::real(0, 1)];
        assert!(!is_pre_index_set(&bad));
    }

    #[test]
    fn uplus_no_resonance() {
        // (2,0) ⊎ ∅ = {(2,0)} for a pre-index set.
        let e = pre(6.0, &[]);
        let out = uplus_real(2, 0, &e);
        assert_eq!(as_pairs(&out), vec![(2.0, 0)]);
        // (1,0) ⊎ {(2,0)} = {(1,0),(2,0)}.
        let out = uplus_real(1, 0, &pre(6.0, &[(2, 0)]));
        assert_eq!(as_pairs(&out), vec![(1.0, 0), (2.0, 0)]);
    }

    #[test]
    fn uplus_resonance_generates_logs() {
        // (1,0) ⊎ {(1,0)} ⊇ {(1,0)} ∪ {(1+δ,1)}; log closure fills (1+δ,0).
        let out = uplus_real(1, 0, &pre(3.5, &[(1, 0)]));
        let pairs = as_pairs(&out);
        assert!(pairs.contains(&(1.0, 0)));
        assert!(pairs.contains(&(1.0, 1)));
        assert!(pairs.contains(&(2.0, 1)));
        assert!(pairs.contains(&(3.0, 1)));
        assert!(is_pre_index_set(out.iter().collect::<Vec<_>>().into_iter()));
    }

    #[test]
    fn uplus_keeps_index_kind() {
        let e = idx(4.0, &[(1, 0)]);
        let out = uplus_real(1, 0, &e);
        assert_eq!(out.kind(), SetKind::Index);
        // Index closure: (j,k) present forces (j+1,k).
        for t in out.iter() {
            let up = IndexTerm::new(t.exponent.add_i64(1), t.logpower);
            if out.horizon().admits(&up.exponent.re) {
                assert!(out.contains(&up));
            }
        }
    }

    #[test]
    fn shift_and_truncate_match_spec_examples() {
        let e = pre(10.0, &[(1, 0)]);
        assert_eq!(as_pairs(&e.shift_i64(2, 0)), vec![(3.0, 0)]);
        assert_eq!(as_pairs(&e.shift_i64(0, 1)), vec![(1.0, 0), (1.0, 1)]);
        assert!(pre(10.0, &[]).shift_i64(5, 3).is_empty());

        let s = pre(10.0, &[(1, 0), (2, 0)]);
        assert_eq!(as_pairs(&s.truncate_f64(1.5, true)), vec![(1.0, 0)]);
        assert!(pre(10.0, &[]).truncate_f64(3.0, true).is_empty());
        let t = pre(10.0, &[(1, 0), (1, 1), (2, 0)]);
        assert_eq!(
            as_pairs(&t.truncate_f64(1.0, false)),
            vec![(1.0, 0), (1.0, 1), (2.0, 0)]
        );
    }

    #[test]
    fn pi_min_examples() {
        assert_eq!(pre(9.0, &[(1, 0), (2, 3)]).pi_min_f64(), 1.0);
        assert_eq!(pre(9.0, &[]).pi_min_f64(), f64::INFINITY);
        let s = IndexSet::from_terms(
            SetKind::Pre,
            h(9.0),
            [IndexTerm::new(Exponent::from_f64_pair(0.5, 1.0), 0)],
        );
        assert_eq!(s.pi_min_f64(), 0.5);
    }

    #[test]
    fn indicial_root_values() {
        assert_eq!(indicial_roots_f64(3, 0.0), (0.0, 1.0));
        assert_eq!(indicial_roots_f64(3, 2.0), (1.0, 2.0));
        assert_eq!(indicial_roots_f64(4, 0.0), (0.0, 2.0));
        // b·c = λ and c − b = d−2, exactly.
        let (b, c) = indicial_roots(5, &rat_from_f64(7.0));
        assert!(c.sub(&b).cmp_rat(&rat_from_i64(3)) == std::cmp::Ordering::Equal);
    }

    #[test]
    fn cone_uplus_examples() {
        let cone = ConeData::sphere(3, 8);
        // d=3, ℓ=0, E=∅, horizon 3.5 → {(1,0),(2,0),(3,0)}
        let e = pre(3.5, &[]);
        let out = c_uplus(&cone, 0, &e).unwrap();
        assert_eq!(as_pairs(&out), vec![(1.0, 0), (2.0, 0), (3.0, 0)]);
        // ℓ=1 → {(2,0),(3,0)}
        let out = c_uplus(&cone, 1, &e).unwrap();
        assert_eq!(as_pairs(&out), vec![(2.0, 0), (3.0, 0)]);
        // ℓ=0, E={(1,0)}, horizon 2.5 → resonance of c_0=1 with (1,0)
        let e = pre(2.5, &[(1, 0)]);
        let out = c_uplus(&cone, 0, &e).unwrap();
        assert_eq!(
            as_pairs(&out),
            vec![(1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1)]
        );
        // Insufficient modes: horizon above the largest listed c_l.
        let tiny = ConeData::sphere(3, 1);
        assert!(matches!(
            c_uplus(&tiny, 0, &pre(3.5, &[])),
            Err(Error::InsufficientModes(_))
        ));
    }

    #[test]
    fn b_envelope_examples() {
        let cone = ConeData::sphere(3, 8);
        // d=3, ℓ=1, G={(1,0)}, horizon 2.5 → {(1,0),(1,1),(2,0),(2,1)}
        let g = pre(2.5, &[(1, 0)]);
        let out = b_envelope(&cone, 1, &g).unwrap();
        assert_eq!(
            as_pairs(&out),
            vec![(1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1)]
        );
        // ℓ=0, G=∅ → {(0,0),(1,0),(2,0)} via index closure of b_0 = 0.
        let out = b_envelope(&cone, 0, &pre(2.5, &[])).unwrap();
        assert_eq!(as_pairs(&out), vec![(0.0, 0), (1.0, 0), (2.0, 0)]);
        // b_ℓ above the horizon: nothing representable.
        let out = b_envelope(&cone, 5, &pre(2.5, &[])).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn zf_fixed_point_multipole() {
        // ℶ=ℶ₀=∞, E=E_l=∅, d=3, ℓ=1, horizon 3.5:
        // 𝓘 = 𝓒_1 = {(2,0),(3,0)}, 𝓘_0 = (1,0) closed = {(1,0),(2,0),(3,0)}.
        let cone = ConeData::sphere(3, 8);
        let horizon = h(3.5);
        let e = IndexSet::empty(SetKind::Pre, horizon.clone());
        let (i, i_l) = zf_fixed_point(
            &cone,
            1,
            &e,
            &[e.clone()],
            Order::Inf,
            Order::Inf,
            &horizon,
        )
        .unwrap();
        assert_eq!(as_pairs(&i), vec![(2.0, 0), (3.0, 0)]);
        assert_eq!(as_pairs(&i_l[0]), vec![(1.0, 0), (2.0, 0), (3.0, 0)]);
    }

    #[test]
    fn zf_fixed_point_log_cascade() {
        // ℶ=0, ℶ₀=∞, d=3, ℓ=1, E=E_0={(1,0)}, horizon 2.5:
        // 𝓘_0 = {(1,0),(1,1),(2,0),(2,1)} after two rounds.
        let cone = ConeData::sphere(3, 8);
        let horizon = h(2.5);
        let e = pre(2.5, &[(1, 0)]);
        let (_, i_l) = zf_fixed_point(
            &cone,
            1,
            &e,
            &[e.clone()],
            Order::Finite(0),
            Order::Inf,
            &horizon,
        )
        .unwrap();
        assert_eq!(
            as_pairs(&i_l[0]),
            vec![(1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1)]
        );
    }

    #[test]
    fn zf_fixed_point_above_horizon_source() {
        // E_0 = {(5,0)} is invisible below horizon 2.5.
        let cone = ConeData::sphere(3, 8);
        let horizon = h(2.5);
        let e = IndexSet::empty(SetKind::Pre, horizon.clone());
        let e0 = pre(2.5, &[(5, 0)]);
        assert!(e0.is_empty());
        let (_, i_l) = zf_fixed_point(
            &cone,
            1,
            &e,
            &[e0],
            Order::Inf,
            Order::Inf,
            &horizon,
        )
        .unwrap();
        assert_eq!(as_pairs(&i_l[0]), vec![(1.0, 0), (2.0, 0)]);
    }

    #[test]
    fn zf_fixed_point_monotone_in_source() {
        let cone = ConeData::sphere(3, 8);
        let horizon = h(4.5);
        let small = pre(4.5, &[(2, 0)]);
        let big = pre(4.5, &[(2, 0), (3, 1), (3, 0)]);
        let run = |e: &IndexSet| {
            zf_fixed_point(
                &cone,
                1,
                e,
                &[e.clone()],
                Order::Finite(0),
                Order::Finite(1),
                &horizon,
            )
            .unwrap()
        };
        let (i_small, il_small) = run(&small);
        let (i_big, il_big) = run(&big);
        assert!(i_small.is_subset(&i_big));
        assert!(il_small[0].is_subset(&il_big[0]));
    }

    #[test]
    fn zf_fixed_point_closed_form_when_breaking_is_schwartz() {
        // With ℶ₀ = ∞ the recursion decouples and is solved by the nested
        // unions 𝓘 = (𝓒_ℓ⊎𝓔) ∪ (𝓒_ℓ⊎(1+ℶ+(𝓒_ℓ⊎𝓔))) ∪ …
        let cone = ConeData::sphere(3, 10);
        let horizon = h(5.5);
        let e = pre(5.5, &[(1, 0), (2, 1), (2, 0)]);
        for sym_n in [0u32, 1, 2] {
            let sym = Order::Finite(sym_n);
            let (i, _) = zf_fixed_point(
                &cone,
                1,
                &e,
                &[IndexSet::empty(SetKind::Pre, horizon.clone())],
                sym,
                Order::Inf,
                &horizon,
            )
            .unwrap();
            let mut nested = c_uplus(&cone, 1, &e.clone().into_index_kind()).unwrap();
            loop {
                let next = nested
                    .union(&c_uplus(&cone, 1, &nested.shift_i64(1 + sym_n as i64, 0)).unwrap());
                let next = next.union(&c_uplus(&cone, 1, &e.clone().into_index_kind()).unwrap());
                if next == nested {
                    break;
                }
                nested = next;
            }
            assert_eq!(i, nested, "sym order {}", sym_n);
        }
    }

    #[test]
    fn tf_step_sets_examples() {
        let cone = ConeData::sphere(3, 8);
        // F=∅ → 𝓚=∅ and 𝓕⁺ only has shifted unions.
        let empty = idx(6.0, &[]);
        let orders = PerturbationOrders::schrodinger(Order::Finite(0), Order::Inf);
        let out = tf_step_sets(&cone, 1, &empty, &[empty.clone()], 5.0, &[5.0], &orders).unwrap();
        assert!(out.k_rem.is_empty());
        assert!(out.k_l[0].is_empty());

        // Truncation only: F={(1,0)}, K=0.5 keeps the term unsolved.
        let f = idx(6.0, &[(1, 0)]);
        let out = tf_step_sets(&cone, 1, &f, &[empty.clone()], 0.5, &[0.5], &orders).unwrap();
        assert!(out.k_rem.is_empty());
        assert!(f.truncate_f64(0.5, false).is_subset(&out.f_plus));
        assert!(out.f_plus.contains(&IndexTerm::real(1, 0)));

        // Remainder formula with ℓ=1, F={(2,0)}: 𝓚 = 2 + ℬ_{≥1}[(−1,0)].
        let f = idx(6.0, &[(2, 0)]);
        let out = tf_step_sets(&cone, 1, &f, &[empty.clone()], 5.0, &[5.0], &orders).unwrap();
        let pairs = as_pairs(&out.k_rem);
        assert!(pairs.contains(&(1.0, 0)));
        assert!(pairs.contains(&(3.0, 0)));
        assert!(pairs.contains(&(3.0, 1)));
        assert!(pairs.contains(&(4.0, 1)));
        assert!(out.k_rem.pi_min_f64() > 0.0);

        // Rejects zf-endangering input.
        let bad = idx(6.0, &[(0, 0)]);
        assert!(tf_step_sets(&cone, 1, &bad, &[empty], 5.0, &[5.0], &orders).is_err());
    }

    #[test]
    fn tf_step_low_mode_formula() {
        // 𝓚_0 = (b_0+j,0) ⊎ (1,0)-closure for F_0 = {(2,0)}, d=3 (b_0 = 0):
        // resonance of exponent 2 against the integer ladder from (1,0).
        let cone = ConeData::sphere(3, 8);
        let orders = PerturbationOrders::schrodinger(Order::Finite(0), Order::Inf);
        let f0 = idx(4.5, &[(2, 0)]);
        let empty = idx(4.5, &[]);
        let out = tf_step_sets(&cone, 1, &empty, &[f0], 5.0, &[5.0], &orders).unwrap();
        let pairs = as_pairs(&out.k_l[0]);
        assert!(pairs.contains(&(1.0, 0)));
        assert!(pairs.contains(&(2.0, 0)));
        assert!(pairs.contains(&(2.0, 1)));
        assert!(pairs.contains(&(3.0, 1)));
        assert!(out.k_l[0].pi_min_f64() >= 1.0 - 1e-12);
    }

    #[test]
    fn uplus_mapping_identity_randomised() {
        // (a,0) ⊎ ((1+a,0) ⊎ (1+E) ∪ E) = (a,0) ⊎ E for index sets E.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for case in 0..200 {
            let horizon = h(6.0);
            let a = Exponent::from_i64(rng.gen_range(0..3));
            let n_terms = rng.gen_range(0..4);
            let mut terms = Vec::new();
            for _ in 0..n_terms {
                terms.push(IndexTerm::real(rng.gen_range(0..5), rng.gen_range(0..3)));
            }
            let e = IndexSet::from_terms(SetKind::Pre, horizon.clone(), terms)
                .into_index_kind();
            let lhs_inner = uplus(&a.add_i64(1), 0, &e.shift_i64(1, 0)).union(&e);
            let lhs = uplus(&a, 0, &lhs_inner);
            let rhs = uplus(&a, 0, &e);
            assert_eq!(lhs, rhs, "case {}: E = {:?}, a = {:?}", case, as_pairs(&e), a);
        }
    }

    #[test]
    fn serialisation_is_sorted_and_stable() {
        let s = pre(4.0, &[(2, 0), (1, 1), (1, 0)]);
        let lines = s.to_lines();
        let expect = "+1.000000000000e0 +0.000000000000e0 0\n\
                      +1.000000000000e0 +0.000000000000e0 1\n\
                      +2.000000000000e0 +0.000000000000e0 0\n";
        assert_eq!(lines, expect);
    }
}
