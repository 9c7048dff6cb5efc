//! Zero-energy solves on the exact cone, per harmonic line.
//!
//! The model operator on the l-th harmonic is
//!
//! ```text
//! L_l = −∂r² − ((d−1)/r) ∂r + λ_l/r²,
//! ```
//!
//! with homogeneous solutions r^{b_l} (regular) and r^{−c_l} (decaying).
//! [`green_apply_exact`] inverts L_l on exact power-log tails term by term:
//! in ρ = 1/r the operator acts as ρ²·P(ρ∂ρ) with the indicial polynomial
//! P(y) = −y² + (d−2)y + λ, so each forcing term inverts through P shifted
//! by the nilpotent log-lowering map. At the resonance a = c_l the
//! primitive takes the zero-constant convention (equivalently, the upper
//! integration limit ρ = 1), which pins the homogeneous admixture; the
//! non-resonant part carries no (c_l, 0) term at all. The admixture is
//! corrected downstream by matching against the quadrature solve.
//!
//! [`green_apply_numeric`] is the two-sided variation-of-parameters solve
//! on the grid, and [`solve_perturbed`] runs the plain iteration
//! u ← G(f − V u) numerically on samples and symbolically on tails.

use std::sync::Arc;

use num_complex::Complex64;

use crate::cutoff::smooth_step;
use crate::error::Error;
use crate::exact::{Alg, Exponent, Order};
use crate::grid::Grid;
use crate::indexset::{ConeData, PerturbationOrders};
use crate::phg::{PhgSeries, Var};
use crate::profile::{ModeProfile, ProfileVar};

/// Radial potential: an exact large-r series switched on smoothly at a
/// cutoff radius (below half the onset the potential is identically zero),
/// so its symbolic tail is exact for r ≥ onset.
#[derive(Clone, Debug)]
pub struct Potential {
    tail: PhgSeries,
    onset: f64,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { tail: PhgSeries::zero(Var::Rho), onset: 1.0 }
    }

    pub fn new(tail: PhgSeries, onset: f64) -> Result<Self, Error> {
        if tail.var() != Var::Rho {
            return Err(Error::VariableMismatch { expected: "rho", got: tail.var().name() });
        }
        if !tail.is_empty() && tail.min_re_exponent() < 3.0 - 1e-12 {
            return Err(Error::Validation(format!(
                "potential tail must decay at least like r^-3; found r^-{}",
                tail.min_re_exponent()
            )));
        }
        for t in tail.terms() {
            if t.coeff.im != 0.0 || !t.exponent.is_real() {
                return Err(Error::Validation("potential must be real-valued".into()));
            }
        }
        if !(onset > 0.0) {
            return Err(Error::Validation("potential onset must be positive".into()));
        }
        Ok(Potential { tail, onset })
    }

    pub fn is_zero(&self) -> bool {
        self.tail.is_empty()
    }

    pub fn tail(&self) -> &PhgSeries {
        &self.tail
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.tail.is_empty() || r <= 0.5 * self.onset {
            return 0.0;
        }
        let ramp = smooth_step((r - 0.5 * self.onset) / (0.5 * self.onset));
        ramp * self.tail.eval(1.0 / r).re
    }
}

/// The zero-energy operator family: cone data, potential, declared decay
/// orders of the perturbation.
#[derive(Clone, Debug)]
pub struct RadialOperator {
    pub cone: ConeData,
    pub potential: Potential,
    pub orders: PerturbationOrders,
}

impl RadialOperator {
    pub fn new(
        cone: ConeData,
        potential: Potential,
        orders: PerturbationOrders,
    ) -> Result<Self, Error> {
        if let Order::Finite(n) = orders.v_radial {
            if !potential.is_zero()
                && potential.tail.min_re_exponent() < 3.0 + n as f64 - 1e-12
            {
                return Err(Error::Validation(
                    "declared radial order exceeds the potential's actual decay".into(),
                ));
            }
        }
        Ok(RadialOperator { cone, potential, orders })
    }

    pub fn free(cone: ConeData) -> Self {
        RadialOperator {
            cone,
            potential: Potential::zero(),
            orders: PerturbationOrders::schrodinger(Order::Inf, Order::Inf),
        }
    }
}

/// Shared numeric context: the working grid and where tails take over.
#[derive(Clone, Debug)]
pub struct ZfContext {
    pub cone: ConeData,
    pub grid: Arc<Grid>,
    pub tail_start: f64,
    /// error-order cap for symbolic tails produced by the solver
    pub tail_horizon: f64,
}

impl ZfContext {
    pub fn new(cone: ConeData, grid: Arc<Grid>, tail_start: f64, tail_horizon: f64) -> Self {
        assert!(tail_start < grid.r_max());
        ZfContext { cone, grid, tail_start, tail_horizon }
    }

    pub fn standard(cone: ConeData) -> Self {
        let grid = Arc::new(Grid::geometric(1e-3, 1e3, 2048));
        ZfContext::new(cone, grid, 1e2, 8.0)
    }
}

/// Solves M q = rhs where M = P(a + N) with N the log-lowering operator
/// ((Nq)_j = (j+1) q_{j+1}); `q` is the coefficient vector of a polynomial
/// in log. At a simple root of P the kernel direction (the constant) takes
/// the zero-constant primitive convention.
fn invert_indicial_poly(
    p0: Complex64,
    p1: Complex64,
    p2: Complex64,
    rhs: &[Complex64],
) -> Vec<Complex64> {
    let lower = |q: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); q.len()];
        for j in 0..q.len().saturating_sub(1) {
            out[j] = (j as f64 + 1.0) * q[j + 1];
        }
        out
    };
    if p0.norm() > 1e-12 {
        // u = (rhs − (p1 N + ½p2 N²) u)/p0, iterated to the nilpotent depth
        let mut u: Vec<Complex64> = rhs.iter().map(|c| c / p0).collect();
        for _ in 0..=rhs.len() {
            let n1 = lower(&u);
            let n2 = lower(&n1);
            u = rhs
                .iter()
                .zip(n1.iter().zip(&n2))
                .map(|(r, (a, b))| (r - p1 * a - 0.5 * p2 * b) / p0)
                .collect();
        }
        u
    } else {
        // Simple resonance: M = N (p1 + ½p2 N); invert the regular factor,
        // then integrate with zero constant.
        assert!(p1.norm() > 1e-12, "double indicial root");
        let mut w: Vec<Complex64> = rhs.iter().map(|c| c / p1).collect();
        for _ in 0..=rhs.len() {
            let n1 = lower(&w);
            w = rhs
                .iter()
                .zip(&n1)
                .map(|(r, a)| (r - 0.5 * p2 * a) / p1)
                .collect();
        }
        let mut u = vec![Complex64::new(0.0, 0.0); w.len() + 1];
        for (j, v) in w.iter().enumerate() {
            u[j + 1] = v / (j as f64 + 1.0);
        }
        u
    }
}

/// Exact particular solution of L_l u = g for a power-log series g in
/// ρ = 1/r, decaying at r → ∞. Requires every exponent of g to exceed
/// 2 − b_l (so the regular-branch primitive converges); the support of the
/// output lies in (c_l,0) ⊎ (support(g) − 2) and the symbolic residual is
/// identically zero.
pub fn green_apply_exact(cone: &ConeData, l: usize, g: &PhgSeries) -> Result<PhgSeries, Error> {
    if g.var() != Var::Rho {
        return Err(Error::VariableMismatch { expected: "rho", got: g.var().name() });
    }
    let mode = cone.mode(l);
    let b = &mode.b;
    let c = &mode.c;
    let dm2 = cone.d as f64 - 2.0;
    let lambda_f = b.to_f64() * c.to_f64();
    let threshold = Alg::from_i64(2).sub(b);
    if let Some(p) = g.pi_min() {
        if p.cmp_exact(&threshold) != std::cmp::Ordering::Greater {
            return Err(Error::ForcingTooStrong(format!(
                "zero-energy forcing needs Re j > 2 − b_l = {}; found {}",
                threshold.to_f64(),
                p.to_f64()
            )));
        }
    }
    let mut out = PhgSeries::zero_with_order(Var::Rho, g.error_order() - 2.0);
    // group forcing terms by exponent into log polynomials
    let mut by_exp: Vec<(Exponent, Vec<Complex64>)> = Vec::new();
    for t in g.terms() {
        match by_exp.iter_mut().find(|(e, _)| *e == t.exponent) {
            Some((_, v)) => {
                if v.len() <= t.logpower as usize {
                    v.resize(t.logpower as usize + 1, Complex64::new(0.0, 0.0));
                }
                v[t.logpower as usize] += t.coeff;
            }
            None => {
                let mut v = vec![Complex64::new(0.0, 0.0); t.logpower as usize + 1];
                v[t.logpower as usize] = t.coeff;
                by_exp.push((t.exponent.clone(), v));
            }
        }
    }
    for (m, q) in by_exp {
        let a = m.add_i64(-2);
        // exact resonance test against c_l; b_l cannot resonate (excluded
        // by the threshold above)
        let resonant = a.is_real() && a.re == *c;
        let (are, aim) = a.to_complex_f64();
        let ac = Complex64::new(are, aim);
        let p0 = if resonant {
            Complex64::new(0.0, 0.0)
        } else {
            -ac * ac + dm2 * ac + lambda_f
        };
        let p1 = -2.0 * ac + dm2;
        let p2 = Complex64::new(-2.0, 0.0);
        let u = invert_indicial_poly(p0, p1, p2, &q);
        for (j, coeff) in u.into_iter().enumerate() {
            if coeff.norm() > 0.0 {
                out = out
                    .add(&PhgSeries::monomial(Var::Rho, a.clone(), j as u32, coeff))
                    .expect("same variable");
            }
        }
    }
    Ok(out)
}

/// Closed form of ∫_R^∞ s^{−μ} (log s)^k ds for μ > 1.
fn tail_moment(mu: f64, k: u32, r: f64) -> f64 {
    let m = mu - 1.0;
    let lr = r.ln();
    let mut acc = 0.0;
    let mut fac = 1.0;
    for i in 0..=k {
        acc += fac * lr.powi((k - i) as i32) / m.powi(i as i32 + 1);
        fac *= (k - i) as f64;
    }
    r.powf(-m) * acc
}

/// Quadrature Green application: variation of parameters with the kernel
/// pair {r^{b_l}, r^{−c_l}},
///
/// ```text
/// u(r) = (b_l+c_l)^{−1} [ r^{−c} ∫_0^r s^{b+d−1} g ds + r^{b} ∫_r^∞ s^{d−1−c} g ds ],
/// ```
///
/// with the below-grid head handled by power extrapolation of g and the
/// beyond-grid tail integrated in closed form from g's exact tail. The
/// output tail is the exact series solve plus a matched r^{−c} admixture.
pub fn green_apply_numeric(
    ctx: &ZfContext,
    l: usize,
    g: &ModeProfile,
) -> Result<ModeProfile, Error> {
    if g.var != ProfileVar::R {
        return Err(Error::VariableMismatch { expected: "r", got: "rhat" });
    }
    let mode = ctx.cone.mode(l);
    let b = mode.b.to_f64();
    let c = mode.c.to_f64();
    let d = ctx.cone.d as f64;
    let grid = &ctx.grid;
    let n = grid.len();

    let inner: Vec<Complex64> = (0..n)
        .map(|i| g.samples[i] * grid.r(i).powf(b + d - 1.0))
        .collect();
    let outer: Vec<Complex64> = (0..n)
        .map(|i| g.samples[i] * grid.r(i).powf(d - 1.0 - c))
        .collect();
    let cum_inner = grid.cumulative_integral(&inner);
    let cum_outer = grid.cumulative_integral(&outer);
    let total_outer = *cum_outer.last().unwrap();

    // below-grid correction: g ≈ g(r_min)(s/r_min)^{low_power}
    let r0 = grid.r_min();
    let head_inner = g.samples[0] * r0.powf(b + d) / (b + d + g.low_power);

    // beyond-grid closure from g's exact tail
    let r_max = grid.r_max();
    let mut beyond_outer = Complex64::new(0.0, 0.0);
    for t in g.tail.terms() {
        let (jre, _) = t.exponent.to_complex_f64();
        let mu = c + 1.0 - d + jre;
        if mu <= 1.0 {
            return Err(Error::ForcingTooStrong(format!(
                "tail term r^-{} of the forcing is not integrable against the decaying kernel",
                jre
            )));
        }
        beyond_outer += t.coeff * tail_moment(mu, t.logpower, r_max);
    }

    let norm = 1.0 / (b + c);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let r = grid.r(i);
        let i1 = cum_inner[i] + head_inner;
        let i2 = total_outer - cum_outer[i] + beyond_outer;
        samples.push(norm * (r.powf(-c) * i1 + r.powf(b) * i2));
    }

    // exact tail: particular series from g's tail plus matched admixture
    let mut tail = if g.tail.is_empty() {
        PhgSeries::zero_with_order(Var::Rho, ctx.tail_horizon)
    } else {
        let mut t = green_apply_exact(&ctx.cone, l, &g.tail)?;
        t.set_error_order(t.error_order().min(ctx.tail_horizon));
        t
    };
    let mut u = ModeProfile {
        mode: l,
        var: ProfileVar::R,
        grid: grid.clone(),
        samples,
        tail: PhgSeries::zero(Var::Rho),
        tail_start: ctx.tail_start,
        head: None,
        head_end: 0.0,
        low_power: b,
    };
    // match the r^{−c} admixture over the overlap window
    let i0 = grid.index_at_or_above(ctx.tail_start);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in i0..n {
        let r = grid.r(i);
        acc += (u.samples[i] - tail.eval(1.0 / r)) * r.powf(c);
    }
    let admixture = acc / (n - i0) as f64;
    if admixture.norm() > 0.0 {
        tail = tail
            .add(&PhgSeries::monomial(
                Var::Rho,
                Exponent::real(mode.c.clone()),
                0,
                admixture,
            ))
            .expect("same variable");
    }
    u.tail = tail;
    Ok(u)
}

/// Max-relative residual of L_l u = g on interior grid nodes (finite
/// differences in log r).
pub fn zf_residual(ctx: &ZfContext, l: usize, u: &ModeProfile, g: &ModeProfile) -> f64 {
    let mode = ctx.cone.mode(l);
    let lambda = mode.b.to_f64() * mode.c.to_f64();
    let d = ctx.cone.d as f64;
    let grid = &ctx.grid;
    let ux = grid.log_derivative(&u.samples);
    let uxx = grid.log_derivative2(&u.samples);
    let scale = g.max_abs().max(1e-300);
    let n = grid.len();
    let mut worst: f64 = 0.0;
    for i in 8..n - 8 {
        let r = grid.r(i);
        let up = ux[i] / r;
        let upp = (uxx[i] - ux[i]) / (r * r);
        let res = -upp - (d - 1.0) / r * up + lambda / (r * r) * u.samples[i] - g.samples[i];
        worst = worst.max(res.norm() / scale);
    }
    worst
}

/// Result of the perturbative zero-energy solve.
pub struct PerturbedSolve {
    pub profile: ModeProfile,
    pub iterations: usize,
    /// contraction estimate of the iteration (last correction ratio)
    pub contraction: f64,
}

/// Solves (L_l + V) u = f by plain iteration u ← G(f − V u), numerically on
/// the grid and symbolically on the exact tails. Divergence is detected
/// from the growth of successive corrections; each tail pass gains at
/// least 1 + ℶ orders, so the truncated tails converge within the horizon.
pub fn solve_perturbed(
    ctx: &ZfContext,
    op: &RadialOperator,
    l: usize,
    f: &ModeProfile,
    alpha_max: f64,
) -> Result<PerturbedSolve, Error> {
    let mut u = green_apply_numeric(ctx, l, f)?;
    if op.potential.is_zero() {
        return Ok(PerturbedSolve { profile: u, iterations: 1, contraction: 0.0 });
    }

    let grid = &ctx.grid;
    let n = grid.len();
    let v_grid: Vec<f64> = grid.points().iter().map(|&r| op.potential.eval(r)).collect();
    let scale = u.max_abs().max(1e-300);
    let mut last_correction = f64::INFINITY;
    let mut contraction: f64 = 0.0;
    let mut iterations = 1;
    for it in 0..60 {
        let mut rhs = f.clone();
        for i in 0..n {
            rhs.samples[i] -= v_grid[i] * u.samples[i];
        }
        let mut vu_tail = op.potential.tail.multiply(&u.tail)?;
        vu_tail
            .set_error_order(vu_tail.error_order().min(ctx.tail_horizon).min(alpha_max + 2.0));
        rhs.tail = f.tail.add(&vu_tail.neg())?;
        let next = green_apply_numeric(ctx, l, &rhs)?;
        let diff: f64 = next
            .samples
            .iter()
            .zip(&u.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let rel = diff / scale;
        if rel > last_correction * 1.05 && it > 2 {
            return Err(Error::Divergence(format!(
                "perturbative iteration diverging; correction ratio ≈ {:.3}",
                rel / last_correction
            )));
        }
        if last_correction.is_finite() && last_correction > 0.0 {
            contraction = rel / last_correction;
        }
        last_correction = rel.max(1e-300);
        u = next;
        iterations = it + 2;
        if rel < 1e-13 {
            return Ok(PerturbedSolve { profile: u, iterations, contraction });
        }
    }
    Err(Error::KernelObstruction(format!(
        "perturbative iteration stagnated at relative correction {:.2e}",
        last_correction
    )))
}

/// Applies L_l + V to a profile (finite differences on samples, exact on
/// the tail), for residual checks.
pub fn apply_operator(
    ctx: &ZfContext,
    op: &RadialOperator,
    l: usize,
    u: &ModeProfile,
) -> ModeProfile {
    let mode = ctx.cone.mode(l);
    let lambda = mode.b.to_f64() * mode.c.to_f64();
    let d = ctx.cone.d as f64;
    let grid = &ctx.grid;
    let ux = grid.log_derivative(&u.samples);
    let uxx = grid.log_derivative2(&u.samples);
    let mut out = ModeProfile::zero(grid.clone(), l, ProfileVar::R);
    for i in 0..grid.len() {
        let r = grid.r(i);
        let up = ux[i] / r;
        let upp = (uxx[i] - ux[i]) / (r * r);
        let v = op.potential.eval(r);
        out.samples[i] = -upp - (d - 1.0) / r * up + (lambda / (r * r) + v) * u.samples[i];
    }
    let lt = apply_l_to_series(&ctx.cone, l, &u.tail);
    let vt = op.potential.tail.multiply(&u.tail).expect("same variable");
    out.tail = lt.add(&vt).expect("same variable");
    out.tail_start = u.tail_start;
    out
}

/// L_l applied exactly to a ρ-series: ρ²·P(ρ∂ρ) with
/// P(y) = −y² + (d−2)y + λ.
pub fn apply_l_to_series(cone: &ConeData, l: usize, s: &PhgSeries) -> PhgSeries {
    let mode = cone.mode(l);
    let lambda = mode.b.to_f64() * mode.c.to_f64();
    let dm2 = cone.d as f64 - 2.0;
    let a1 = s.x_d_dx();
    let a2 = a1.x_d_dx();
    let combo = a2
        .scale(Complex64::new(-1.0, 0.0))
        .add(&a1.scale(Complex64::new(dm2, 0.0)))
        .and_then(|t| t.add(&s.scale(Complex64::new(lambda, 0.0))))
        .expect("same variable");
    combo.mul_term(&Exponent::from_i64(2), 0, Complex64::new(1.0, 0.0))
}


#[cfg(test)]
mod debug_tests {
    use super::*;
    use num_complex::Complex64;
    fn c(x: f64) -> Complex64 { Complex64::new(x, 0.0) }
    #[test]
    fn dbg_residual_profile() {
        let cone = ConeData::sphere(3, 4);
        let ctx = ZfContext::standard(cone.clone());
        let cut = |r: f64| smooth_step((r - 0.5) / 0.5);
        let g_series = PhgSeries::monomial(Var::Rho, Exponent::from_i64(4), 0, c(1.0));
        let g = ModeProfile::from_fn(ctx.grid.clone(), 0, ProfileVar::R, |r| {
            c(cut(r)) * g_series.eval(1.0 / r)
        })
        .with_tail(g_series.clone(), 2.0)
        .with_low_power(0.0);
        let u = green_apply_numeric(&ctx, 0, &g).unwrap();
        // residual location scan
        let grid = &ctx.grid;
        let ux = grid.log_derivative(&u.samples);
        let uxx = grid.log_derivative2(&u.samples);
        let scale = g.max_abs();
        let n = grid.len();
        let mut worst = (0.0f64, 0usize);
        for i in 8..n - 8 {
            let r = grid.r(i);
            let up = ux[i] / r;
            let upp = (uxx[i] - ux[i]) / (r * r);
            let res = (-upp - 2.0 / r * up - g.samples[i]).norm() / scale;
            if res > worst.0 { worst = (res, i); }
        }
        println!("worst residual {} at i={} r={}", worst.0, worst.1, grid.r(worst.1));
        println!("tail coeff rho^2: {}", u.tail.coeff_real(2,0));
        println!("tail coeff rho^1: {}", u.tail.coeff_real(1,0));
        println!("tail mismatch: {}", u.tail_mismatch());
        panic!("debug");
    }
}
