//! Per-harmonic radial profiles: numeric samples on a geometric grid glued
//! to exact polyhomogeneous tails at the ends.
//!
//! A profile in the variable r (zero-energy side) carries a large-r tail in
//! ρ = 1/r and is regular at r → 0 (power extrapolation below the grid). A
//! profile in r̂ (transition side) may in addition carry a small-r̂ head
//! series in r̂, since transition solutions have power-log behaviour at
//! both ends. The exact tails are what crosses between asymptotic regimes
//! in the construction; samples are used only inside the grid hull.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Error;
use crate::exact::Exponent;
use crate::grid::Grid;
use crate::phg::{PhgSeries, Term, Var};

/// Which radial variable the profile samples.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ProfileVar {
    /// r, with tail in ρ = 1/r.
    R,
    /// r̂ = rσ, with tail in 1/r̂ and optional head in r̂.
    RHat,
}

impl ProfileVar {
    pub fn tail_var(self) -> Var {
        match self {
            ProfileVar::R => Var::Rho,
            ProfileVar::RHat => Var::RHatInv,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileVar::R => "r",
            ProfileVar::RHat => "rhat",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModeProfile {
    pub mode: usize,
    pub var: ProfileVar,
    pub grid: Arc<Grid>,
    pub samples: Vec<Complex64>,
    /// Large-argument tail, a series in 1/x; valid for x ≥ tail_start.
    pub tail: PhgSeries,
    pub tail_start: f64,
    /// Small-argument head, a series in x; valid for x ≤ head_end.
    pub head: Option<PhgSeries>,
    pub head_end: f64,
    /// Extrapolation power below the grid when no head is available.
    pub low_power: f64,
}

impl ModeProfile {
    pub fn zero(grid: Arc<Grid>, mode: usize, var: ProfileVar) -> Self {
        let n = grid.len();
        let tail_start = grid.r_max();
        ModeProfile {
            mode,
            var,
            grid,
            samples: vec![Complex64::new(0.0, 0.0); n],
            tail: PhgSeries::zero(var.tail_var()),
            tail_start,
            head: None,
            head_end: 0.0,
            low_power: 0.0,
        }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(
        grid: Arc<Grid>,
        mode: usize,
        var: ProfileVar,
        f: F,
    ) -> Self {
        let samples = grid.points().iter().map(|&r| f(r)).collect();
        let mut p = Self::zero(grid, mode, var);
        p.samples = samples;
        p
    }

    pub fn with_tail(mut self, tail: PhgSeries, tail_start: f64) -> Self {
        assert_eq!(tail.var(), self.var.tail_var());
        self.tail = tail;
        self.tail_start = tail_start;
        self
    }

    pub fn with_head(mut self, head: PhgSeries, head_end: f64) -> Self {
        assert_eq!(head.var(), Var::RHat);
        assert_eq!(self.var, ProfileVar::RHat);
        self.head = Some(head);
        self.head_end = head_end;
        self
    }

    pub fn with_low_power(mut self, p: f64) -> Self {
        self.low_power = p;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.tail.is_zero()
            && self.head.as_ref().map_or(true, |h| h.is_zero())
            && self.samples.iter().all(|c| c.norm() == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Point evaluation: head series below the grid, cubic log-space
    /// interpolation inside, exact tail beyond `tail_start`.
    pub fn eval(&self, x: f64) -> Complex64 {
        if x >= self.tail_start {
            return self.tail.eval(1.0 / x);
        }
        let r_min = self.grid.r_min();
        if x < r_min {
            if let Some(head) = &self.head {
                if x <= self.head_end {
                    return head.eval(x);
                }
            }
            return self.samples[0] * (x / r_min).powf(self.low_power);
        }
        self.grid.interpolate(&self.samples, x)
    }

    fn check_compatible(&self, other: &ModeProfile) -> Result<(), Error> {
        if self.var != other.var {
            return Err(Error::VariableMismatch {
                expected: match self.var {
                    ProfileVar::R => "r",
                    ProfileVar::RHat => "rhat",
                },
                got: match other.var {
                    ProfileVar::R => "r",
                    ProfileVar::RHat => "rhat",
                },
            });
        }
        if self.grid.as_ref() != other.grid.as_ref() || self.mode != other.mode {
            return Err(Error::Validation(
                "profiles must share grid and mode for arithmetic".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &ModeProfile) -> Result<ModeProfile, Error> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        let head = match (&self.head, &other.head) {
            (None, None) => None,
            (Some(h), None) => Some(h.clone()),
            (None, Some(h)) => Some(h.clone()),
            (Some(a), Some(b)) => Some(a.add(b)?),
        };
        Ok(ModeProfile {
            mode: self.mode,
            var: self.var,
            grid: self.grid.clone(),
            samples,
            tail: self.tail.add(&other.tail)?,
            tail_start: self.tail_start.max(other.tail_start),
            head,
            head_end: if self.head.is_some() && other.head.is_some() {
                self.head_end.min(other.head_end)
            } else {
                self.head_end.max(other.head_end)
            },
            low_power: self.low_power.min(other.low_power),
        })
    }

    pub fn scale(&self, c: Complex64) -> ModeProfile {
        let mut out = self.clone();
        for s in &mut out.samples {
            *s *= c;
        }
        out.tail = out.tail.scale(c);
        out.head = out.head.map(|h| h.scale(c));
        out
    }

    /// Multiply by the exact term x^γ (log x)^κ (x the profile variable).
    pub fn mul_power_log(&self, gamma: &Exponent, kappa: u32, coeff: Complex64) -> ModeProfile {
        let (gre, gim) = gamma.to_complex_f64();
        let g = Complex64::new(gre, gim);
        let samples = self
            .samples
            .iter()
            .zip(self.grid.points())
            .map(|(s, &x)| {
                let lx = x.ln();
                s * coeff * (g * lx).exp() * lx.powi(kappa as i32)
            })
            .collect();
        // tail is a series in 1/x: x^γ = (1/x)^{−γ}, log x = −log(1/x)
        let sign = if kappa % 2 == 0 { 1.0 } else { -1.0 };
        let tail = self.tail.mul_term(&gamma.neg(), kappa, coeff * sign);
        let head = self.head.as_ref().map(|h| h.mul_term(gamma, kappa, coeff));
        ModeProfile {
            mode: self.mode,
            var: self.var,
            grid: self.grid.clone(),
            samples,
            tail,
            tail_start: self.tail_start,
            head,
            head_end: self.head_end,
            low_power: self.low_power + gre,
        }
    }

    /// Pointwise multiply by a smooth scalar function that is identically 1
    /// beyond `tail_start` (and near 0), so tails and heads are untouched.
    pub fn mul_plateau_fn<F: Fn(f64) -> f64>(&self, f: F) -> ModeProfile {
        let mut out = self.clone();
        for (s, &x) in out.samples.iter_mut().zip(self.grid.points()) {
            *s *= f(x);
        }
        out
    }

    /// Pointwise multiply by a smooth function vanishing identically beyond
    /// `tail_start`; the tail becomes exactly zero.
    pub fn mul_compact_fn<F: Fn(f64) -> f64>(&self, f: F) -> ModeProfile {
        let mut out = self.mul_plateau_fn(f);
        out.tail = PhgSeries::zero(self.var.tail_var());
        out
    }

    /// d/dx in the profile variable: 5-point stencils on samples, exact on
    /// tail and head.
    pub fn d_dx(&self) -> ModeProfile {
        let samples = self.grid.derivative(&self.samples);
        let tail = match self.var {
            // series in ρ = 1/x: d/dx = −ρ² d/dρ
            ProfileVar::R | ProfileVar::RHat => self.tail.d_dr(),
        };
        let head = self.head.as_ref().map(|h| h.d_dx());
        ModeProfile {
            mode: self.mode,
            var: self.var,
            grid: self.grid.clone(),
            samples,
            tail,
            tail_start: self.tail_start,
            head,
            head_end: self.head_end,
            low_power: (self.low_power - 1.0).max(0.0),
        }
    }

    /// Relative disagreement between samples and tail over the overlap
    /// window [tail_start, r_max], scaled by the largest tail value there.
    pub fn tail_mismatch(&self) -> f64 {
        if self.tail_start >= self.grid.r_max() {
            return 0.0;
        }
        let i0 = self.grid.index_at_or_above(self.tail_start);
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for i in i0..self.grid.len() {
            let x = self.grid.r(i);
            let t = self.tail.eval(1.0 / x);
            scale = scale.max(t.norm());
            worst = worst.max((t - self.samples[i]).norm());
        }
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }

    /// Replaces the in-grid samples beyond `tail_start` by exact tail
    /// values (used after quadrature so the declared semantics hold
    /// bit-for-bit).
    pub fn snap_to_tail(&mut self) {
        let i0 = self.grid.index_at_or_above(self.tail_start);
        for i in i0..self.grid.len() {
            self.samples[i] = self.tail.eval(1.0 / self.grid.r(i));
        }
    }

    /// CSV serialisation `x, Re(u), Im(u)` plus the tail as a sidecar
    /// string in the series text format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,re,im\n");
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.grid.r(i), s.re, s.im));
        }
        out
    }

    pub fn tail_sidecar(&self) -> String {
        format!("# tail_start {:e}\n{}", self.tail_start, self.tail.to_text())
    }
}

/// Convenience: build a profile from an exact series valid on the whole
/// grid (samples are the series values).
pub fn profile_from_series(
    grid: Arc<Grid>,
    mode: usize,
    var: ProfileVar,
    series: &PhgSeries,
) -> ModeProfile {
    assert_eq!(series.var(), var.tail_var());
    let samples = grid.points().iter().map(|&x| series.eval(1.0 / x)).collect();
    let low_power = -series.min_re_exponent();
    let mut p = ModeProfile::zero(grid, mode, var);
    p.samples = samples;
    p.tail = series.clone();
    p.tail_start = p.grid.r_min();
    p.low_power = low_power.max(0.0);
    p
}

/// A tail series with a single real power: c·x^{−j} as a series in 1/x.
pub fn power_tail(var: ProfileVar, j: i64, c: Complex64) -> PhgSeries {
    PhgSeries::monomial(var.tail_var(), Exponent::from_i64(j), 0, c)
}

/// Term of a head series in x: c·x^{j} (log x)^k.
pub fn head_term(exponent: Exponent, logpower: u32, coeff: Complex64) -> Term {
    Term::new(exponent, logpower, coeff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn eval_regions() {
        let grid = Arc::new(Grid::geometric(1e-2, 1e2, 512));
        // f = 1/x with exact tail and power extrapolation below the grid
        let tail = power_tail(ProfileVar::R, 1, c(1.0));
        let p = ModeProfile::from_fn(grid.clone(), 0, ProfileVar::R, |x| c(1.0 / x))
            .with_tail(tail, 10.0)
            .with_low_power(-1.0);
        assert_relative_eq!(p.eval(50.0).re, 0.02, max_relative = 1e-12); // tail
        assert_relative_eq!(p.eval(0.5).re, 2.0, max_relative = 1e-8); // interp
        assert_relative_eq!(p.eval(1e-3).re, 1e3, max_relative = 1e-10); // extrapolation
    }

    #[test]
    fn arithmetic_and_derivative() {
        let grid = Arc::new(Grid::geometric(1e-2, 1e2, 1024));
        let p = ModeProfile::from_fn(grid.clone(), 0, ProfileVar::R, |x| c(1.0 / (1.0 + x * x)));
        let q = p.scale(c(2.0));
        let s = p.add(&q).unwrap();
        assert_relative_eq!(s.eval(1.0).re, 3.0 * 0.5, max_relative = 1e-9);

        let d = p.d_dx();
        let x: f64 = 2.0;
        let expect = -2.0 * x / (1.0 + x * x).powi(2);
        assert_relative_eq!(d.eval(x).re, expect, max_relative = 1e-7);
    }

    #[test]
    fn mul_power_log_consistency() {
        let grid = Arc::new(Grid::geometric(1e-1, 1e2, 512));
        let tail = power_tail(ProfileVar::R, 2, c(3.0));
        let p = ModeProfile::from_fn(grid.clone(), 0, ProfileVar::R, |x| c(3.0 / (x * x)))
            .with_tail(tail, 1.0);
        let q = p.mul_power_log(&Exponent::from_i64(1), 1, c(2.0));
        // q = 6 x^{-1} log x; check samples and tail agree
        for &x in &[0.5f64, 5.0, 80.0] {
            let expect = 6.0 / x * x.ln();
            assert_relative_eq!(q.eval(x).re, expect, max_relative = 1e-8, epsilon = 1e-12);
            assert_relative_eq!(
                q.tail.eval(1.0 / x).re,
                expect,
                max_relative = 1e-12,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn tail_mismatch_detects_disagreement() {
        let grid = Arc::new(Grid::geometric(1e-2, 1e2, 512));
        let tail = power_tail(ProfileVar::R, 1, c(1.0));
        let good = ModeProfile::from_fn(grid.clone(), 0, ProfileVar::R, |x| c(1.0 / x))
            .with_tail(tail.clone(), 10.0);
        assert!(good.tail_mismatch() < 1e-12);
        let bad = ModeProfile::from_fn(grid, 0, ProfileVar::R, |x| c(1.1 / x))
            .with_tail(tail, 10.0);
        assert!(bad.tail_mismatch() > 0.05);
    }
}
