//! Smooth cutoffs built from the C^∞ bump m(s) = e^{−1/s}/(e^{−1/s}+e^{−1/(1−s)}).
//!
//! A [`Cutoff`] is 1 below `lo`, 0 above `hi`, and joins the two plateaus
//! with the fixed bump profile, so runs are reproducible and the
//! cutoff-independence checks can vary the transition window alone.

/// Smooth step: 0 for s ≤ 0, 1 for s ≥ 1.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// d/ds of [`smooth_step`], analytic.
pub fn smooth_step_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        let sum = a + b;
        a * b * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s))) / (sum * sum)
    }
}

/// One-sided cutoff: identically 1 on [0, lo], identically 0 on [hi, ∞).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub lo: f64,
    pub hi: f64,
}

impl Cutoff {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(0.0 < lo && lo < hi);
        Cutoff { lo, hi }
    }

    /// Default transition window [1/4, 3/4].
    pub fn standard() -> Self {
        Cutoff::new(0.25, 0.75)
    }

    /// Same onset, transition window twice as wide.
    pub fn widened(self, factor: f64) -> Self {
        Cutoff::new(self.lo, self.lo + (self.hi - self.lo) * factor)
    }

    pub fn eval(&self, t: f64) -> f64 {
        smooth_step((self.hi - t) / (self.hi - self.lo))
    }

    /// dχ/dt, analytic.
    pub fn deriv(&self, t: f64) -> f64 {
        -smooth_step_deriv((self.hi - t) / (self.hi - self.lo)) / (self.hi - self.lo)
    }

    /// d²χ/dt² via high-order finite differences of the analytic first
    /// derivative.
    pub fn deriv2(&self, t: f64) -> f64 {
        let h = 1e-4 * (self.hi - self.lo);
        (-self.deriv(t + 2.0 * h) + 8.0 * self.deriv(t + h) - 8.0 * self.deriv(t - h)
            + self.deriv(t - 2.0 * h))
            / (12.0 * h)
    }

    pub fn is_one_at(&self, t: f64) -> bool {
        t <= self.lo
    }

    pub fn is_zero_at(&self, t: f64) -> bool {
        t >= self.hi
    }
}
