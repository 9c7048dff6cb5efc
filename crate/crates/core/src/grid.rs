//! Geometric radial grids with log-space interpolation, differentiation and
//! quadrature.
//!
//! All numerics live on grids that are uniform in x = log r, which keeps
//! the r^{±a} behaviour near both ends well resolved. Interpolation is
//! cubic (4-point Lagrange), differentiation uses 5-point stencils, and
//! cumulative integrals integrate the local cubic interpolant, all O(h⁴).

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    x0: f64,
    h: f64,
}

impl Grid {
    pub fn geometric(r_min: f64, r_max: f64, n: usize) -> Self {
        assert!(n >= 8 && r_min > 0.0 && r_max > r_min);
        let x0 = r_min.ln();
        let h = (r_max.ln() - x0) / (n - 1) as f64;
        let points = (0..n).map(|i| (x0 + h * i as f64).exp()).collect();
        Grid { points, x0, h }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn r(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn r_min(&self) -> f64 {
        self.points[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn log_step(&self) -> f64 {
        self.h
    }

    /// Largest i with r(i) ≤ r (clamped to valid range).
    pub fn floor_index(&self, r: f64) -> usize {
        let t = (r.ln() - self.x0) / self.h;
        (t.floor().max(0.0) as usize).min(self.points.len() - 1)
    }

    pub fn index_at_or_above(&self, r: f64) -> usize {
        let mut i = self.floor_index(r);
        while self.points[i] < r && i + 1 < self.points.len() {
            i += 1;
        }
        i
    }

    /// Cubic Lagrange interpolation in log r.
    pub fn interpolate(&self, samples: &[Complex64], r: f64) -> Complex64 {
        debug_assert_eq!(samples.len(), self.points.len());
        let n = self.points.len();
        let t = (r.ln() - self.x0) / self.h;
        let i1 = (t.floor() as isize).clamp(0, n as isize - 1) as usize;
        let base = i1.saturating_sub(1).min(n - 4);
        let s = t - base as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &f) in samples[base..base + 4].iter().enumerate() {
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    w *= (s - m as f64) / (j as f64 - m as f64);
                }
            }
            acc += f * w;
        }
        acc
    }

    /// d/dr of sampled data via 5-point stencils in log r (u_x / r).
    pub fn derivative(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let ux = self.log_derivative(samples);
        ux.into_iter()
            .zip(&self.points)
            .map(|(v, &r)| v / r)
            .collect()
    }

    /// d/dx with x = log r, 5-point, 4th order (one-sided at the ends).
    pub fn log_derivative(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let n = samples.len();
        let h = self.h;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            out[i] = if i >= 2 && i + 2 < n {
                (samples[i - 2] - 8.0 * samples[i - 1] + 8.0 * samples[i + 1] - samples[i + 2])
                    / (12.0 * h)
            } else if i < 2 {
                (-25.0 * samples[i] + 48.0 * samples[i + 1] - 36.0 * samples[i + 2]
                    + 16.0 * samples[i + 3]
                    - 3.0 * samples[i + 4])
                    / (12.0 * h)
            } else {
                (25.0 * samples[i] - 48.0 * samples[i - 1] + 36.0 * samples[i - 2]
                    - 16.0 * samples[i - 3]
                    + 3.0 * samples[i - 4])
                    / (12.0 * h)
            };
        }
        out
    }

    /// d²/dx², 5-point, 4th order on interior points (ends reuse the
    /// nearest interior stencil; residual checks never use the ends).
    pub fn log_derivative2(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let n = samples.len();
        let h2 = self.h * self.h;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let j = i.clamp(2, n - 3);
            out[i] = (-samples[j - 2] + 16.0 * samples[j - 1] - 30.0 * samples[j]
                + 16.0 * samples[j + 1]
                - samples[j + 2])
                / (12.0 * h2);
        }
        out
    }

    /// Cumulative ∫_{r_min}^{r_i} f(r) dr from samples, integrating the
    /// local cubic in x = log r (so the integrand becomes f·r).
    pub fn cumulative_integral(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let n = samples.len();
        let g: Vec<Complex64> = (0..n).map(|i| samples[i] * self.points[i]).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut out = Vec::with_capacity(n);
        out.push(acc);
        for i in 0..n - 1 {
            acc += self.h * panel(&g, i);
            out.push(acc);
        }
        out
    }

    /// Total ∫ f dr over the grid.
    pub fn integral(&self, samples: &[Complex64]) -> Complex64 {
        *self.cumulative_integral(samples).last().unwrap()
    }
}

/// ∫ over [x_i, x_{i+1}] of the cubic through four neighbouring samples
/// (uniform spacing assumed; one-sided at the first panel).
fn panel(g: &[Complex64], i: usize) -> Complex64 {
    let n = g.len();
    if i >= 1 && i + 2 < n {
        (-g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2]) / 24.0
    } else if i == 0 {
        (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]) / 24.0
    } else {
        let m = n - 1;
        (9.0 * g[m] + 19.0 * g[m - 1] - 5.0 * g[m - 2] + g[m - 3]) / 24.0
    }
}

/// Adaptive Simpson quadrature on a real interval (reference integrals for
/// scalar integrands).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}
