//! Low-energy resolvent expansions for radial Schrödinger-type operators on
//! exact cones of dimension d ≥ 3.
//!
//! The crate builds the full σ → 0⁺ expansion of outgoing resolvent outputs
//! in three coupled asymptotic regimes — large radius at fixed energy, the
//! transition regime r̂ = rσ, and exactly zero energy — and cross-checks the
//! construction against a direct limiting-absorption ODE solver.
//!
//! Module map:
//! - [`exact`]: exact exponent arithmetic (rationals plus square roots).
//! - [`indexset`]: the (exponent, logpower) bookkeeping calculus; predicts
//!   which terms each solve can produce.
//! - [`phg`]: finite polyhomogeneous series with logs, exact term algebra
//!   and the resonance-aware primitives.
//! - [`bessel`]: J/Y/H⁺ of real order via power series, terminating
//!   half-integer forms, and large-argument asymptotics.
//! - [`grid`], [`cutoff`], [`profile`]: radial grids, smooth cutoffs, and
//!   per-harmonic profiles carrying numeric samples plus symbolic tails.
//! - [`zf`]: zero-energy solves (exact series Green application, quadrature
//!   Green application, perturbative iteration).
//! - [`tf`]: transition-regime solves through Bessel/Hankel kernels.
//! - [`quasimode`]: the alternating construction loop and its evaluation.
//! - [`oracle`]: independent outgoing-ODE ground truth and the log-phase
//!   experiment for the r⁻¹∂r² correction.
//! - [`config`], [`report`], [`selftest`]: run configuration, file outputs,
//!   and the acceptance checks shared by tests and the CLI.

pub mod bessel;
pub mod config;
pub mod cutoff;
pub mod error;
pub mod exact;
pub mod grid;
pub mod indexset;
pub mod oracle;
pub mod phg;
pub mod profile;
pub mod quasimode;
pub mod report;
pub mod selftest;
pub mod tf;
pub mod zf;

pub use error::Error;
