//! Asymptotically optimal importance sampling for Monte Carlo pricing of
//! European, basket and Asian put options in exponential Levy models, with
//! the multivariate variance gamma model shipped.
//!
//! The tilt family is the path-dependent Esscher transform parametrized by a
//! bounded signed vector measure `theta` on `[0, T]`. The asymptotically
//! optimal tilt minimizes the dual variance proxy
//! `2 (H^(theta) + int_0^T G(theta([t,T])) dt)`, which reduces to a
//! finite-dimensional convex program for European payoffs and to a scalar
//! two-point boundary value problem for the Asian put.
//!
//! Module map:
//! * [`levy_models`] — variance gamma parameters, cumulant function, tilt map;
//! * [`measures`] — tilt measures, tail function, exact likelihood ratios;
//! * [`payoffs`] — put payoffs and log-payoff conjugates;
//! * [`optimal_tilt`] — the tilt solvers and the dual objective;
//! * [`mc_engine`] — seeded, reproducibly parallel pricing and sweeps.

pub mod error;
pub mod levy_models;
pub mod mc_engine;
pub mod measures;
pub mod optimal_tilt;
pub mod path;
pub mod payoffs;

pub use error::{Error, Result};
pub use levy_models::{martingale_drift, CgfModel, DomainMargin, VarianceGammaModel};
pub use mc_engine::{
    likelihood_ratio_mean, price_importance, price_standard, simulate_batch, sweep_theta,
    variance_ratio, EstimateReport, PathBatch, SweepPoint,
};
pub use measures::TiltMeasure;
pub use optimal_tilt::{
    dual_objective, solve_asian, solve_asian_bvp, solve_asian_direct, solve_european, TiltSolution,
};
pub use path::SamplePath;
pub use payoffs::{
    conjugate_asian, conjugate_basket, conjugate_bruteforce, ConjugateValue, PayoffKind, PayoffSpec,
};
