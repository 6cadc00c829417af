//! Solver and verification toolkit for anticipating backward stochastic
//! Volterra integral equations (ABSVIEs).
//!
//! The equation couples a value process `Y(t)` and a two-parameter density
//! `Z(t, s)` on `[0, T + K]`, with a generator that may read future values
//! `Y(s + δ_s)`, `Z(t, s + ζ_s)`, `Z(s + ζ_s, t)`. Solutions are built on a
//! uniform time grid by Picard iteration, where each sweep solves a simple
//! (drift-frozen) BSVIE with least-squares Monte Carlo conditional
//! expectations and then completes `Z` below the diagonal through the
//! martingale representation of `Y(t)`.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature evaluates independent rows with rayon;
//! results do not depend on the thread schedule.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod comparison;
pub mod error;
pub mod field;
pub mod free_term;
pub mod generator;
pub mod grid;
pub mod norms;
pub mod oracle;
pub mod paths;
pub mod regression;
pub mod solver;

mod math;
mod par;

pub use comparison::{
    compare, monotone_iterate, CompareOptions, ComparisonScenario, Direction, MonotoneTrace,
    OrderingReport, Which,
};
pub use error::{Error, Result};
pub use field::{FreeData, SolutionField};
pub use free_term::{build_free_term, FreeTermSpec};
pub use generator::{Conditioning, Generator, GeneratorSpec, Params, Uses};
pub use grid::{build_grid, constant_delays, verify_condition_ii, DelayPair, TimeGrid};
pub use norms::{
    check_apriori, check_m_inequality, generator_zero_mass, m_identity_residuals,
    weighted_distance, weighted_norm, EstimateReport, MInequality, NodeResidual, NormConfig,
    Region,
};
pub use oracle::{gaussian_reference, solve_det_volterra, DetSolution, DetVolterraProblem};
pub use paths::{simulate, PathEnsemble};
pub use regression::{cond_expect, martingale_coeff, Fit, RegressionBasis, Regressor};
pub use solver::{
    complete_m_solution, evaluate_generator, picard_solve, solve_simple, Drift, InitialIterate,
    PicardOptions, PicardReport, Problem,
};
