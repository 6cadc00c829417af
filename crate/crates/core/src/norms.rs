//! Weighted β-norms and the inequality diagnostics built on them.
//!
//! All integrals are left-endpoint sums on the solver grid:
//!
//! ```text
//! ‖(Y, Z)‖² = Σ_i e^{β t_i} E|Y(t_i)|² h + Σ_i Σ_{j ∈ R(i)} e^{β s_j} E‖Z(t_i, s_j)‖² h²
//! ```
//!
//! where the rows `i` and column sets `R(i)` depend on the [`Region`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FreeData, SolutionField};
use crate::grid::TimeGrid;
use crate::math;
use crate::paths::PathEnsemble;
use crate::regression::{Regressor, ZERO_VARIANCE};
use crate::solver::{evaluate_generator, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Rows on `[0, T)`, `Z` on `s >= t` inside `[0, T]²`.
    Delta,
    /// Rows on `[0, T + K)`, `Z` on `s >= t` inside `[0, T + K]²`.
    TildeDelta,
    /// Rows on `[0, T + K)`, `Z` on every column.
    FullSquare,
    /// The contraction norm of the Picard loop; same sums as `TildeDelta`.
    MSpace,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Delta,
        Region::TildeDelta,
        Region::FullSquare,
        Region::MSpace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Region::Delta => "Delta",
            Region::TildeDelta => "TildeDelta",
            Region::FullSquare => "FullSquare",
            Region::MSpace => "MSpace",
        }
    }

    fn rows(&self, grid: &TimeGrid) -> usize {
        match self {
            Region::Delta => grid.steps(),
            _ => grid.last(),
        }
    }

    fn columns(&self, grid: &TimeGrid, row: usize) -> core::ops::Range<usize> {
        match self {
            Region::Delta => row..grid.steps(),
            Region::TildeDelta | Region::MSpace => row..grid.last(),
            Region::FullSquare => 0..grid.last(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConfig {
    pub beta: f64,
    pub region: Region,
}

impl NormConfig {
    pub fn new(beta: f64, region: Region) -> Self {
        Self { beta, region }
    }
}

fn mean_square(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

fn mean_square_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn squared(
    grid: &TimeGrid,
    a: &SolutionField,
    b: Option<&SolutionField>,
    cfg: &NormConfig,
) -> Result<f64> {
    if cfg.beta < 0.0 || cfg.beta.is_nan() {
        return Err(Error::InvalidParameter("beta must be non-negative".into()));
    }
    if let Some(b) = b {
        if a.shape() != b.shape() {
            return Err(Error::DimensionMismatch("fields differ in shape".into()));
        }
    }
    let h = grid.step();
    let (m, d) = (a.m(), a.d());
    let rows = cfg.region.rows(grid);
    let ms = |x: &[f64], y: Option<&[f64]>| match y {
        Some(y) => mean_square_diff(x, y),
        None => mean_square(x),
    };
    let mut total = 0.0;
    for i in 0..rows {
        let mut y_mass = 0.0;
        for k in 0..m {
            y_mass += ms(a.y(i, k), b.map(|b| b.y(i, k)));
        }
        total += math::exp(cfg.beta * grid.time(i)) * y_mass * h;
        for j in cfg.region.columns(grid, i) {
            a.require(i, j)?;
            if let Some(b) = b {
                b.require(i, j)?;
            }
            let mut z_mass = 0.0;
            for k in 0..m {
                for l in 0..d {
                    z_mass += ms(a.z(i, j, k, l), b.map(|b| b.z(i, j, k, l)));
                }
            }
            total += math::exp(cfg.beta * grid.time(j)) * z_mass * h * h;
        }
    }
    Ok(total)
}

pub fn weighted_norm(grid: &TimeGrid, field: &SolutionField, cfg: &NormConfig) -> Result<f64> {
    squared(grid, field, None, cfg).map(math::sqrt)
}

/// `‖a - b‖` in the norm of `cfg`.
pub fn weighted_distance(
    grid: &TimeGrid,
    a: &SolutionField,
    b: &SolutionField,
    cfg: &NormConfig,
) -> Result<f64> {
    squared(grid, a, Some(b), cfg).map(math::sqrt)
}

/// Both sides of `E Σ_{s<t} e^{βs}‖Z(t,s)‖² ≤ E Σ_t e^{βt}|Y(t)|²` over
/// `[0, T + K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Monte Carlo slack on the inequality checks.
pub const SLACK: f64 = 0.05;

pub fn check_m_inequality(
    grid: &TimeGrid,
    field: &SolutionField,
    beta: f64,
) -> Result<MInequality> {
    let h = grid.step();
    let (m, d) = (field.m(), field.d());
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..grid.last() {
        let mut y_mass = 0.0;
        for k in 0..m {
            y_mass += mean_square(field.y(i, k));
        }
        rhs += math::exp(beta * grid.time(i)) * y_mass * h;
        for j in 0..i {
            field.require(i, j)?;
            let mut z_mass = 0.0;
            for k in 0..m {
                for l in 0..d {
                    z_mass += mean_square(field.z(i, j, k, l));
                }
            }
            lhs += math::exp(beta * grid.time(j)) * z_mass * h * h;
        }
    }
    Ok(MInequality {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + SLACK),
    })
}

/// Reconstruction error of `Y(t_i) = E[Y(t_i)] + Σ_{j<i} Z(t_i, s_j) ΔW_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeResidual {
    /// Mean square of the reconstruction error, summed over components.
    pub residual: f64,
    /// Sample variance of `Y(t_i)`, summed over components.
    pub variance: f64,
}

impl NodeResidual {
    /// `residual <= fraction · variance`, or below [`ZERO_VARIANCE`] when
    /// `Y(t_i)` is deterministic up to rounding.
    pub fn within(&self, fraction: f64) -> bool {
        self.residual <= fraction * self.variance || self.residual <= ZERO_VARIANCE
    }
}

/// Residuals on every node of `[0, T + K]`.
pub fn m_identity_residuals(
    grid: &TimeGrid,
    ensemble: &PathEnsemble,
    field: &SolutionField,
) -> Result<Vec<NodeResidual>> {
    let (m, d, paths) = (field.m(), field.d(), field.paths());
    if paths != ensemble.len() || d != ensemble.dim() {
        return Err(Error::DimensionMismatch(
            "field and ensemble disagree".into(),
        ));
    }
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        for j in 0..i {
            field.require(i, j)?;
        }
        let (mut residual, mut variance) = (0.0, 0.0);
        for k in 0..m {
            let y = field.y(i, k);
            let mean = math::mean(y);
            let mut err: Vec<f64> = y.iter().map(|v| v - mean).collect();
            for j in 0..i {
                for l in 0..d {
                    for ((e, z), dw) in err
                        .iter_mut()
                        .zip(field.z(i, j, k, l))
                        .zip(ensemble.increment(j, l))
                    {
                        *e -= z * dw;
                    }
                }
            }
            residual += mean_square(&err);
            variance += math::variance(y);
        }
        out.push(NodeResidual { residual, variance });
    }
    Ok(out)
}

/// `E Σ_{i<N} Σ_{j ∈ [i, N)} e^{β s_j} |g(t_i, s_j, 0, …, 0)|² h²`.
pub fn generator_zero_mass(problem: &Problem<'_>, reg: &Regressor<'_>, beta: f64) -> Result<f64> {
    let grid = problem.grid;
    let s = problem.free.shape();
    let zero = SolutionField::zeros_populated(grid, s.m, s.d, s.paths);
    let drift = evaluate_generator(problem, reg, &zero, None)?;
    let n = grid.steps();
    let h = grid.step();
    let mut total = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut mass = 0.0;
            for k in 0..s.m {
                mass += mean_square(drift.get(i, j, k));
            }
            total += math::exp(beta * grid.time(j)) * mass * h * h;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Squared norm of the solution in the configured region.
    pub lhs: f64,
    /// `psi`, `g0`, `eta_tt`, `eta_cross`.
    pub rhs_terms: Vec<(&'static str, f64)>,
    /// `lhs / Σ rhs_terms`; zero when both sides vanish.
    pub fitted_c: f64,
    pub holds: bool,
}

impl EstimateReport {
    pub fn rhs(&self) -> f64 {
        self.rhs_terms.iter().map(|(_, v)| v).sum()
    }
}

/// Fits the constant of the a priori bound
///
/// ```text
/// ‖(Y, Z)‖² ≤ C [ E∫_0^{T+K} |ψ|² + E∫∫_Δ e^{βs}|g₀|²
///               + E∫_T^{T+K}∫_T^{T+K} e^{βs}‖η(t,s)‖²
///               + E∫_0^T∫_T^{T+K} (e^{βs}‖η(t,s)‖² + e^{βt}‖η(s,t)‖²) ]
/// ```
///
/// with `‖(Y, Z)‖` taken in `cfg` (`Region::Delta` for the bound as stated).
pub fn check_apriori(
    grid: &TimeGrid,
    field: &SolutionField,
    free: &FreeData,
    gen_zero_mass: f64,
    cfg: &NormConfig,
) -> Result<EstimateReport> {
    let lhs = squared(grid, field, None, cfg)?;
    let s = free.shape();
    let (n, last, h) = (grid.steps(), grid.last(), grid.step());
    let eta_mass = |row: usize, col: usize| -> f64 {
        let mut mass = 0.0;
        for k in 0..s.m {
            for l in 0..s.d {
                mass += mean_square(free.eta(row, col, k, l));
            }
        }
        mass
    };
    let mut psi = 0.0;
    for i in 0..last {
        for k in 0..s.m {
            psi += mean_square(free.psi(i, k)) * h;
        }
    }
    let mut eta_tt = 0.0;
    for i in n..last {
        for j in n..last {
            eta_tt += math::exp(cfg.beta * grid.time(j)) * eta_mass(i, j) * h * h;
        }
    }
    let mut eta_cross = 0.0;
    for i in 0..n {
        for j in n..last {
            eta_cross += math::exp(cfg.beta * grid.time(j)) * eta_mass(i, j) * h * h;
            eta_cross += math::exp(cfg.beta * grid.time(i)) * eta_mass(j, i) * h * h;
        }
    }
    let rhs_terms = vec![
        ("psi", psi),
        ("g0", gen_zero_mass),
        ("eta_tt", eta_tt),
        ("eta_cross", eta_cross),
    ];
    let rhs: f64 = rhs_terms.iter().map(|(_, v)| v).sum();
    let fitted_c = if lhs == 0.0 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    };
    Ok(EstimateReport {
        lhs,
        rhs_terms,
        fitted_c,
        holds: fitted_c.is_finite(),
    })
}
