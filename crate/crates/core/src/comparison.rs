//! Comparison of scalar ABSVIEs of the reduced form
//! `g(t, s, Y(s), Z(t, s), Y(s + δ_s))` by monotone iteration.
//!
//! Given `g⁰ ≤ ḡ ≤ g¹` with `ḡ` nondecreasing in the anticipated argument
//! and `ψ⁰ ≤ ψ̄ ≤ ψ¹`, the iteration
//! `Ỹ_k = solve(ḡ(·, Ỹ_{k-1}(s + δ_s)), ψ̄)` started from `Ỹ_0 = Y¹` is
//! nonincreasing and converges to `Ȳ`; started from `Y⁰` it is
//! nondecreasing. Ordering is checked cellwise with a Monte Carlo margin
//! `ε_mc = 3 √(p σ² / M)`, where `σ²` is the pooled residual variance of
//! the `Y` regressions and `p` the basis size.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FreeData, SolutionField};
use crate::generator::{Ahead, GeneratorSpec, Probe};
use crate::grid::{DelayPair, TimeGrid};
use crate::math;
use crate::norms::{weighted_distance, NormConfig, Region};
use crate::regression::Regressor;
use crate::solver::{picard_solve, PicardOptions, Problem};

/// Number of random argument tuples in the hypothesis checks.
pub const PROBES: usize = 1000;
const PROBE_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone)]
pub struct ComparisonScenario {
    pub gen0: GeneratorSpec,
    pub gen1: GeneratorSpec,
    pub gen_bar: GeneratorSpec,
    pub psi0: FreeData,
    pub psi1: FreeData,
    pub psi_bar: FreeData,
    pub delays: DelayPair,
}

impl ComparisonScenario {
    pub fn problem<'a>(&'a self, grid: &'a TimeGrid, which: Which) -> Problem<'a> {
        let (generator, free) = match which {
            Which::Lower => (&self.gen0, &self.psi0),
            Which::Upper => (&self.gen1, &self.psi1),
            Which::Middle => (&self.gen_bar, &self.psi_bar),
        };
        Problem {
            grid,
            delays: &self.delays,
            generator,
            free,
        }
    }

    /// Checks the hypotheses: scalar reduced-form generators, the sandwich
    /// and monotonicity at [`PROBES`] random tuples, and `ψ⁰ ≤ ψ̄ ≤ ψ¹` on
    /// every node and path.
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        let shape = self.psi_bar.shape();
        if shape.m != 1 {
            return Err(Error::ScenarioInvalid(format!(
                "need m = 1, got {}",
                shape.m
            )));
        }
        if self.psi0.shape() != shape || self.psi1.shape() != shape {
            return Err(Error::ScenarioInvalid("free terms differ in shape".into()));
        }
        for gen in [&self.gen0, &self.gen1, &self.gen_bar] {
            let u = gen.uses();
            if u.z_transposed || u.z_ahead || u.z_ahead_transposed {
                return Err(Error::ScenarioInvalid(format!(
                    "`{}` reads arguments outside the reduced form",
                    gen.name()
                )));
            }
        }
        let d = shape.d;
        let mut rng = Probe::new(PROBE_SEED);
        let mut z = vec![0.0; d];
        let zeros = vec![0.0; d];
        let eval = |gen: &GeneratorSpec, t: f64, s: f64, y: f64, z: &[f64], xi: f64| {
            let mut out = [0.0];
            let ahead = Ahead {
                y: &[xi],
                z: &zeros,
                z_transposed: &zeros,
            };
            gen.evaluate_point(t, s, &[y], z, &zeros, &ahead, &mut out);
            out[0]
        };
        for _ in 0..PROBES {
            let s = rng.uniform(0.0, grid.horizon());
            let t = rng.uniform(0.0, s);
            let y = rng.uniform(-5.0, 5.0);
            rng.fill(&mut z, -5.0, 5.0);
            let xi = rng.uniform(-5.0, 5.0);
            let xi2 = xi + rng.uniform(0.0, 5.0);
            let (lo, mid, hi) = (
                eval(&self.gen0, t, s, y, &z, xi),
                eval(&self.gen_bar, t, s, y, &z, xi),
                eval(&self.gen1, t, s, y, &z, xi),
            );
            if !(lo <= mid && mid <= hi) {
                return Err(Error::ScenarioInvalid(format!(
                    "sandwich fails at (t, s, y, ξ) = ({t}, {s}, {y}, {xi}): {lo} / {mid} / {hi}"
                )));
            }
            if eval(&self.gen_bar, t, s, y, &z, xi2) < mid {
                return Err(Error::ScenarioInvalid(format!(
                    "middle generator decreases in ξ between {xi} and {xi2}"
                )));
            }
        }
        for node in 0..grid.len() {
            let rows = self
                .psi0
                .psi(node, 0)
                .iter()
                .zip(self.psi_bar.psi(node, 0))
                .zip(self.psi1.psi(node, 0));
            for (p, ((a, b), c)) in rows.enumerate() {
                if !(a <= b && b <= c) {
                    return Err(Error::ScenarioInvalid(format!(
                        "free terms not ordered at node {node}, path {p}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Lower,
    Middle,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Seeded from `Y¹`; iterates should not increase.
    Downward,
    /// Seeded from `Y⁰`; iterates should not decrease.
    Upward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub beta: f64,
    /// Picard tolerance, also the early-stop distance of the monotone iteration.
    pub tol: f64,
    pub max_iter: usize,
    pub k_max: usize,
}

impl CompareOptions {
    /// `β = 16 / (T + K)`, `tol = 1e-8`, 50 Picard and 20 monotone steps.
    pub fn new(grid: &TimeGrid) -> Self {
        Self {
            beta: 16.0 / (grid.horizon() + grid.span()),
            tol: 1e-8,
            max_iter: 50,
            k_max: 20,
        }
    }

    fn picard<'a>(&self, grid: &TimeGrid) -> PicardOptions<'a> {
        PicardOptions::new(grid)
            .beta(self.beta)
            .tol(self.tol)
            .max_iter(self.max_iter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTrace {
    pub direction: Direction,
    /// `Y` of each iterate (`[node][path]`), starting with the seed.
    pub iterates: Vec<Vec<f64>>,
    /// `violations[k]`: fraction of `(node, path)` cells on `[0, T]` where
    /// iterate `k + 1` moves against `direction` by more than `ε_mc`.
    pub violations: Vec<f64>,
    /// M²-distances between successive iterates.
    pub cauchy_distances: Vec<f64>,
    /// Last iterate.
    pub limit: SolutionField,
}

impl MonotoneTrace {
    pub fn worst_violation(&self) -> f64 {
        self.violations.iter().cloned().fold(0.0, f64::max)
    }
}

fn y_rows(field: &SolutionField, nodes: usize) -> Vec<f64> {
    (0..nodes)
        .flat_map(|i| field.y(i, 0).iter().copied())
        .collect()
}

/// Monotone iteration of the middle problem from `seed`; each step is a
/// Picard solve with the anticipated argument read from the previous
/// iterate. Stops after `k_max` steps or once a step moves by at most
/// `opts.tol`.
pub fn monotone_iterate(
    problem: &Problem<'_>,
    reg: &Regressor<'_>,
    seed: &SolutionField,
    direction: Direction,
    eps_mc: f64,
    opts: &CompareOptions,
) -> Result<MonotoneTrace> {
    let grid = problem.grid;
    let nodes = grid.steps() + 1;
    let norm = NormConfig::new(opts.beta, Region::MSpace);
    let mut iterates = vec![y_rows(seed, nodes)];
    let mut violations = Vec::new();
    let mut cauchy_distances = Vec::new();
    let mut previous = seed.clone();
    for _ in 0..opts.k_max.max(1) {
        let picard = opts.picard(grid).frozen_ahead(&previous);
        let (next, _) = picard_solve(problem, reg, &picard)?;
        let rows = y_rows(&next, nodes);
        let before = iterates.last().expect("seeded");
        let bad = rows
            .iter()
            .zip(before)
            .filter(|(now, was)| match direction {
                Direction::Downward => **now > **was + eps_mc,
                Direction::Upward => **now < **was - eps_mc,
            })
            .count();
        violations.push(bad as f64 / rows.len() as f64);
        let dist = weighted_distance(grid, &next, &previous, &norm)?;
        cauchy_distances.push(dist);
        iterates.push(rows);
        previous = next;
        if dist <= opts.tol {
            break;
        }
    }
    Ok(MonotoneTrace {
        direction,
        iterates,
        violations,
        cauchy_distances,
        limit: previous,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    /// Fraction of `(node, path)` cells on `[0, T]` with `Y⁰ ≤ Y¹ + ε_mc`.
    pub frac_ordered: f64,
    /// Fraction with `Y⁰ ≤ Ȳ + ε_mc` and `Ȳ ≤ Y¹ + ε_mc`.
    pub frac_sandwich: f64,
    pub eps_mc: f64,
    pub lower: SolutionField,
    pub middle: SolutionField,
    pub upper: SolutionField,
    pub downward: MonotoneTrace,
    pub upward: MonotoneTrace,
    /// M²-distance from each monotone limit to the direct solve of `Ȳ`.
    pub limit_distance_down: f64,
    pub limit_distance_up: f64,
}

/// `3 √(p · mean residual variance / M)` pooled over the given fields.
pub fn monte_carlo_margin(reg: &Regressor<'_>, grid: &TimeGrid, fields: &[&SolutionField]) -> f64 {
    let nodes = grid.steps();
    if nodes == 0 || fields.is_empty() {
        return 0.0;
    }
    let mut pooled = 0.0;
    for f in fields {
        pooled += f.y_residual_var()[..nodes].iter().sum::<f64>();
    }
    pooled /= (nodes * fields.len()) as f64;
    let p = reg.basis_size() as f64;
    3.0 * math::sqrt(p * pooled / reg.ensemble().len() as f64)
}

pub fn compare(
    grid: &TimeGrid,
    scenario: &ComparisonScenario,
    reg: &Regressor<'_>,
    opts: &CompareOptions,
) -> Result<OrderingReport> {
    scenario.validate(grid)?;
    let picard = opts.picard(grid);
    let (lower, _) = picard_solve(&scenario.problem(grid, Which::Lower), reg, &picard)?;
    let (upper, _) = picard_solve(&scenario.problem(grid, Which::Upper), reg, &picard)?;
    let (middle, _) = picard_solve(&scenario.problem(grid, Which::Middle), reg, &picard)?;
    let eps_mc = monte_carlo_margin(reg, grid, &[&lower, &upper]);

    let nodes = grid.steps() + 1;
    let (y0, y1, yb) = (
        y_rows(&lower, nodes),
        y_rows(&upper, nodes),
        y_rows(&middle, nodes),
    );
    let cells = y0.len() as f64;
    let ordered = y0
        .iter()
        .zip(&y1)
        .filter(|(a, b)| **a <= **b + eps_mc)
        .count();
    let sandwiched = y0
        .iter()
        .zip(&yb)
        .zip(&y1)
        .filter(|((a, m), b)| **a <= **m + eps_mc && **m <= **b + eps_mc)
        .count();

    let middle_problem = scenario.problem(grid, Which::Middle);
    let downward = monotone_iterate(
        &middle_problem,
        reg,
        &upper,
        Direction::Downward,
        eps_mc,
        opts,
    )?;
    let upward = monotone_iterate(
        &middle_problem,
        reg,
        &lower,
        Direction::Upward,
        eps_mc,
        opts,
    )?;
    let norm = NormConfig::new(opts.beta, Region::MSpace);
    let limit_distance_down = weighted_distance(grid, &downward.limit, &middle, &norm)?;
    let limit_distance_up = weighted_distance(grid, &upward.limit, &middle, &norm)?;
    Ok(OrderingReport {
        frac_ordered: ordered as f64 / cells,
        frac_sandwich: sandwiched as f64 / cells,
        eps_mc,
        lower,
        middle,
        upper,
        downward,
        upward,
        limit_distance_down,
        limit_distance_up,
    })
}
