//! The four experiment modes.
//!
//! Each mode returns an outcome holding its CSV [`Table`] plus the
//! quantities behind it, so callers can check more than the file shows.

use absvie_core::{
    build_free_term, build_grid, check_apriori, compare, constant_delays, gaussian_reference,
    generator_zero_mass, picard_solve, simulate, solve_det_volterra, weighted_norm, CompareOptions,
    ComparisonScenario, DelayPair, DetSolution, DetVolterraProblem, FreeData, GeneratorSpec,
    InitialIterate, NormConfig, PathEnsemble, PicardOptions, PicardReport, Problem,
    RegressionBasis, Regressor, SolutionField, TimeGrid,
};

use crate::config::{region_by_name, ExperimentConfig, InitialConfig, Mode, OracleConfig};
use crate::error::{Result, RunError};
use crate::table::{Cell, Table, COMPARE_HEADER, CONVERGENCE_HEADER, NORMS_HEADER, SOLVE_HEADER};

/// Grid, paths and data of one configured equation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub delays: DelayPair,
    pub ensemble: PathEnsemble,
    pub generator: GeneratorSpec,
    pub free: FreeData,
    pub basis: RegressionBasis,
}

impl Scenario {
    /// Builds the scenario of `cfg` with `N = steps` and the given seed.
    pub fn build(cfg: &ExperimentConfig, steps: usize, seed: u64) -> Result<Self> {
        let grid = build_grid(cfg.grid.horizon, cfg.grid.span, steps)?;
        let delays = constant_delays(&grid, cfg.delays.delta, cfg.delays.zeta)?;
        let ensemble = simulate(&grid, 1, cfg.monte_carlo.paths, seed)?;
        let generator = cfg.generator.generator()?;
        let free = build_free_term(
            &grid,
            &ensemble,
            1,
            &cfg.free_term.name,
            &cfg.free_term.params(),
        )?;
        let basis = RegressionBasis::polynomial(cfg.basis.degree).with_ridge(cfg.basis.ridge);
        Ok(Self {
            grid,
            delays,
            ensemble,
            generator,
            free,
            basis,
        })
    }

    pub fn regressor(&self) -> Regressor<'_> {
        Regressor::new(&self.ensemble, self.basis)
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem {
            grid: &self.grid,
            delays: &self.delays,
            generator: &self.generator,
            free: &self.free,
        }
    }

    pub fn picard_options(&self, cfg: &ExperimentConfig) -> PicardOptions<'static> {
        let initial = match cfg.solver.initial {
            InitialConfig::Zero => InitialIterate::Zero,
            InitialConfig::FreeTerm => InitialIterate::FreeTerm,
        };
        PicardOptions::new(&self.grid)
            .beta(cfg.beta())
            .tol(cfg.solver.tol)
            .max_iter(cfg.solver.max_iter)
            .initial(initial)
    }

    /// Picard solve with the configured options.
    pub fn solve(&self, cfg: &ExperimentConfig) -> Result<(SolutionField, PicardReport)> {
        Ok(picard_solve(
            &self.problem(),
            &self.regressor(),
            &self.picard_options(cfg),
        )?)
    }
}

/// The reference solution selected by the `[oracle]` section.
#[derive(Debug, Clone)]
pub enum Reference {
    None,
    /// `Y(t) = (a + b t) W(t)`, `Z(t, s) = a + b t`.
    Gaussian {
        a: f64,
        b: f64,
    },
    Volterra(DetSolution),
}

impl Reference {
    pub fn build(cfg: &ExperimentConfig, largest_steps: usize) -> Result<Self> {
        let bad = |msg: &str| Err(RunError::ConfigParse(format!("oracle: {msg}")));
        match &cfg.oracle {
            None => Ok(Reference::None),
            Some(OracleConfig::Gaussian) => {
                let p = &cfg.free_term.params;
                let get = |k: &str, d: f64| p.get(k).copied().unwrap_or(d);
                if cfg.free_term.name != "brownian"
                    || get("c", 0.0) != 0.0
                    || get("adapted", 0.0) != 0.0
                {
                    return bad("gaussian needs the `brownian` free term with c = 0, adapted = 0");
                }
                if cfg.generator.name != "zero" {
                    return bad("gaussian needs the `zero` generator");
                }
                Ok(Reference::Gaussian {
                    a: get("a", 1.0),
                    b: get("b", 0.0),
                })
            }
            Some(OracleConfig::Volterra { lambda, fine_steps }) => {
                if cfg.free_term.name != "constant" {
                    return bad("volterra needs the `constant` free term");
                }
                let c = cfg.free_term.params.get("c").copied().unwrap_or(0.0);
                let fine = fine_steps.unwrap_or(8 * largest_steps);
                let problem = DetVolterraProblem::new(
                    cfg.grid.horizon,
                    cfg.grid.span,
                    move |_| c,
                    *lambda,
                    cfg.delays.delta,
                )
                .fine_steps(fine);
                Ok(Reference::Volterra(solve_det_volterra(&problem)?))
            }
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Node-wise errors against `reference` on `[0, T]`: relative `L²` error of
/// `Y` and of the upper block `Z(t_i, s_j)`, `i <= j < N`.
pub fn node_errors(
    scenario: &Scenario,
    field: &SolutionField,
    reference: &Reference,
    i: usize,
) -> (f64, f64) {
    let grid = &scenario.grid;
    let n = grid.steps();
    let y = field.y(i, 0);
    let t = grid.time(i);
    match reference {
        Reference::None => (f64::NAN, f64::NAN),
        Reference::Gaussian { a, b } => {
            let h = a + b * t;
            let (y_ref, _) = gaussian_reference(grid, &scenario.ensemble, |s| a + b * s, i, i);
            let y_err = rms(y.iter().zip(&y_ref).map(|(u, v)| u - v));
            let scale = rms(scenario.free.psi(i, 0).iter().copied());
            let z_err = rms((i..n).flat_map(|j| field.z(i, j, 0, 0).iter().map(move |z| z - h)));
            (relative(y_err, scale), relative(z_err, h.abs()))
        }
        Reference::Volterra(sol) => {
            let r = sol.value_at(t);
            let y_err = rms(y.iter().map(|u| u - r));
            let z_err = rms((i..n).flat_map(|j| field.z(i, j, 0, 0).iter().copied()));
            (relative(y_err, r.abs()), z_err)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub scenario: Scenario,
    pub field: SolutionField,
    pub report: PicardReport,
    pub table: Table,
}

pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    let scenario = Scenario::build(cfg, cfg.grid.steps, cfg.monte_carlo.seed)?;
    let reference = Reference::build(cfg, cfg.grid.steps)?;
    let (field, report) = scenario.solve(cfg)?;
    let mut table = Table::new(SOLVE_HEADER);
    for i in 0..=scenario.grid.steps() {
        let (mean, std) = mean_std(field.y(i, 0));
        let (y_err, z_err) = node_errors(&scenario, &field, &reference, i);
        table.push(vec![
            scenario.grid.time(i).into(),
            mean.into(),
            std.into(),
            y_err.into(),
            z_err.into(),
        ]);
    }
    Ok(SolveOutcome {
        scenario,
        field,
        report,
        table,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub h: f64,
    /// `max_i |mean Y(t_i) − Y_ref(t_i)| / |Y_ref(t_i)|` over `[0, T]`.
    pub err: f64,
    /// `log(err_prev / err) / log(N / N_prev)`; NaN on the first row.
    pub observed_order: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub rows: Vec<ConvergenceRow>,
    pub reference: DetSolution,
    pub table: Table,
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceOutcome> {
    cfg.validate(Mode::Convergence)?;
    let steps = &cfg.convergence.as_ref().expect("validated").steps;
    let largest = steps.iter().copied().max().unwrap_or(1);
    let Reference::Volterra(reference) = Reference::build(cfg, largest)? else {
        unreachable!("validated");
    };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in steps {
        let scenario = Scenario::build(cfg, n, cfg.monte_carlo.seed)?;
        let (field, _) = scenario.solve(cfg)?;
        let mut err: f64 = 0.0;
        for i in 0..=n {
            let r = reference.value_at(scenario.grid.time(i));
            let (mean, _) = mean_std(field.y(i, 0));
            err = err.max(relative((mean - r).abs(), r.abs()));
        }
        let observed_order = match rows.last() {
            Some(prev) => (prev.err / err).ln() / (n as f64 / prev.steps as f64).ln(),
            None => f64::NAN,
        };
        rows.push(ConvergenceRow {
            steps: n,
            h: scenario.grid.step(),
            err,
            observed_order,
        });
    }
    let mut table = Table::new(CONVERGENCE_HEADER);
    for r in &rows {
        table.push(vec![
            r.steps.into(),
            r.h.into(),
            r.err.into(),
            r.observed_order.into(),
        ]);
    }
    Ok(ConvergenceOutcome {
        rows,
        reference,
        table,
    })
}

/// Per-seed summary of a comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub seed: u64,
    pub frac_ordered: f64,
    pub frac_sandwich: f64,
    pub eps_mc: f64,
    pub worst_violation_down: f64,
    pub worst_violation_up: f64,
    pub violations_down: Vec<f64>,
    pub violations_up: Vec<f64>,
    pub cauchy_down: Vec<f64>,
    pub cauchy_up: Vec<f64>,
    pub limit_distance_down: f64,
    pub limit_distance_up: f64,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub table: Table,
}

pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareOutcome> {
    cfg.validate(Mode::Compare)?;
    let section = cfg.compare.as_ref().expect("validated");
    let gen0 = section.gen0.generator()?;
    let gen1 = section.gen1.generator()?;
    let mut rows = Vec::new();
    for &seed in &section.seeds {
        let s = Scenario::build(cfg, cfg.grid.steps, seed)?;
        let scenario = ComparisonScenario {
            gen0: gen0.clone(),
            gen1: gen1.clone(),
            gen_bar: s.generator.clone(),
            psi0: s.free.shifted(section.lower_shift),
            psi1: s.free.shifted(section.upper_shift),
            psi_bar: s.free.clone(),
            delays: s.delays.clone(),
        };
        let opts = CompareOptions {
            beta: cfg.beta(),
            tol: cfg.solver.tol,
            max_iter: cfg.solver.max_iter,
            k_max: section.k_max,
        };
        let report = compare(&s.grid, &scenario, &s.regressor(), &opts)?;
        rows.push(CompareRow {
            seed,
            frac_ordered: report.frac_ordered,
            frac_sandwich: report.frac_sandwich,
            eps_mc: report.eps_mc,
            worst_violation_down: report.downward.worst_violation(),
            worst_violation_up: report.upward.worst_violation(),
            violations_down: report.downward.violations.clone(),
            violations_up: report.upward.violations.clone(),
            cauchy_down: report.downward.cauchy_distances.clone(),
            cauchy_up: report.upward.cauchy_distances.clone(),
            limit_distance_down: report.limit_distance_down,
            limit_distance_up: report.limit_distance_up,
        });
    }
    let mut table = Table::new(COMPARE_HEADER);
    for r in &rows {
        table.push(vec![
            r.seed.into(),
            r.frac_ordered.into(),
            r.frac_sandwich.into(),
            r.eps_mc.into(),
        ]);
    }
    Ok(CompareOutcome { rows, table })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormsRow {
    pub beta: f64,
    pub region: &'static str,
    pub norm: f64,
    pub fitted_c: f64,
}

#[derive(Debug, Clone)]
pub struct NormsOutcome {
    pub rows: Vec<NormsRow>,
    pub table: Table,
}

pub fn run_norms(cfg: &ExperimentConfig) -> Result<NormsOutcome> {
    cfg.validate(Mode::Norms)?;
    let section = cfg.norms.as_ref().expect("validated");
    let scenario = Scenario::build(cfg, cfg.grid.steps, cfg.monte_carlo.seed)?;
    let (field, _) = scenario.solve(cfg)?;
    let reg = scenario.regressor();
    let mut rows = Vec::new();
    for &beta in &section.betas {
        let g0 = generator_zero_mass(&scenario.problem(), &reg, beta)?;
        for name in &section.regions {
            let norm_cfg = NormConfig::new(beta, region_by_name(name)?);
            let norm = weighted_norm(&scenario.grid, &field, &norm_cfg)?;
            let estimate = check_apriori(&scenario.grid, &field, &scenario.free, g0, &norm_cfg)?;
            rows.push(NormsRow {
                beta,
                region: norm_cfg.region.name(),
                norm,
                fitted_c: estimate.fitted_c,
            });
        }
    }
    let mut table = Table::new(NORMS_HEADER);
    for r in &rows {
        table.push(vec![
            r.beta.into(),
            Cell::from(r.region),
            r.norm.into(),
            r.fitted_c.into(),
        ]);
    }
    Ok(NormsOutcome { rows, table })
}

/// Runs `mode` and returns its table.
pub fn run_table(mode: Mode, cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate(mode)?;
    Ok(match mode {
        Mode::Solve => run_solve(cfg)?.table,
        Mode::Convergence => run_convergence(cfg)?.table,
        Mode::Compare => run_compare(cfg)?.table,
        Mode::Norms => run_norms(cfg)?.table,
    })
}
