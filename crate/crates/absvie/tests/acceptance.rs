//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::f64::consts::E;
use std::path::PathBuf;
use std::time::Instant;

use absvie::config::{ExperimentConfig, InitialConfig, NormsConfig};
use absvie::experiment::{
    node_errors, run_compare, run_convergence, run_norms, run_solve, Reference, Scenario,
};
use absvie::{run, Mode};
use absvie_core::regression::ZERO_VARIANCE;
use absvie_core::{
    check_m_inequality, m_identity_residuals, weighted_distance, NormConfig, Region,
};

const CONFIGS: &[(&str, Mode)] = &[
    ("c1_gaussian", Mode::Solve),
    ("c2_exponential", Mode::Solve),
    ("c2_convergence", Mode::Convergence),
    ("c3_anticipating", Mode::Solve),
    ("c4_linear", Mode::Solve),
    ("c4_transposed", Mode::Solve),
    ("c4_nonlinear", Mode::Solve),
    ("c6_equality", Mode::Solve),
    ("c7_compare", Mode::Compare),
    ("c9_norms_gaussian", Mode::Norms),
    ("c9_norms_linear_x1", Mode::Norms),
    ("c9_norms_linear_x3", Mode::Norms),
];

const SOLVE_SCENARIOS: &[&str] = &[
    "c1_gaussian",
    "c2_exponential",
    "c3_anticipating",
    "c4_linear",
    "c4_transposed",
    "c4_nonlinear",
    "c6_equality",
];

type Outcome = Result<String, String>;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.toml"))
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn gaussian_oracle() -> Outcome {
    let cfg = load("c1_gaussian");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(err)?;
    let start = Instant::now();
    let out = pool.install(|| run_solve(&cfg)).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();
    let n = out.scenario.grid.steps();
    let mut y_worst: f64 = 0.0;
    let mut z_worst: f64 = 0.0;
    for i in 0..=n {
        let (y, z) = node_errors(
            &out.scenario,
            &out.field,
            &Reference::Gaussian { a: 1.0, b: 0.0 },
            i,
        );
        y_worst = y_worst.max(y);
        z_worst = z_worst.max(z);
    }
    check(
        y_worst <= 0.05 && z_worst <= 0.10 && elapsed <= 30.0,
        format!(
            "max Y err {y_worst:.4}, max Z diag err {z_worst:.4}, {elapsed:.2} s on one thread"
        ),
    )
}

fn volterra_oracle() -> Outcome {
    let out = run_solve(&load("c2_exponential")).map_err(err)?;
    let y0 = out.field.y(0, 0)[0];
    let rel = (y0 - E).abs() / E;
    let conv = run_convergence(&load("c2_convergence")).map_err(err)?;
    let orders: Vec<f64> = conv.rows.iter().skip(1).map(|r| r.observed_order).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        rel <= 0.02 && min_order >= 0.8,
        format!("Y(0) = {y0:.6} (rel err {rel:.4}), observed orders {orders:.3?}"),
    )
}

fn anticipation_oracle() -> Outcome {
    let out = run_solve(&load("c3_anticipating")).map_err(err)?;
    let grid = &out.scenario.grid;
    let i = grid.index_of(0.75).ok_or("0.75 is not a grid node")?;
    let y75 = out.field.y(i, 0)[0];
    let rel75 = (y75 - 1.25).abs() / 1.25;
    let Ok(Reference::Volterra(sol)) = Reference::build(&load("c3_anticipating"), grid.steps())
    else {
        return Err("volterra oracle unavailable".into());
    };
    let y0 = out.field.y(0, 0)[0];
    let r0 = sol.value_at(0.0);
    let rel0 = (y0 - r0).abs() / r0;
    check(
        rel75 <= 0.02 && rel0 <= 0.03,
        format!("Y(0.75) = {y75:.6} (rel err {rel75:.4}), Y(0) = {y0:.6} vs {r0:.6} (rel err {rel0:.4})"),
    )
}

fn contraction() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["c4_linear", "c4_transposed", "c4_nonlinear"] {
        let mut cfg = load(name);
        let scenario = Scenario::build(&cfg, cfg.grid.steps, cfg.monte_carlo.seed).map_err(err)?;
        let lt = scenario.generator.lipschitz() * (cfg.grid.horizon + cfg.grid.span);
        ok &= lt <= 0.25;
        let mut worst = Vec::new();
        let mut iterations = Vec::new();
        for beta in [0.0, 4.0, 16.0] {
            cfg.solver.beta = Some(beta);
            let (_, report) = scenario.solve(&cfg).map_err(err)?;
            ok &= report.converged && report.iterations <= 12;
            ok &= report.ratios.iter().skip(2).all(|&r| r < 1.0);
            worst.push(report.worst_ratio());
            iterations.push(report.iterations);
        }
        ok &= worst.windows(2).all(|w| w[1] <= w[0]);
        details.push(format!(
            "{name}: L(T+K) {lt:.2}, worst ratios {worst:.3?}, iterations {iterations:?}"
        ));
    }
    check(ok, details.join("; "))
}

fn uniqueness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for name in SOLVE_SCENARIOS {
        let mut cfg = load(name);
        let scenario = Scenario::build(&cfg, cfg.grid.steps, cfg.monte_carlo.seed).map_err(err)?;
        cfg.solver.initial = InitialConfig::Zero;
        let (a, _) = scenario.solve(&cfg).map_err(err)?;
        cfg.solver.initial = InitialConfig::FreeTerm;
        let (b, _) = scenario.solve(&cfg).map_err(err)?;
        let d = weighted_distance(
            &scenario.grid,
            &a,
            &b,
            &NormConfig::new(cfg.beta(), Region::MSpace),
        )
        .map_err(err)?;
        ok &= d <= 3.0 * cfg.solver.tol;
        worst = worst.max(d / cfg.solver.tol);
    }
    check(
        ok,
        format!(
            "max distance / tol {worst:.3} over {} scenarios",
            SOLVE_SCENARIOS.len()
        ),
    )
}

fn m_solution() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for name in ["c1_gaussian", "c2_exponential", "c3_anticipating"] {
        let cfg = load(name);
        let out = run_solve(&cfg).map_err(err)?;
        let grid = &out.scenario.grid;
        let residuals =
            m_identity_residuals(grid, &out.scenario.ensemble, &out.field).map_err(err)?;
        let identity = residuals.iter().all(|r| r.within(0.10));
        let worst = residuals
            .iter()
            .filter(|r| r.variance > ZERO_VARIANCE)
            .map(|r| r.residual / r.variance)
            .fold(0.0, f64::max);
        let mut holds = true;
        for beta in [0.0, cfg.beta()] {
            holds &= check_m_inequality(grid, &out.field, beta)
                .map_err(err)?
                .holds;
        }
        ok &= identity && holds;
        details.push(format!(
            "{name}: worst residual/var {worst:.3}, inequality {holds}"
        ));
    }
    let out = run_solve(&load("c6_equality")).map_err(err)?;
    let eq = check_m_inequality(&out.scenario.grid, &out.field, 0.0).map_err(err)?;
    let close = |v: f64| (v / 0.5 - 1.0).abs() <= 0.05;
    ok &= close(eq.lhs) && close(eq.rhs);
    details.push(format!(
        "equality case lhs {:.4}, rhs {:.4}",
        eq.lhs, eq.rhs
    ));
    check(ok, details.join("; "))
}

fn comparison() -> Outcome {
    let cfg = load("c7_compare");
    let out = run_compare(&cfg).map_err(err)?;
    let tol = cfg.solver.tol;
    let mut ok = out.rows.len() == 5;
    let mut frac: f64 = 1.0;
    let mut violation: f64 = 0.0;
    let mut limit: f64 = 0.0;
    for r in &out.rows {
        frac = frac.min(r.frac_ordered);
        violation = violation
            .max(r.worst_violation_down)
            .max(r.worst_violation_up);
        limit = limit.max(r.limit_distance_down).max(r.limit_distance_up);
    }
    ok &= frac >= 0.99 && violation <= 0.01 && limit <= 3.0 * tol;
    check(
        ok,
        format!(
            "{} seeds: min ordered fraction {frac:.4}, worst step violation {violation:.4}, limit distance {limit:.2e}",
            out.rows.len()
        ),
    )
}

fn determinism() -> Outcome {
    let first = tempfile::tempdir().map_err(err)?;
    let second = tempfile::tempdir().map_err(err)?;
    for (name, mode) in CONFIGS {
        let cfg = load(name);
        let a = run(*mode, &cfg, first.path()).map_err(err)?;
        let b = run(*mode, &cfg, second.path()).map_err(err)?;
        let (a, b) = (
            std::fs::read(a).map_err(err)?,
            std::fs::read(b).map_err(err)?,
        );
        if a != b {
            return Err(format!("{name}: CSV differs between runs"));
        }
    }
    Ok(format!(
        "{} configs byte-identical across two runs",
        CONFIGS.len()
    ))
}

fn with_norms(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.mode = None;
    cfg.norms = Some(NormsConfig {
        betas: vec![0.0, 1.0, 2.0],
        regions: Region::ALL.iter().map(|r| r.name().to_string()).collect(),
    });
    cfg
}

fn apriori() -> Outcome {
    let mut ok = true;
    for name in SOLVE_SCENARIOS {
        let out = run_norms(&with_norms(load(name))).map_err(err)?;
        ok &= out.rows.iter().all(|r| r.fitted_c.is_finite());
    }

    let mut per_n = Vec::new();
    for n in [8, 16, 32] {
        let mut cfg = load("c9_norms_gaussian");
        cfg.grid.steps = n;
        per_n.push(run_norms(&cfg).map_err(err)?.rows);
    }
    let mut spread: f64 = 0.0;
    for k in 0..per_n[0].len() {
        let values: Vec<f64> = per_n.iter().map(|rows| rows[k].fitted_c).collect();
        let hi = values.iter().cloned().fold(f64::MIN, f64::max);
        let lo = values.iter().cloned().fold(f64::MAX, f64::min);
        spread = spread.max(hi / lo - 1.0);
    }
    ok &= spread <= 0.25;

    let x1 = run_norms(&load("c9_norms_linear_x1")).map_err(err)?.rows;
    let x3 = run_norms(&load("c9_norms_linear_x3")).map_err(err)?.rows;
    let scaling = x1
        .iter()
        .zip(&x3)
        .map(|(a, b)| (b.fitted_c / a.fitted_c - 1.0).abs())
        .fold(0.0, f64::max);
    ok &= scaling <= 0.10;
    check(
        ok,
        format!(
            "finite on {} scenarios, spread over N {spread:.4}, scaling change {scaling:.2e}",
            SOLVE_SCENARIOS.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 gaussian oracle", gaussian_oracle),
        ("2 deterministic Volterra oracle", volterra_oracle),
        ("3 anticipation oracle", anticipation_oracle),
        ("4 contraction", contraction),
        ("5 uniqueness", uniqueness),
        ("6 M-solution identity and inequality", m_solution),
        ("7 comparison", comparison),
        ("8 determinism", determinism),
        ("9 a priori estimate", apriori),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
