//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! mode = "solve"
//!
//! [grid]
//! T = 1.0
//! K = 0.0
//! N = 16
//!
//! [generator]
//! name = "zero"
//!
//! [free_term]
//! name = "brownian"
//!
//! [basis]
//! degree = 1
//!
//! [monte_carlo]
//! paths = 4096
//! seed = 7
//!
//! [oracle]
//! kind = "gaussian"
//! ```
//!
//! Unknown keys are rejected. Registry names and parameter names are checked
//! when the experiment is built.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use absvie_core::{GeneratorSpec, Params};
use serde::Deserialize;

use crate::error::{Result, RunError};

/// Upper limits that keep a run at desk scale.
pub const MAX_STEPS: usize = 64;
pub const MAX_PATHS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Compare,
    Convergence,
    Norms,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Compare => "compare",
            Mode::Convergence => "convergence",
            Mode::Norms => "norms",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub grid: GridConfig,
    #[serde(default)]
    pub delays: DelayConfig,
    #[serde(default)]
    pub generator: NamedConfig,
    pub free_term: NamedConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub oracle: Option<OracleConfig>,
    pub convergence: Option<ConvergenceConfig>,
    pub compare: Option<CompareConfig>,
    pub norms: Option<NormsConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K", default)]
    pub span: f64,
    #[serde(rename = "N")]
    pub steps: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub zeta: f64,
}

/// A registry entry: generator or free term.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl Default for NamedConfig {
    fn default() -> Self {
        Self {
            name: "zero".into(),
            params: BTreeMap::new(),
        }
    }
}

impl NamedConfig {
    pub fn params(&self) -> Params {
        let mut p = Params::new();
        for (k, v) in &self.params {
            p.insert(k, *v);
        }
        p
    }

    pub fn generator(&self) -> Result<GeneratorSpec> {
        Ok(GeneratorSpec::from_registry(&self.name, self.params())?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            degree: default_degree(),
            ridge: default_ridge(),
        }
    }
}

fn default_degree() -> usize {
    2
}

fn default_ridge() -> f64 {
    absvie_core::regression::DEFAULT_RIDGE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    #[default]
    Zero,
    FreeTerm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Defaults to `16 / (T + K)`.
    pub beta: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub initial: InitialConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: None,
            tol: default_tol(),
            max_iter: default_max_iter(),
            initial: InitialConfig::Zero,
        }
    }
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50
}

/// Reference used for the error columns of `solve` and `convergence`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    /// `Y(t) = h(t) W(t)` for the `brownian` free term with `g ≡ 0`.
    Gaussian,
    /// Deterministic Volterra equation with unit kernel, coefficient
    /// `lambda` on `Y(s + δ)` and the `constant` free term.
    Volterra {
        lambda: f64,
        /// Defaults to 8 times the largest solver `N`.
        fine_steps: Option<usize>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub seeds: Vec<u64>,
    /// `ψ⁰ = ψ̄ + lower_shift`.
    #[serde(default)]
    pub lower_shift: f64,
    /// `ψ¹ = ψ̄ + upper_shift`.
    #[serde(default)]
    pub upper_shift: f64,
    pub gen0: NamedConfig,
    pub gen1: NamedConfig,
    /// The middle equation uses the top-level `generator`.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_max() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub betas: Vec<f64>,
    #[serde(default = "default_regions")]
    pub regions: Vec<String>,
}

fn default_regions() -> Vec<String> {
    absvie_core::Region::ALL
        .iter()
        .map(|r| r.name().to_string())
        .collect()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File name inside the output directory; defaults to `<mode>.csv`.
    pub file: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| RunError::ConfigParse(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            RunError::ConfigParse(msg) => {
                RunError::ConfigParse(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    pub fn beta(&self) -> f64 {
        self.solver
            .beta
            .unwrap_or(16.0 / (self.grid.horizon + self.grid.span))
    }

    pub fn output_file(&self, mode: Mode) -> String {
        self.output
            .file
            .clone()
            .unwrap_or_else(|| format!("{mode}.csv"))
    }

    /// Checks that the config can run in `mode`. Registry names are checked
    /// separately when the experiment is built.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let bad = |msg: String| Err(RunError::ConfigParse(msg));
        if let Some(m) = self.mode {
            if m != mode {
                return bad(format!(
                    "mode: config is for `{m}` but `{mode}` was requested"
                ));
            }
        }
        if self.grid.steps > MAX_STEPS {
            return bad(format!(
                "grid.N: {} exceeds the limit {MAX_STEPS}",
                self.grid.steps
            ));
        }
        if self.monte_carlo.paths == 0 || self.monte_carlo.paths > MAX_PATHS {
            return bad(format!("monte_carlo.paths: must be in 1..={MAX_PATHS}"));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver: need tol > 0 and max_iter >= 1".into());
        }
        if !(self.beta() >= 0.0) {
            return bad("solver.beta: must be non-negative".into());
        }
        if !(self.basis.ridge >= 0.0) {
            return bad("basis.ridge: must be non-negative".into());
        }
        match mode {
            Mode::Solve => {}
            Mode::Convergence => {
                let Some(c) = &self.convergence else {
                    return bad("convergence: missing section".into());
                };
                if c.steps.len() < 2 || c.steps.iter().any(|&n| n == 0 || n > MAX_STEPS) {
                    return bad(format!(
                        "convergence.steps: need at least two values in 1..={MAX_STEPS}"
                    ));
                }
                if !matches!(self.oracle, Some(OracleConfig::Volterra { .. })) {
                    return bad("oracle: convergence needs kind = \"volterra\"".into());
                }
            }
            Mode::Compare => {
                let Some(c) = &self.compare else {
                    return bad("compare: missing section".into());
                };
                if c.seeds.is_empty() {
                    return bad("compare.seeds: must not be empty".into());
                }
                if c.lower_shift > c.upper_shift {
                    return bad("compare: lower_shift exceeds upper_shift".into());
                }
            }
            Mode::Norms => {
                let Some(n) = &self.norms else {
                    return bad("norms: missing section".into());
                };
                if n.betas.is_empty() || n.betas.iter().any(|b| !(*b >= 0.0)) {
                    return bad("norms.betas: need non-negative values".into());
                }
                for r in &n.regions {
                    region_by_name(r)?;
                }
            }
        }
        Ok(())
    }
}

pub fn region_by_name(name: &str) -> Result<absvie_core::Region> {
    absvie_core::Region::ALL
        .iter()
        .copied()
        .find(|r| r.name() == name)
        .ok_or_else(|| RunError::ConfigParse(format!("norms.regions: unknown region `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
T = 1
N = 8

[free_term]
name = "constant"
params = { c = 1.0 }

[monte_carlo]
paths = 64
seed = 1
"#;

    #[test]
    fn defaults_fill_optional_sections() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grid.horizon, 1.0);
        assert_eq!(c.grid.span, 0.0);
        assert_eq!(c.generator.name, "zero");
        assert_eq!(c.basis.degree, 2);
        assert_eq!(c.solver.tol, 1e-8);
        assert_eq!(c.beta(), 16.0);
        assert_eq!(c.output_file(Mode::Solve), "solve.csv");
        c.validate(Mode::Solve).unwrap();
    }

    #[test]
    fn missing_horizon_names_the_field() {
        let text = MINIMAL.replace("T = 1\n", "");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`T`"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = MINIMAL.replace("N = 8", "N = = 8");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[solver]\ntoll = 1e-6\n");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn mode_mismatch_and_missing_sections() {
        let c = ExperimentConfig::parse(&format!("mode = \"solve\"\n{MINIMAL}")).unwrap();
        assert!(c.validate(Mode::Norms).is_err());
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert!(c.validate(Mode::Compare).is_err());
        assert!(c.validate(Mode::Convergence).is_err());
    }

    #[test]
    fn oracle_sections() {
        let c = ExperimentConfig::parse(&format!(
            "{MINIMAL}\n[oracle]\nkind = \"volterra\"\nlambda = 1.0\n"
        ))
        .unwrap();
        assert!(matches!(
            c.oracle,
            Some(OracleConfig::Volterra { lambda, fine_steps: None }) if lambda == 1.0
        ));
    }

    #[test]
    fn desk_scale_limits() {
        let text = MINIMAL.replace("paths = 64", "paths = 100000");
        let c = ExperimentConfig::parse(&text).unwrap();
        assert!(c.validate(Mode::Solve).is_err());
    }
}
