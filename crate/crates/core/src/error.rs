use alloc::string::String;

/// Errors raised by the grid, regression and solver layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid horizon: T = {horizon}, N = {steps} (need T > 0 and N >= 1)")]
    InvalidHorizon { horizon: f64, steps: usize },
    #[error("anticipation span K = {span} is not a non-negative multiple of the step {step}")]
    NonAlignedK { span: f64, step: f64 },
    #[error("delay {delay} is not a non-negative multiple of the step {step}")]
    NonAlignedDelay { delay: f64, step: f64 },
    #[error("delay maps node {node} to node {target}, past T + K (last node {last})")]
    DelayExceedsHorizon {
        node: usize,
        target: usize,
        last: usize,
    },
    #[error("invalid delay map: {0}")]
    InvalidDelayMap(String),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("singular regression at node {node} (condition number {condition:e})")]
    SingularRegression { node: usize, condition: f64 },
    #[error("cell ({row}, {col}) is not populated")]
    MissingCell { row: usize, col: usize },
    #[error("Picard iteration did not converge in {iterations} iterations (last ratio {ratio})")]
    NoConvergence { iterations: usize, ratio: f64 },
    #[error("comparison scenario invalid: {0}")]
    ScenarioInvalid(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("unknown free term `{0}`")]
    UnknownFreeTerm(String),
    #[error("unknown parameter `{param}` for `{name}`")]
    UnknownParameter { name: String, param: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    /// Stable identifier used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidHorizon { .. } => "InvalidHorizon",
            Error::NonAlignedK { .. } => "NonAlignedK",
            Error::NonAlignedDelay { .. } => "NonAlignedDelay",
            Error::DelayExceedsHorizon { .. } => "DelayExceedsHorizon",
            Error::InvalidDelayMap(_) => "InvalidDelayMap",
            Error::InvalidEnsemble(_) => "InvalidEnsemble",
            Error::SingularRegression { .. } => "SingularRegression",
            Error::MissingCell { .. } => "MissingCell",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ScenarioInvalid(_) => "ScenarioInvalid",
            Error::UnknownGenerator(_) => "UnknownGenerator",
            Error::UnknownFreeTerm(_) => "UnknownFreeTerm",
            Error::UnknownParameter { .. } => "UnknownParameter",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DimensionMismatch(_) => "DimensionMismatch",
        }
    }

    /// Whether the error comes from invalid input rather than from a solve.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidHorizon { .. }
                | Error::NonAlignedK { .. }
                | Error::NonAlignedDelay { .. }
                | Error::DelayExceedsHorizon { .. }
                | Error::InvalidDelayMap(_)
                | Error::InvalidEnsemble(_)
                | Error::ScenarioInvalid(_)
                | Error::UnknownGenerator(_)
                | Error::UnknownFreeTerm(_)
                | Error::UnknownParameter { .. }
                | Error::InvalidParameter(_)
                | Error::DimensionMismatch(_)
        )
    }
}
