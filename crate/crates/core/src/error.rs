use crate::params::Violation;

#[derive(Debug, thiserror::Error)]
pub enum GateError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("task {0} cannot be automated at the current frontier")]
    InfeasibleTask(f64),
    #[error("belief update eliminated every candidate")]
    InconsistentBeliefs,
    #[error("invalid parameters: {}", fmt_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite objective at iteration {iteration}: {detail}")]
    NonFinite { iteration: usize, detail: String },
    #[error("degenerate calibration: initial output is zero")]
    DegenerateCalibration,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, GateError>;
