use thiserror::Error;

pub type Result<T> = std::result::Result<T, AuditError>;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("logistic fit did not converge within {iterations} iterations (epsilon={epsilon}, c={c})")]
    NonConvergence { epsilon: f64, c: f64, iterations: usize },

    #[error("hessian is singular; increase regularization")]
    SingularHessian,

    #[error("projected gradient ascent diverged (step size {step}); try a smaller step")]
    PgaDiverged { step: f64 },

    #[error("k policy does not cover epsilon {0}")]
    UncoveredEpsilon(f64),

    #[error("summary dimension {got} does not match the audit's dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("delta > 0 estimation is not supported; disable the delta split")]
    DeltaUnsupported,

    #[error("sample {index} ({phase}, {arm}) failed: {source}")]
    SampleFailed {
        index: u64,
        phase: &'static str,
        arm: &'static str,
        #[source]
        source: Box<AuditError>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<AuditError>,
    },

    #[error("{path}: {message}")]
    Data { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AuditError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AuditError::InvalidInput(msg.into())
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(AuditError) -> AuditError {
        move |e| AuditError::Stage {
            stage,
            source: Box::new(e),
        }
    }
}
