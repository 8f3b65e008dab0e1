use thiserror::Error;

pub type Result<T> = std::result::Result<T, KobaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KobaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain has empty interior: no strictly interior witness found")]
    EmptyInterior,

    #[error("metric degenerate along v (complex line of infinite extent)")]
    DegenerateMetric,

    #[error("path exits domain at segment {segment}")]
    PathExitsDomain { segment: usize },

    #[error("unsupported for this domain kind: {0}")]
    Unsupported(String),

    #[error("iterate escaped the domain at step {step}")]
    EscapedDomain { step: usize },

    #[error("undecided, {0}")]
    Undecided(String),

    #[error("start-dependence detected: {0}")]
    StartDependence(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        source: Box<KobaError>,
    },
}

impl KobaError {
    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        KobaError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &KobaError {
        match self {
            KobaError::Context { source, .. } => source.root(),
            e => e,
        }
    }

    /// Input or contract violations, as opposed to numerical outcomes.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            KobaError::DimensionMismatch { .. }
                | KobaError::InvalidInput(_)
                | KobaError::EmptyInterior
                | KobaError::Unsupported(_)
        )
    }
}
