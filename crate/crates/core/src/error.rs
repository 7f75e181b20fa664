use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("commanded frequency {f_cmd} Hz outside the trackable band (1.0, 4.0]")]
    CommandRange { f_cmd: f64 },

    #[error("integration diverged at t = {t} s (leg {leg})")]
    IntegrationDiverged { t: f64, leg: usize },

    #[error("estimator used in learned mode before it was fitted")]
    NotFitted,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("no tempo found in envelope (confidence 0)")]
    NoTempo,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("music angular frequency {omega_m} rad/s cannot be folded into the gait band")]
    TempoRange { omega_m: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("curriculum failed at iteration {iteration}: {source}")]
    Curriculum {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::CommandRange { .. }
            | Error::TempoRange { .. }
            | Error::UnsupportedFormat(_)
            | Error::Json(_) => 2,
            Error::InsufficientData(_) | Error::NoTempo => 3,
            Error::Curriculum { .. } => 4,
            _ => 1,
        }
    }
}
