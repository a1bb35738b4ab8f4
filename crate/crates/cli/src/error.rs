use landau_core::Error;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: u8,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::InvalidInput(_) => "invalid-input",
                Error::UnsupportedExponent(_) => "unsupported-exponent",
                Error::NoConvergence { .. } => "no-convergence",
                Error::Bracketing { .. } => "bracketing",
                Error::SpectrumTooShort { .. } => "spectrum-too-short",
                Error::Level { .. } => "level",
                Error::Fit(_) => "fit",
                Error::EosRange { .. } => "eos-range",
                Error::PressureOutOfRange { .. } => "pressure-out-of-range",
                Error::DensityOutOfRange { .. } => "density-out-of-range",
                Error::StepUnderflow { .. } => "step-underflow",
                Error::TooManySteps(_) => "too-many-steps",
                Error::NotBracketed { .. } => "not-bracketed",
                Error::Numerical(_) => "numerical",
            },
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let code = self.exit_code();
        ErrorRecord {
            status: if code == 2 {
                "validation-error"
            } else {
                "numerical-failure"
            },
            kind: self.kind(),
            message: self.to_string(),
            exit_code: code,
        }
    }
}
