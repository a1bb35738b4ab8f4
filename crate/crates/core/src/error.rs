use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
///
/// Variants are split into input-validation problems and numerical failures
/// so that front ends can map them onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field exponent n = {0} is outside the supported range n > -1")]
    UnsupportedExponent(f64),

    #[error(
        "eigenvalue for level {level} did not converge after {iterations} iterations \
         (bracket [{lo}, {hi}])"
    )]
    NoConvergence {
        level: u32,
        iterations: usize,
        lo: f64,
        hi: f64,
    },

    #[error("could not bracket level {level}: {reason}")]
    Bracketing { level: u32, reason: String },

    #[error("level spectrum too short: need levels up to alpha = {needed_alpha} for spin {spin}")]
    SpectrumTooShort { spin: i8, needed_alpha: f64 },

    #[error("solver failure at level {level} (spin {spin}): {source}")]
    Level {
        level: u32,
        spin: i8,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("equation of state exhausted at r = {radius_km} km: {reason}")]
    EosRange { radius_km: f64, reason: String },

    #[error("pressure {pressure} outside table range [{min}, {max}]")]
    PressureOutOfRange { pressure: f64, min: f64, max: f64 },

    #[error("density {density} outside table range [{min}, {max}]")]
    DensityOutOfRange { density: f64, min: f64, max: f64 },

    #[error("integration step underflow at t = {at}")]
    StepUnderflow { at: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::UnsupportedExponent(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
