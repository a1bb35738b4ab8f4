//! JSON run configuration; command-line flags override file values.

use std::path::{Path, PathBuf};

use landau_core::dispersion::FitPlan;
use landau_core::eos::EosConfig;
use landau_core::qspeed::SpinorConvention;
use landau_core::stellar::StellarConfig;
use landau_core::{PhysicalConstants, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Power-law field parameters; any may be left to flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldBlock {
    pub n: Option<f64>,
    /// G pm^-n.
    pub b0: Option<f64>,
    /// pm.
    pub rho0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QspeedBlock {
    pub convention: SpinorConvention,
    pub exponents: Vec<f64>,
    /// G pm^-n.
    pub b0: f64,
}

impl Default for QspeedBlock {
    fn default() -> Self {
        Self {
            convention: SpinorConvention::Dirac,
            exponents: (-8..=20).map(|i| f64::from(i) / 10.0).collect(),
            b0: 1.0e16,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub solver: SolverConfig,
    pub field: FieldBlock,
    pub fit: FitPlan,
    pub eos: EosConfig,
    pub stellar: Option<StellarConfig>,
    pub qspeed: QspeedBlock,
    pub output_dir: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
