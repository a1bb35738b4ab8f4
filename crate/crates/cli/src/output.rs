use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

/// One output file, available as CSV text and as a JSON value.
pub struct Artifact {
    pub stem: String,
    pub csv: String,
    pub json: serde_json::Value,
}

impl Artifact {
    pub fn new(stem: &str, csv: String, data: &impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            stem: stem.to_string(),
            csv,
            json: serde_json::to_value(data).map_err(|e| CliError::Io(e.to_string()))?,
        })
    }

    fn render(&self, format: Format) -> Result<(String, String), CliError> {
        Ok(match format {
            Format::Csv => (format!("{}.csv", self.stem), self.csv.clone()),
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&self.json).map_err(|e| CliError::Io(e.to_string()))?;
                text.push('\n');
                (format!("{}.json", self.stem), text)
            }
        })
    }
}

/// Write every artifact into `dir`, or print them to stdout when no directory
/// is given (each preceded by a `# file` line when there are several).
pub fn emit(artifacts: &[Artifact], format: Format, dir: Option<&Path>) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for a in artifacts {
                let (name, text) = a.render(format)?;
                let path = dir.join(&name);
                std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
        }
        None => {
            for a in artifacts {
                let (name, text) = a.render(format)?;
                if artifacts.len() > 1 {
                    println!("# {name}");
                }
                print!("{text}");
            }
        }
    }
    Ok(())
}

/// A single pass/fail comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Relative comparison `|value / reference - 1| <= tolerance`.
    pub fn relative(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: Some(reference),
            tolerance: Some(tolerance),
            pass: (value / reference - 1.0).abs() <= tolerance,
        }
    }

    pub fn absolute(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: Some(reference),
            tolerance: Some(tolerance),
            pass: (value - reference).abs() <= tolerance,
        }
    }

    pub fn condition(name: impl Into<String>, value: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            reference: None,
            tolerance: None,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub target: String,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl Report {
    pub fn new(target: &str, checks: Vec<Check>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        Self {
            target: target.to_string(),
            checks,
            all_pass,
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        let mut out = String::from("check,value,reference,tolerance,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{:e},{},{},{}\n",
                c.name,
                c.value,
                opt(c.reference),
                opt(c.tolerance),
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }

    pub fn artifact(&self) -> Result<Artifact, CliError> {
        Artifact::new(&format!("{}_report", self.target), self.to_csv(), self)
    }
}
