//! Minimization run configuration, read from TOML or JSON.

use std::fs;
use std::path::Path;

use cfs_core::minimize::{Budget, Constraints, ToyFamily, VariationalProblem};
use serde::Deserialize;

use crate::error::CliError;

/// Example:
///
/// ```toml
/// family = "two-atom"
/// volume_target = 2.0
/// trace_target = 1.0
///
/// [budget]
/// proposals = 2000
/// polish_iterations = 200
/// ```
///
/// Missing targets are taken from the unprojected starting measure.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    pub family: ToyFamily,
    #[serde(default)]
    pub volume_target: Option<f64>,
    #[serde(default)]
    pub trace_target: Option<f64>,
    #[serde(default)]
    pub bound: Option<f64>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub budget: Budget,
}

impl MinimizeConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Resolves defaulted targets against the starting measure.
    pub fn problem(&self, seed: u64) -> Result<VariationalProblem, CliError> {
        let start = self.start.clone().unwrap_or_else(|| self.family.start());
        let raw = self
            .family
            .measure(&start)
            .map_err(|e| CliError::Usage(format!("start point: {e}")))?;
        let captured = Constraints::captured_from(&raw);
        Ok(VariationalProblem {
            family: self.family,
            constraints: Constraints {
                volume_target: self.volume_target.unwrap_or(captured.volume_target),
                trace_target: self.trace_target.unwrap_or(captured.trace_target),
                bound: self.bound,
            },
            seed,
            start: Some(start),
        })
    }
}
