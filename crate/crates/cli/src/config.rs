//! TOML experiment files. Every field is optional; command-line flags take
//! precedence over whatever the file provides.

use std::path::{Path, PathBuf};

use mixren::exchangeable::ModelSpec;
use mixren::renewal::uniform_grid;
use serde::Deserialize;

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub workflow: Option<String>,
    pub seed: Option<u64>,
    pub model: Option<ModelSpec>,
    pub lengths: Option<Vec<usize>>,
    pub grid: Option<GridSpec>,
    pub replicates: Option<usize>,
    pub m_range: Option<[u32; 2]>,
    #[serde(default)]
    pub tolerance: Tolerances,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub series: Option<f64>,
    pub dp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    /// Parses `start:stop:step`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got '{s}'"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad grid number '{p}': {e}"));
        Ok(Self { start: num(parts[0])?, stop: num(parts[1])?, step: num(parts[2])? })
    }

    pub fn points(&self) -> CliResult<Vec<f64>> {
        uniform_grid(self.start, self.stop, self.step).map_err(CliError::from)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }
}
