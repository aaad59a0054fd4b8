use std::fs;
use std::path::{Path, PathBuf};

use pavenet::agent::TrainingConfig;
use pavenet::netgen::GeneratorConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// Network file used when `--network` is not given.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub strategies: Vec<String>,
    pub runs: usize,
    pub gammas: Vec<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            strategies: vec![
                "worst_first".into(),
                "progressive_lp".into(),
                "dql".into(),
                "hybrid".into(),
            ],
            runs: 1,
            gammas: vec![1.0, 0.9, 0.7, 0.5, 0.3, 0.1],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub network: NetworkSection,
    pub generator: GeneratorConfig,
    pub training: TrainingConfig,
    pub experiment: ExperimentSection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Defaults when no path is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, String> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
