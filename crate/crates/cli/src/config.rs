//! Run configuration: one JSON file, secrets referenced by environment
//! variable name only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use molcreativity::generation::{MockConfig, RemoteConfig};
use molcreativity::oracle::AdapterConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_RUNS: usize = 5;
pub const DEFAULT_BATCH: usize = 100;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Mock {
        /// SMILES file sampled by the mock; defaults to the reference set.
        #[serde(default)]
        pool: Option<PathBuf>,
        #[serde(default)]
        mock: MockConfig,
    },
    Remote(RemoteConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Mock {
            pool: None,
            mock: MockConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub tasks: Vec<String>,
    /// Extra task registry merged over the built-in one.
    #[serde(default)]
    pub registry: Option<PathBuf>,
    /// Reference corpora for novelty.
    #[serde(default)]
    pub reference: Vec<PathBuf>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub adapters: Vec<AdapterConfig>,
    /// In-context examples used for every task without a selection file.
    #[serde(default)]
    pub icl_examples: Vec<String>,
    /// Task name -> `select-icl` output file.
    #[serde(default)]
    pub icl_selections: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub batch: Option<usize>,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl Config {
    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Config = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.registry.iter_mut().for_each(fix);
        self.reference.iter_mut().for_each(fix);
        self.icl_selections.values_mut().for_each(fix);
        if let BackendConfig::Mock { pool: Some(p), .. } = &mut self.backend {
            fix(p);
        }
        for adapter in &mut self.adapters {
            // a relative script path given as an argument is resolved too
            for arg in adapter.command.iter_mut().skip(1) {
                let candidate = base.join(&*arg);
                if !Path::new(arg.as_str()).is_absolute() && arg.contains('/') && candidate.exists()
                {
                    *arg = candidate.to_string_lossy().into_owned();
                }
            }
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub batch: Option<usize>,
    pub temperature: Option<f64>,
}

/// Numeric run settings after applying overrides and defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub runs: usize,
    pub batch: usize,
    pub temperature: f64,
}

impl RunSettings {
    pub fn resolve(config: &Config, overrides: &Overrides) -> RunSettings {
        RunSettings {
            seed: overrides.seed.or(config.seed).unwrap_or(0),
            runs: overrides.runs.or(config.runs).unwrap_or(DEFAULT_RUNS),
            batch: overrides.batch.or(config.batch).unwrap_or(DEFAULT_BATCH),
            temperature: overrides
                .temperature
                .or(config.temperature)
                .unwrap_or(DEFAULT_TEMPERATURE),
        }
    }
}
