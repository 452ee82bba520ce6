use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Settings accepted in a `--config` file. Command-line flags take
/// precedence over these, and these over built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dampings: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub snapshots: Option<Vec<usize>>,
    pub xmin: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub drop_self_loops: Option<bool>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_json(p),
            None => Ok(Self::default()),
        }
    }
}

/// Reads and parses a JSON file. I/O failures and parse failures stay
/// distinguishable in the error chain.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// First of flag, config value, default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// Repeatable flags count as given when non-empty.
pub fn pick_list<T>(flag: Vec<T>, config: Option<Vec<T>>, default: Vec<T>) -> Vec<T> {
    if !flag.is_empty() {
        flag
    } else {
        config.unwrap_or(default)
    }
}
