//! Run manifests: what was run, from which configuration, and which files
//! it produced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A soft diagnostic: a recorded value next to the threshold it is expected
/// to respect. A miss flags the run for investigation; it is not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub within: bool,
}

impl Diagnostic {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Diagnostic {
            name: name.to_string(),
            value,
            threshold,
            within: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Diagnostic {
            name: name.to_string(),
            value,
            threshold,
            within: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    pub started: String,
    pub finished: String,
    pub workers: usize,
    /// Files written per command, relative to the output directory.
    pub files: BTreeMap<String, Vec<String>>,
    pub diagnostics: Vec<Diagnostic>,
}

/// SHA-256 of the canonical configuration text.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_for_hash().as_bytes()))
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, workers: usize) -> Self {
        RunManifest {
            config_hash: config_hash(cfg),
            artifact_version: ARTIFACT_VERSION.to_string(),
            started: timestamp(),
            finished: String::new(),
            workers,
            files: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn record(&mut self, command: &str, files: impl IntoIterator<Item = String>) {
        self.files.entry(command.to_string()).or_default().extend(files);
    }

    pub fn all_files(&self) -> Vec<&str> {
        self.files.values().flatten().map(String::as_str).collect()
    }

    pub fn finish(&mut self) {
        self.finished = timestamp();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        let cfg = ExperimentConfig::standard();
        let h = config_hash(&cfg);
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&ExperimentConfig::standard()));
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(h, config_hash(&other));
    }

    #[test]
    fn diagnostics_compare_against_threshold() {
        assert!(Diagnostic::at_most("x", 0.01, 0.05).within);
        assert!(!Diagnostic::at_most("x", 0.06, 0.05).within);
        assert!(Diagnostic::at_least("y", 0.2, 0.1).within);
    }
}
