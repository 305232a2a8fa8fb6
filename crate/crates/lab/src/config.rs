//! Experiment configuration.
//!
//! Configurations are TOML documents. Rotation numbers are written as
//! decimal strings (snapped to the nearest multiple of `2^-64`) or as exact
//! dyadic strings `"<int>/2^<k>"`; serialisation always emits the dyadic form,
//! so a parsed configuration survives a write/read cycle unchanged.

use std::fmt;
use std::path::{Path, PathBuf};

use heislab::cocycle::BaseFunctionSpec;
use heislab::dynamics::{JoiningSystem, SkewSystem};
use heislab::heisenberg::PrimePair;
use heislab::moebius::{MAX_SIEVE_BOUND, is_prime};
use heislab::observables::Observable;
use heislab::orbit::OrbitSegmentPlan;
use heislab::Fixed;
use serde::{Deserialize, Serialize};

/// The standard configuration shipped with the crate.
pub const STANDARD_CONFIG: &str = include_str!("../configs/standard.toml");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub alpha: Fixed,
    pub beta: Fixed,
    pub h: BaseFunctionSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoiningConfig {
    pub p: u64,
    pub q: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointConfig {
    pub correlation: Vec<u64>,
    pub bilinear: Vec<u64>,
    pub weyl: Vec<u64>,
    pub davenport: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SieveConfig {
    pub bound: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub segment_size: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylConfig {
    /// Frequencies `k` with `max |k_i| <= max_frequency`.
    pub max_frequency: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoboundaryConfig {
    pub k: i64,
    pub cutoff: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub k: i64,
    /// Iterate count used for the boundary-increment example.
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemConfig,
    pub joining: JoiningConfig,
    pub observable: Observable,
    pub checkpoints: CheckpointConfig,
    pub sieve: SieveConfig,
    pub plan: PlanConfig,
    pub weyl: WeylConfig,
    pub coboundary: CoboundaryConfig,
    pub constants: ConstantsConfig,
    pub output: OutputConfig,
}

fn check_list(field: &str, list: &[u64]) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(ConfigError::new(field, "at least one checkpoint is required"));
    }
    if list[0] == 0 || list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::new(field, "checkpoints must be positive and strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses and validates a TOML document. Syntax errors carry the line and
    /// column reported by the TOML parser.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn standard() -> Self {
        Self::parse(STANDARD_CONFIG).expect("shipped standard config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    /// Checks every cross-field precondition of the experiments.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system
            .h
            .validate()
            .map_err(|e| ConfigError::new("system.h", e.to_string()))?;
        let JoiningConfig { p, q } = self.joining;
        if !(is_prime(p) && is_prime(q) && p > q) {
            return Err(ConfigError::new("joining", format!("need primes p > q, got p = {p}, q = {q}")));
        }
        PrimePair::new(p, q).map_err(|e| ConfigError::new("joining", e.to_string()))?;
        self.observable
            .validate()
            .map_err(|e| ConfigError::new("observable", e.to_string()))?;
        let cps = &self.checkpoints;
        check_list("checkpoints.correlation", &cps.correlation)?;
        check_list("checkpoints.bilinear", &cps.bilinear)?;
        check_list("checkpoints.weyl", &cps.weyl)?;
        check_list("checkpoints.davenport", &cps.davenport)?;
        if !(1..=MAX_SIEVE_BOUND).contains(&self.sieve.bound) {
            return Err(ConfigError::new("sieve.bound", "must lie in 1 ..= 1000000000"));
        }
        for (field, list) in [
            ("checkpoints.correlation", &cps.correlation),
            ("checkpoints.davenport", &cps.davenport),
        ] {
            let last = *list.last().unwrap();
            if last > self.sieve.bound {
                return Err(ConfigError::new(
                    field,
                    format!("checkpoint {last} exceeds sieve.bound = {}", self.sieve.bound),
                ));
            }
        }
        OrbitSegmentPlan::new(self.plan.segment_size, self.plan.workers)
            .map_err(|e| ConfigError::new("plan", e.to_string()))?;
        if !(1..=8).contains(&self.weyl.max_frequency) {
            return Err(ConfigError::new("weyl.max_frequency", "must lie in 1 ..= 8"));
        }
        if self.coboundary.k < 1 || self.coboundary.cutoff < 1 {
            return Err(ConfigError::new("coboundary", "k and cutoff must be at least 1"));
        }
        if self.constants.k < 1 || self.constants.n < 1 {
            return Err(ConfigError::new("constants", "k and n must be at least 1"));
        }
        Ok(())
    }

    pub fn skew_system(&self) -> SkewSystem {
        SkewSystem::new(self.system.alpha, self.system.beta, self.system.h.clone()).expect("validated")
    }

    pub fn primes(&self) -> PrimePair {
        PrimePair::new(self.joining.p, self.joining.q).expect("validated")
    }

    pub fn joining_system(&self) -> JoiningSystem {
        JoiningSystem::new(self.skew_system(), self.primes())
    }

    pub fn plan(&self) -> OrbitSegmentPlan {
        OrbitSegmentPlan::new(self.plan.segment_size, self.plan.workers).expect("validated")
    }

    /// Replaces every checkpoint list.
    pub fn set_all_checkpoints(&mut self, list: &[u64]) {
        let cps = &mut self.checkpoints;
        for slot in [&mut cps.correlation, &mut cps.bilinear, &mut cps.weyl, &mut cps.davenport] {
            *slot = list.to_vec();
        }
    }

    /// Canonical TOML of the settings that determine experiment results.
    /// Output location and worker count are excluded: neither changes any
    /// emitted number.
    pub fn canonical_for_hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        c.plan.workers = 1;
        c.to_toml()
    }
}

/// Parses a positive count written as an integer, `1e6` or `2^16`.
pub fn parse_count(t: &str) -> Result<u64, String> {
    let t = t.trim().replace('_', "");
    if let Some(k) = t.strip_prefix("2^") {
        let k: u32 = k.parse().map_err(|_| format!("bad exponent in {t:?}"))?;
        return 1u64.checked_shl(k).filter(|_| k < 64).ok_or_else(|| format!("{t:?} is too large"));
    }
    if let Some((m, e)) = t.split_once(['e', 'E']) {
        let m: u64 = m.parse().map_err(|_| format!("bad mantissa in {t:?}"))?;
        let e: u32 = e.parse().map_err(|_| format!("bad exponent in {t:?}"))?;
        return 10u64
            .checked_pow(e)
            .and_then(|p| p.checked_mul(m))
            .ok_or_else(|| format!("{t:?} is too large"));
    }
    t.parse().map_err(|_| format!("not a count: {t:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_config_round_trips() {
        let cfg = ExperimentConfig::standard();
        let text = cfg.to_toml();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn standard_values() {
        let cfg = ExperimentConfig::standard();
        assert!((cfg.system.alpha.to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((cfg.system.beta.to_f64() - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!((cfg.joining.p, cfg.joining.q), (3, 2));
        assert_eq!(cfg.observable.xi(), 1);
        assert_eq!(*cfg.checkpoints.correlation.last().unwrap(), 10_000_000);
    }

    #[test]
    fn checkpoint_beyond_sieve_bound_is_rejected() {
        let mut cfg = ExperimentConfig::standard();
        cfg.sieve.bound = 1_000_000;
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.field, "checkpoints.correlation");
        assert!(err.to_string().contains("exceeds sieve.bound"));
    }

    #[test]
    fn syntax_errors_report_location() {
        let text = STANDARD_CONFIG.replacen("seed =", "seed = = ", 1);
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.message.contains("line"), "{err}");
        let text = STANDARD_CONFIG.replacen("[joining]", "[joining]\nr = 5", 1);
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.message.contains('r'), "{err}");
    }

    #[test]
    fn bad_primes_rejected() {
        let text = STANDARD_CONFIG.replacen("p = 3", "p = 4", 1);
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.field, "joining");
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("2^16"), Ok(65536));
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("10_000"), Ok(10_000));
        assert!(parse_count("2^64").is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = ExperimentConfig::standard();
        let mut b = a.clone();
        b.plan.workers = 8;
        b.output.dir = "elsewhere".into();
        assert_eq!(a.canonical_for_hash(), b.canonical_for_hash());
    }
}
