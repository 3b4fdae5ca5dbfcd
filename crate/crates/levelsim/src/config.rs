//! Run configuration: TOML schema with defaults matching the reference
//! system, dotted-path command-line overrides, and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mem::{CacheConfig, BLOCK_BYTES};

/// Lookup policy under simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    /// Sequential L2 -> L3 -> MEM lookup on every L1 miss.
    Baseline,
    /// LocMap + metadata cache + PLD fallback.
    Locmap,
    /// TAGE comparison predictor, 2 KiB storage budget.
    Tage2k,
    /// TAGE comparison predictor, 8 KiB storage budget.
    Tage8k,
    /// Perfect single-level prediction from the directory; upper bound.
    Oracle,
}

impl EngineMode {
    pub const ALL: [EngineMode; 5] = [
        EngineMode::Baseline,
        EngineMode::Locmap,
        EngineMode::Tage2k,
        EngineMode::Tage8k,
        EngineMode::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EngineMode::Baseline => "baseline",
            EngineMode::Locmap => "locmap",
            EngineMode::Tage2k => "tage_2k",
            EngineMode::Tage8k => "tage_8k",
            EngineMode::Oracle => "oracle",
        }
    }

    pub fn tage_budget(self) -> Option<u64> {
        match self {
            EngineMode::Tage2k => Some(2048),
            EngineMode::Tage8k => Some(8192),
            _ => None,
        }
    }
}

impl std::str::FromStr for EngineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (expected one of baseline, locmap, tage_2k, tage_8k, oracle)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencySettings {
    /// Fixed main-memory access latency in cycles.
    pub mem_fixed: u64,
    /// Added on every predicted L1 miss.
    pub predictor_cycle: u64,
    /// Interconnect hop between adjacent hierarchy levels.
    pub bus_hop: u64,
    /// Launch memory in parallel with the LLC tag/directory check when the
    /// prediction is a single MEM target.
    pub parallel_mem_launch: bool,
}

impl Default for LatencySettings {
    fn default() -> Self {
        LatencySettings {
            mem_fixed: 200,
            predictor_cycle: 1,
            bus_hop: 1,
            parallel_mem_launch: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorSettings {
    pub meta_capacity_bytes: u64,
    pub meta_assoc: u32,
    pub theta_single: f64,
    pub theta_double: f64,
    /// Cycles before a background LocMap line fetch lands in the metadata
    /// cache.
    pub metadata_fill_latency: u64,
    /// Apply prefetch-fill notifications to the backing table even on
    /// metadata-cache misses (staleness sensitivity knob).
    pub always_notify_prefetch_fills: bool,
}

impl Default for PredictorSettings {
    fn default() -> Self {
        PredictorSettings {
            meta_capacity_bytes: 2048,
            meta_assoc: 2,
            theta_single: 0.8,
            theta_double: 0.95,
            metadata_fill_latency: 200,
            always_notify_prefetch_fills: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrefetchSettings {
    pub l1_enabled: bool,
    pub l2_enabled: bool,
    pub l3_enabled: bool,
    pub l1_degree: u32,
    pub l2_degree: u32,
    pub dcpt_entries: usize,
    pub dcpt_degree: u32,
    /// Throttling epoch length in demand accesses.
    pub epoch_len: u64,
    /// Accuracy sampling window at the start of each epoch.
    pub sample_len: u64,
    /// Minimum useful/issued ratio to stay enabled past the sample window.
    pub accuracy_threshold: f64,
    /// Demand accesses an issued prefetch stays in flight (occupying an MSHR
    /// entry) before its fill lands.
    pub inflight_events: u64,
}

impl Default for PrefetchSettings {
    fn default() -> Self {
        PrefetchSettings {
            l1_enabled: true,
            l2_enabled: true,
            l3_enabled: true,
            l1_degree: 1,
            l2_degree: 2,
            dcpt_entries: 128,
            dcpt_degree: 2,
            epoch_len: 10_000_000,
            sample_len: 1_000_000,
            accuracy_threshold: 0.40,
            inflight_events: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSettings {
    /// Events after which all statistics counters are zeroed; cache and
    /// predictor state is kept.
    pub warmup_events: u64,
    /// Accesses per per-window miss-rate sample.
    pub window_len: u64,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            warmup_events: 0,
            window_len: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Simulated physical memory covered by the LocMap.
    pub phys_mem_bytes: u64,
    pub modes: Vec<EngineMode>,
    pub l1: CacheConfig,
    pub l2: CacheConfig,
    pub l3: CacheConfig,
    pub latency: LatencySettings,
    pub predictor: PredictorSettings,
    pub prefetch: PrefetchSettings,
    pub engine: EngineSettings,
    pub energy: crate::metrics::EnergyModel,
    pub effectiveness: crate::metrics::EffectivenessThresholds,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phys_mem_bytes: 1 << 30,
            modes: vec![EngineMode::Baseline, EngineMode::Locmap],
            l1: CacheConfig {
                capacity_bytes: 32 * 1024,
                associativity: 4,
                block_bytes: BLOCK_BYTES,
                tag_latency: 1,
                data_latency: 4,
                sequential_tag_data: false,
                ports: 2,
                mshr_entries: 16,
                inclusive_of_upper: false,
            },
            l2: CacheConfig {
                capacity_bytes: 256 * 1024,
                associativity: 8,
                block_bytes: BLOCK_BYTES,
                tag_latency: 3,
                data_latency: 12,
                sequential_tag_data: false,
                ports: 1,
                mshr_entries: 32,
                inclusive_of_upper: true,
            },
            l3: CacheConfig {
                capacity_bytes: 2 * 1024 * 1024,
                associativity: 16,
                block_bytes: BLOCK_BYTES,
                tag_latency: 20,
                data_latency: 35,
                sequential_tag_data: true,
                ports: 1,
                mshr_entries: 64,
                inclusive_of_upper: false,
            },
            latency: LatencySettings::default(),
            predictor: PredictorSettings::default(),
            prefetch: PrefetchSettings::default(),
            engine: EngineSettings::default(),
            energy: crate::metrics::EnergyModel::default(),
            effectiveness: crate::metrics::EffectivenessThresholds::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid override {key:?}: {msg}")]
    BadOverride { key: String, msg: String },
    #[error("invalid {field} cache config: {source}")]
    Cache {
        field: &'static str,
        source: crate::mem::CacheConfigError,
    },
    #[error("{0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig, ConfigError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses the config with `key.path=value` overrides applied on top.
    /// User-provided tables merge onto the defaults key by key, so a partial
    /// `[l1]` section or a single override leaves everything else untouched.
    pub fn from_toml_with_overrides(
        text: &str,
        overrides: &[String],
    ) -> Result<RunConfig, ConfigError> {
        let user: toml::Value = toml::from_str(text)?;
        let mut value = RunConfig::default().to_toml_value();
        deep_merge(&mut value, user);
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let cfg: RunConfig = value.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_value(&self) -> toml::Value {
        toml::Value::try_from(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, cfg) in [("l1", &self.l1), ("l2", &self.l2), ("l3", &self.l3)] {
            cfg.validate()
                .map_err(|source| ConfigError::Cache { field: name, source })?;
        }
        if self.modes.is_empty() {
            return Err(ConfigError::Invalid("modes list is empty".into()));
        }
        if self.phys_mem_bytes == 0 || self.phys_mem_bytes % BLOCK_BYTES != 0 {
            return Err(ConfigError::Invalid(format!(
                "phys_mem_bytes {} is not a positive multiple of {BLOCK_BYTES}",
                self.phys_mem_bytes
            )));
        }
        for (name, v) in [
            ("predictor.theta_single", self.predictor.theta_single),
            ("predictor.theta_double", self.predictor.theta_double),
            ("prefetch.accuracy_threshold", self.prefetch.accuracy_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.predictor.theta_single > self.predictor.theta_double {
            return Err(ConfigError::Invalid(
                "predictor.theta_single exceeds theta_double".into(),
            ));
        }
        if self.prefetch.sample_len == 0 || self.prefetch.sample_len > self.prefetch.epoch_len {
            return Err(ConfigError::Invalid(
                "prefetch.sample_len must be in 1..=epoch_len".into(),
            ));
        }
        if self.engine.window_len == 0 {
            return Err(ConfigError::Invalid("engine.window_len must be > 0".into()));
        }
        if self.predictor.meta_assoc == 0 {
            return Err(ConfigError::Invalid("predictor.meta_assoc must be > 0".into()));
        }
        Ok(())
    }
}

/// Recursively overlays `over` onto `base`; tables merge per key, scalars
/// and arrays replace.
fn deep_merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => deep_merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Applies a single `a.b.c=value` override onto a TOML tree, creating
/// intermediate tables as needed. The value is parsed as TOML; bare words
/// fall back to strings so `--set modes=["locmap"]` and
/// `--set l1.capacity_bytes=65536` both work.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<(), ConfigError> {
    let bad = |msg: &str| ConfigError::BadOverride {
        key: spec.to_string(),
        msg: msg.to_string(),
    };
    let (path, raw) = spec.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(bad("empty key path"));
    }
    let value: toml::Value = match toml::from_str::<toml::Value>(&format!("v = {}", raw.trim())) {
        Ok(toml::Value::Table(t)) => t.into_iter().next().unwrap().1,
        _ => toml::Value::String(raw.trim().to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| bad("path traverses a non-table value"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("loop returns on the last component")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_match_reference_system() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.l1.hit_latency(), 4);
        assert_eq!(cfg.l2.hit_latency(), 12);
        // Sequential LLC pays tag + data on a hit.
        assert_eq!(cfg.l3.hit_latency(), 55);
        assert_eq!(cfg.latency.mem_fixed, 200);
    }

    #[test]
    fn empty_toml_yields_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(RunConfig::from_toml_str("bogus_knob = 3").is_err());
        assert!(RunConfig::from_toml_str("[l1]\ncolor = \"red\"").is_err());
    }

    #[test]
    fn dotted_overrides() {
        let cfg = RunConfig::from_toml_with_overrides(
            "",
            &[
                "l1.capacity_bytes=65536".into(),
                "latency.mem_fixed=150".into(),
                "modes=[\"oracle\"]".into(),
                "prefetch.l3_enabled=false".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.l1.capacity_bytes, 65536);
        assert_eq!(cfg.latency.mem_fixed, 150);
        assert_eq!(cfg.modes, vec![EngineMode::Oracle]);
        assert!(!cfg.prefetch.l3_enabled);
    }

    #[test]
    fn override_validation_still_applies() {
        // 3-set geometry is rejected after the override lands.
        assert!(RunConfig::from_toml_with_overrides("", &["l1.capacity_bytes=768".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides("", &["modes=[]".into()]).is_err());
    }

    #[test]
    fn bad_override_reports_key() {
        let err = RunConfig::from_toml_with_overrides("", &["l1".into()]).unwrap_err();
        assert!(matches!(err, ConfigError::BadOverride { .. }));
    }

    #[test]
    fn theta_ordering_enforced() {
        let cfg = RunConfig::from_toml_with_overrides(
            "",
            &["predictor.theta_single=0.99".into(), "predictor.theta_double=0.5".into()],
        );
        assert!(cfg.is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("tage_8k".parse::<EngineMode>().unwrap(), EngineMode::Tage8k);
        assert!("tage".parse::<EngineMode>().is_err());
    }
}
