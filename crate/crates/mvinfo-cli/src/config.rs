//! Experiment configuration file schema, config hashing and report IO.

use mvinfo::error::{Error, Result};
use mvinfo::objectives::ObjectiveConfig;
use mvinfo::synth::{ContinuousSpec, DiscreteSystemSpec};
use mvinfo::trainer::Schedule;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which generator the experiment draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DataSpec {
    Continuous {
        #[serde(flatten)]
        spec: ContinuousSpec,
    },
    Discrete {
        #[serde(flatten)]
        spec: DiscreteSystemSpec,
    },
}

/// One experiment: objective constants, data source, schedule, encoder
/// architecture, seed list and output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub objective: ObjectiveConfig,
    pub data: DataSpec,
    #[serde(flatten)]
    pub schedule: Schedule,
    pub encoder_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub out_dir: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must be nonempty".into()));
        }
        if self.encoder_sizes.len() < 2 {
            return Err(Error::Config(
                "encoder_sizes needs at least input and output".into(),
            ));
        }
        match &self.data {
            DataSpec::Continuous { spec } => spec.validate(),
            DataSpec::Discrete { spec } => spec.validate(),
        }
    }

    pub fn continuous_spec(&self) -> Result<&ContinuousSpec> {
        match &self.data {
            DataSpec::Continuous { spec } => Ok(spec),
            DataSpec::Discrete { .. } => Err(Error::Config(
                "this command needs a continuous data spec".into(),
            )),
        }
    }

    /// FNV-1a 64 over the canonicalized (sorted-key, compact) JSON form.
    pub fn hash(&self) -> Result<u64> {
        let value = serde_json::to_value(self)?;
        let canonical = serde_json::to_string(&value)?;
        Ok(fnv1a64(canonical.as_bytes()))
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize a report with the timestamp confined to a "meta" field, so
/// consumers can compare everything else byte for byte.
pub fn write_report(path: &Path, mut body: serde_json::Value) -> Result<()> {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let obj = body.as_object_mut().expect("report body is a JSON object");
    let meta = obj
        .entry("meta")
        .or_insert_with(|| serde_json::json!({}));
    meta.as_object_mut()
        .expect("meta is a JSON object")
        .insert("generated_at_unix".into(), serde_json::json!(now));
    let text = serde_json::to_string_pretty(&body)? + "\n";
    atomic_write(path, text.as_bytes())
}

/// Worker count: MVINFO_THREADS if set, else machine parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var("MVINFO_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
