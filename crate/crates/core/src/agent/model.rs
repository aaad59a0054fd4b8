//! Trained model bundle: the three online networks, the feature
//! normalisers they were trained with, and a JSON manifest.
//!
//! Bundle directory layout: `q.pvnw`, `policy.pvnw`, `value.pvnw`,
//! `manifest.json`. The directory is assembled under a temporary name and
//! renamed into place.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use super::episode::greedy_plan;
use super::features::FeatureScales;
use crate::error::{Error, Result};
use crate::io::sibling_tmp;
use crate::network::{NetworkState, Trajectory};
use crate::nn::{load_weights, save_weights};
use crate::plan::MaintenancePlan;
use crate::Net;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub q: Net,
    pub policy: Net,
    pub value: Net,
    pub scales: FeatureScales,
    pub config: TrainingConfig,
}

const MODEL_FORMAT: &str = "pavenet-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: TrainingConfig,
    pub scales: FeatureScales,
    /// Free-form provenance (command line, network digest, ...).
    #[serde(default)]
    pub notes: serde_json::Value,
}

impl TrainedModel {
    pub fn greedy_plan(&self, network: &NetworkState) -> Result<(MaintenancePlan, Trajectory)> {
        greedy_plan(&self.q, self.scales, network)
    }

    pub fn save(&self, dir: impl AsRef<Path>, notes: serde_json::Value) -> Result<()> {
        self.save_with_files(dir, notes, &[])
    }

    /// Like [`save`](Self::save), with `extra` files (name, contents)
    /// placed in the bundle before it is renamed into place.
    pub fn save_with_files(
        &self,
        dir: impl AsRef<Path>,
        notes: serde_json::Value,
        extra: &[(&str, &[u8])],
    ) -> Result<()> {
        let dir = dir.as_ref();
        let tmp = sibling_tmp(dir);
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        save_weights(&self.q, tmp.join("q.pvnw"))?;
        save_weights(&self.policy, tmp.join("policy.pvnw"))?;
        save_weights(&self.value, tmp.join("value.pvnw"))?;
        let manifest = Manifest {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            seed: self.config.seed,
            config: self.config.clone(),
            scales: self.scales,
            notes,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let mpath = tmp.join("manifest.json");
        fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))?;
        for (name, bytes) in extra {
            let p = tmp.join(name);
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        }
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mpath = dir.join("manifest.json");
        let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&mpath, e))?;
        if manifest.format != MODEL_FORMAT || manifest.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!(
                "{}: unsupported model bundle {} v{}",
                mpath.display(),
                manifest.format,
                manifest.version
            )));
        }
        Ok(Self {
            q: load_weights(dir.join("q.pvnw"))?,
            policy: load_weights(dir.join("policy.pvnw"))?,
            value: load_weights(dir.join("value.pvnw"))?,
            scales: manifest.scales,
            config: manifest.config,
        })
    }
}
