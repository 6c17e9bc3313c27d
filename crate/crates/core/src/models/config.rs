//! Declarative model configurations, read from and written to JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, NUM_FEATURES};
use crate::mlp::MlpSpec;

/// Per-district network and lag settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictParams {
    /// Own monthly lags.
    pub p: usize,
    /// Number of nearest neighbours.
    pub k: usize,
    /// Lags taken from each neighbour.
    pub q: usize,
    pub hidden_units: Vec<usize>,
    pub learning_rate: f64,
    pub l1_alpha: f64,
    pub epochs: usize,
}

impl DistrictParams {
    pub fn lag_dim(&self) -> usize {
        self.p + self.k * self.q
    }

    /// First target index that has every lag available.
    pub fn first_row(&self) -> usize {
        self.p.max(if self.k > 0 { self.q } else { 0 })
    }

    pub fn validate(&self, num_districts: usize) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidSpec("p must be at least 1".into()));
        }
        if self.k + 1 > num_districts.max(1) {
            return Err(Error::KTooLarge {
                k: self.k,
                available: num_districts.saturating_sub(1),
            });
        }
        if self.k > 0 && self.q == 0 {
            return Err(Error::InvalidSpec("q must be at least 1 when k > 0".into()));
        }
        Ok(())
    }

    pub fn mlp_spec(&self, input_dim: usize, training: &TrainingOptions, seed: u64) -> MlpSpec {
        MlpSpec {
            input_dim,
            hidden_units: self.hidden_units.clone(),
            learning_rate: self.learning_rate,
            l1_alpha: self.l1_alpha,
            epochs: self.epochs,
            batch_size: training.batch_size,
            seed,
            patience: training.patience,
            val_fraction: training.val_fraction,
            standardize_target: training.standardize_target,
        }
    }
}

/// Settings shared by every network a model trains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingOptions {
    pub batch_size: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub standardize_target: bool,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        TrainingOptions {
            batch_size: 32,
            patience: 10,
            val_fraction: 0.1,
            standardize_target: true,
        }
    }
}

/// District name → parameters, with an optional entry for unnamed districts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistrictTable {
    #[serde(default)]
    pub districts: BTreeMap<String, DistrictParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<DistrictParams>,
}

impl DistrictTable {
    pub fn uniform(params: DistrictParams) -> Self {
        DistrictTable {
            districts: BTreeMap::new(),
            default: Some(params),
        }
    }

    pub fn get(&self, district: &str) -> Result<&DistrictParams> {
        self.districts
            .get(district)
            .or(self.default.as_ref())
            .ok_or_else(|| Error::UnknownDistrict(district.to_string()))
    }

    /// Parameters for each district of `names`, in order, validated.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<DistrictParams>> {
        names
            .iter()
            .map(|n| {
                let p = self.get(n)?.clone();
                p.validate(names.len())?;
                Ok(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StlmConfig {
    #[serde(flatten)]
    pub params: DistrictTable,
    #[serde(default)]
    pub training: TrainingOptions,
    pub seed: u64,
}

/// Settings of one yearly feature type's Stage-1 regressions, shared by all districts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Params {
    pub span: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    /// Descriptor window length.
    pub window: usize,
    pub lambda: f64,
}

impl Stage1Params {
    pub fn first_row(&self) -> usize {
        self.p.max(if self.k > 0 { self.q } else { 0 }).max(1)
    }

    pub fn validate(&self, num_districts: usize) -> Result<()> {
        if self.span == 0 || self.p == 0 || self.window < 2 {
            return Err(Error::InvalidSpec("span and p must be >= 1 and the window >= 2".into()));
        }
        if self.k + 1 > num_districts.max(1) {
            return Err(Error::KTooLarge {
                k: self.k,
                available: num_districts.saturating_sub(1),
            });
        }
        if self.k > 0 && self.q == 0 {
            return Err(Error::InvalidSpec("q must be at least 1 when k > 0".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidSpec("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HstmConfig {
    pub stage1: BTreeMap<FeatureKind, Stage1Params>,
    pub stage2: DistrictTable,
    #[serde(default)]
    pub training: TrainingOptions,
    pub seed: u64,
}

impl HstmConfig {
    /// Stage-1 settings indexed by feature position; every feature must be present.
    pub fn stage1_array(&self) -> Result<[Stage1Params; NUM_FEATURES]> {
        let v: Vec<Stage1Params> = FeatureKind::ALL
            .iter()
            .map(|f| {
                self.stage1
                    .get(f)
                    .cloned()
                    .ok_or_else(|| Error::InvalidSpec(format!("no stage-1 settings for feature {f}")))
            })
            .collect::<Result<_>>()?;
        Ok(v.try_into().expect("nine features"))
    }

    pub fn spans(&self) -> Result<[usize; NUM_FEATURES]> {
        Ok(self.stage1_array()?.map(|p| p.span))
    }
}

/// Hex SHA-256 of the canonical JSON of a configuration.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let v = serde_json::to_value(cfg).expect("configs serialise");
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn params(p: usize, k: usize, q: usize) -> DistrictParams {
        DistrictParams {
            p,
            k,
            q,
            hidden_units: vec![8, 4],
            learning_rate: 1e-3,
            l1_alpha: 0.0,
            epochs: 20,
        }
    }

    #[test]
    fn dimensions_and_trim() {
        assert_eq!(params(2, 0, 5).lag_dim(), 2);
        assert_eq!(params(1, 2, 1).lag_dim(), 3);
        assert_eq!(params(2, 0, 5).first_row(), 2);
        assert_eq!(params(2, 1, 5).first_row(), 5);
    }

    #[test]
    fn validation() {
        assert!(params(0, 0, 1).validate(3).is_err());
        assert!(matches!(params(1, 3, 1).validate(3), Err(Error::KTooLarge { k: 3, available: 2 })));
        assert!(params(1, 2, 0).validate(3).is_err());
        assert!(params(1, 2, 1).validate(3).is_ok());
    }

    #[test]
    fn table_lookup_and_hash() {
        let mut t = DistrictTable::uniform(params(3, 0, 1));
        t.districts.insert("B".into(), params(5, 0, 1));
        assert_eq!(t.get("A").unwrap().p, 3);
        assert_eq!(t.get("B").unwrap().p, 5);
        let cfg = StlmConfig {
            params: t,
            training: TrainingOptions::default(),
            seed: 1,
        };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: StlmConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(config_hash(&back), config_hash(&cfg));
        assert_eq!(config_hash(&cfg).len(), 64);
        let other = StlmConfig { seed: 2, ..cfg.clone() };
        assert_ne!(config_hash(&other), config_hash(&cfg));
        assert!(DistrictTable::default().get("A").is_err());
    }
}
