//! Seeded random search over finite configuration grids, sampling without replacement.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::cv::CvOutcome;
use crate::features::FeatureKind;
use crate::models::config::{config_hash, DistrictParams, DistrictTable, HstmConfig, Stage1Params, StlmConfig, TrainingOptions};

/// A finite space addressed by a vector of choice indices, one per slot.
pub trait SearchSpace: Sync {
    type Config: Serialize + Clone + Send + Sync;

    /// Number of options in each slot.
    fn dims(&self) -> Vec<usize>;

    fn decode(&self, choices: &[usize]) -> Self::Config;

    fn cardinality(&self) -> u128 {
        self.dims().iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
    }
}

/// Candidate values for each per-district setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictGrid {
    pub p: Vec<usize>,
    pub k: Vec<usize>,
    pub q: Vec<usize>,
    pub hidden_units: Vec<Vec<usize>>,
    pub learning_rate: Vec<f64>,
    pub l1_alpha: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl DistrictGrid {
    const SLOTS: usize = 7;

    fn dims(&self) -> [usize; Self::SLOTS] {
        [
            self.p.len(),
            self.k.len(),
            self.q.len(),
            self.hidden_units.len(),
            self.learning_rate.len(),
            self.l1_alpha.len(),
            self.epochs.len(),
        ]
    }

    fn decode(&self, c: &[usize]) -> DistrictParams {
        DistrictParams {
            p: self.p[c[0]],
            k: self.k[c[1]],
            q: self.q[c[2]],
            hidden_units: self.hidden_units[c[3]].clone(),
            learning_rate: self.learning_rate[c[4]],
            l1_alpha: self.l1_alpha[c[5]],
            epochs: self.epochs[c[6]],
        }
    }

    /// Drops neighbour counts that the panel cannot supply.
    fn restricted(&self, num_districts: usize) -> Result<DistrictGrid> {
        let mut g = self.clone();
        g.k.retain(|&k| k < num_districts.max(1));
        if g.dims().contains(&0) {
            return Err(Error::EmptySpace);
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Grid {
    pub span: Vec<usize>,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub k: Vec<usize>,
    pub window: Vec<usize>,
    pub lambda: Vec<f64>,
}

impl Stage1Grid {
    const SLOTS: usize = 6;

    fn dims(&self) -> [usize; Self::SLOTS] {
        [self.span.len(), self.p.len(), self.q.len(), self.k.len(), self.window.len(), self.lambda.len()]
    }

    fn decode(&self, c: &[usize]) -> Stage1Params {
        Stage1Params {
            span: self.span[c[0]],
            p: self.p[c[1]],
            q: self.q[c[2]],
            k: self.k[c[3]],
            window: self.window[c[4]],
            lambda: self.lambda[c[5]],
        }
    }
}

/// STLM space file: one grid applied independently to every district.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StlmSpaceFile {
    pub district: DistrictGrid,
    #[serde(default)]
    pub training: TrainingOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HstmSpaceFile {
    pub stage1: Stage1Grid,
    pub stage2: DistrictGrid,
    #[serde(default)]
    pub training: TrainingOptions,
}

/// Joint space of per-district STLM settings.
#[derive(Debug, Clone)]
pub struct StlmSpace {
    pub districts: Vec<String>,
    pub grid: DistrictGrid,
    pub training: TrainingOptions,
    pub seed: u64,
}

impl StlmSpace {
    pub fn new(file: &StlmSpaceFile, districts: Vec<String>, seed: u64) -> Result<Self> {
        Ok(StlmSpace {
            grid: file.district.restricted(districts.len())?,
            districts,
            training: file.training.clone(),
            seed,
        })
    }
}

fn decode_districts(grid: &DistrictGrid, names: &[String], choices: &[usize]) -> DistrictTable {
    DistrictTable {
        districts: names
            .iter()
            .zip(choices.chunks(DistrictGrid::SLOTS))
            .map(|(n, c)| (n.clone(), grid.decode(c)))
            .collect(),
        default: None,
    }
}

impl SearchSpace for StlmSpace {
    type Config = StlmConfig;

    fn dims(&self) -> Vec<usize> {
        self.districts.iter().flat_map(|_| self.grid.dims()).collect()
    }

    fn decode(&self, choices: &[usize]) -> StlmConfig {
        StlmConfig {
            params: decode_districts(&self.grid, &self.districts, choices),
            training: self.training.clone(),
            seed: self.seed,
        }
    }
}

/// Joint space of the nine Stage-1 settings and the per-district Stage-2 settings.
#[derive(Debug, Clone)]
pub struct HstmSpace {
    pub districts: Vec<String>,
    pub stage1: Stage1Grid,
    pub stage2: DistrictGrid,
    pub training: TrainingOptions,
    pub seed: u64,
}

impl HstmSpace {
    pub fn new(file: &HstmSpaceFile, districts: Vec<String>, seed: u64) -> Result<Self> {
        let mut stage1 = file.stage1.clone();
        stage1.k.retain(|&k| k < districts.len().max(1));
        if stage1.dims().contains(&0) {
            return Err(Error::EmptySpace);
        }
        Ok(HstmSpace {
            stage2: file.stage2.restricted(districts.len())?,
            stage1,
            districts,
            training: file.training.clone(),
            seed,
        })
    }
}

impl SearchSpace for HstmSpace {
    type Config = HstmConfig;

    fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = FeatureKind::ALL.iter().flat_map(|_| self.stage1.dims()).collect();
        d.extend(self.districts.iter().flat_map(|_| self.stage2.dims()));
        d
    }

    fn decode(&self, choices: &[usize]) -> HstmConfig {
        let split = FeatureKind::ALL.len() * Stage1Grid::SLOTS;
        let (c1, c2) = choices.split_at(split);
        HstmConfig {
            stage1: FeatureKind::ALL
                .iter()
                .zip(c1.chunks(Stage1Grid::SLOTS))
                .map(|(f, c)| (*f, self.stage1.decode(c)))
                .collect(),
            stage2: decode_districts(&self.stage2, &self.districts, c2),
            training: self.training.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord<C> {
    pub index: usize,
    pub config_hash: String,
    pub config: C,
    pub fold_scores: Vec<f64>,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<C> {
    pub best_index: usize,
    pub best: C,
    pub best_score: f64,
    pub trace: Vec<TraceRecord<C>>,
    /// All `R` requested draws could not be distinct, so the whole space was enumerated.
    pub exhausted: bool,
}

/// Draws up to `r` distinct choice vectors: seeded, in a reproducible order.
pub fn draw_choices(dims: &[usize], r: usize, seed: u64) -> Result<(Vec<Vec<usize>>, bool)> {
    if r == 0 {
        return Err(Error::InvalidSpec("sample count must be at least 1".into()));
    }
    if dims.contains(&0) {
        return Err(Error::EmptySpace);
    }
    let card = dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if (r as u128) >= card {
        let exhausted = (r as u128) > card;
        if exhausted {
            log::warn!("requested {r} samples from a space of {card}; enumerating all of it");
        }
        let mut all = Vec::with_capacity(card as usize);
        let mut c = vec![0usize; dims.len()];
        for _ in 0..card {
            all.push(c.clone());
            for (slot, d) in c.iter_mut().zip(dims).rev() {
                *slot += 1;
                if *slot < *d {
                    break;
                }
                *slot = 0;
            }
        }
        return Ok((all, exhausted));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(r);
    let mut out = Vec::with_capacity(r);
    while out.len() < r {
        let c: Vec<usize> = dims.iter().map(|&d| rng.gen_range(0..d)).collect();
        if seen.insert(c.clone()) {
            out.push(c);
        }
    }
    Ok((out, false))
}

/// Evaluates `r` distinct configurations concurrently and returns the lowest score, the
/// earliest draw winning ties. Non-finite scores rank last.
pub fn random_search<S, F>(space: &S, r: usize, seed: u64, evaluate: F) -> Result<SearchOutcome<S::Config>>
where
    S: SearchSpace,
    F: Fn(&S::Config) -> CvOutcome + Sync,
{
    let (choices, exhausted) = draw_choices(&space.dims(), r, seed)?;
    let configs: Vec<S::Config> = choices.iter().map(|c| space.decode(c)).collect();
    let outcomes: Vec<CvOutcome> = configs.par_iter().map(&evaluate).collect();
    let trace: Vec<TraceRecord<S::Config>> = configs
        .into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(index, (config, o))| TraceRecord {
            index,
            config_hash: config_hash(&config),
            config,
            fold_scores: o.fold_scores,
            score: if o.score.is_nan() { f64::INFINITY } else { o.score },
            error: o.error,
        })
        .collect();
    let mut best_index = 0;
    for (i, rec) in trace.iter().enumerate() {
        if rec.score < trace[best_index].score {
            best_index = i;
        }
    }
    Ok(SearchOutcome {
        best_index,
        best: trace[best_index].config.clone(),
        best_score: trace[best_index].score,
        trace,
        exhausted,
    })
}

pub fn write_trace<C: Serialize>(path: &Path, trace: &[TraceRecord<C>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for rec in trace {
        serde_json::to_writer(&mut f, rec)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}
