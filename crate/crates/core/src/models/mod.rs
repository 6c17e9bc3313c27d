//! The three forecasters and the machinery they share.

pub mod config;
pub mod hstm;
pub mod naive;
pub mod stlm;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{read_matrix_csv, write_matrix_csv, MonthlyHistory, YearMonth};
use crate::spatial::DistrictGraph;

pub use config::{DistrictParams, DistrictTable, HstmConfig, Stage1Params, StlmConfig, TrainingOptions};
pub use hstm::HstmOptions;
pub use naive::naive_forecast;

/// District × horizon forecast from a given origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub model: String,
    pub districts: Vec<String>,
    /// Last observed month; the first forecast is for the month after it.
    pub origin: YearMonth,
    pub values: Vec<Vec<f64>>,
    /// Per step: whether any input was itself a model output.
    pub fed_back: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl ForecastResult {
    pub fn horizon(&self) -> usize {
        self.fed_back.len()
    }

    pub fn first_month(&self) -> YearMonth {
        self.origin.add_months(1)
    }

    pub fn month_labels(&self) -> Vec<String> {
        (0..self.horizon())
            .map(|h| self.first_month().add_months(h as i64).to_string())
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_matrix_csv(path, &self.districts, &self.month_labels(), &self.values)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        config::write_json(path, self)
    }

    /// Reads a forecast matrix written by [`ForecastResult::write_csv`] (or by another tool
    /// using the same layout). Provenance is not stored in the CSV and is reported as unknown.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let (districts, months, values) = read_matrix_csv(path)?;
        let first = *months
            .first()
            .ok_or_else(|| Error::Misalignment("forecast file has no month columns".into()))?;
        for (i, m) in months.iter().enumerate() {
            if *m != first.add_months(i as i64) {
                return Err(Error::Misalignment(format!("forecast months not consecutive at {m}")));
            }
        }
        Ok(ForecastResult {
            model: path.file_stem().map_or("forecast".into(), |s| s.to_string_lossy().into_owned()),
            districts,
            origin: first.add_months(-1),
            fed_back: vec![false; months.len()],
            values,
            config_hash: None,
        })
    }
}

/// Anything that can be refitted on a history and forecast `horizon` months past its end.
pub trait Forecaster: Sync {
    fn name(&self) -> &'static str;

    fn fit_forecast(&self, history: &MonthlyHistory, graph: &DistrictGraph, horizon: usize) -> Result<ForecastResult>;
}

/// A configured model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelConfig {
    Naive,
    Stlm(StlmConfig),
    Hstm(HstmConfig),
}

impl ModelConfig {
    pub fn hash(&self) -> String {
        config::config_hash(self)
    }
}

impl Forecaster for ModelConfig {
    fn name(&self) -> &'static str {
        match self {
            ModelConfig::Naive => "naive",
            ModelConfig::Stlm(_) => "stlm",
            ModelConfig::Hstm(_) => "hstm",
        }
    }

    fn fit_forecast(&self, history: &MonthlyHistory, graph: &DistrictGraph, horizon: usize) -> Result<ForecastResult> {
        let mut out = match self {
            ModelConfig::Naive => naive_forecast(history, horizon)?,
            ModelConfig::Stlm(c) => stlm::stlm_fit_forecast(history, graph, c, horizon)?,
            ModelConfig::Hstm(c) => hstm::hstm_fit_forecast(history, graph, c, horizon, &HstmOptions::default())?,
        };
        out.config_hash = Some(self.hash());
        Ok(out)
    }
}

pub(crate) fn check_graph(history: &MonthlyHistory, graph: &DistrictGraph) -> Result<()> {
    if graph.districts != history.districts {
        return Err(Error::Misalignment(
            "graph districts differ from the panel's; align the graph to the panel first".into(),
        ));
    }
    Ok(())
}

/// Appends `series[d][t-1], …, series[d][t-p]`, then `q` lags of each neighbour in order.
pub(crate) fn push_lags(buf: &mut Vec<f64>, series: &[Vec<f64>], d: usize, t: usize, p: usize, neighbors: &[usize], q: usize) {
    buf.extend((1..=p).map(|l| series[d][t - l]));
    for &n in neighbors {
        buf.extend((1..=q).map(|l| series[n][t - l]));
    }
}

/// Multi-step forecast over all districts at once. At each step every district's one-step
/// prediction is computed from the same snapshot, clipped at 0, and only then appended.
/// `predict(d, series, t)` must only read `series[..][..t]`.
pub fn recursive_joint_forecast<F>(history: &MonthlyHistory, horizon: usize, predict: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize, &[Vec<f64>], usize) -> Result<f64> + Sync,
{
    let t0 = history.len();
    let mut series: Vec<Vec<f64>> = history
        .values
        .iter()
        .map(|r| {
            let mut v = Vec::with_capacity(t0 + horizon);
            v.extend_from_slice(r);
            v
        })
        .collect();
    for h in 0..horizon {
        let t = t0 + h;
        let step: Vec<f64> = (0..series.len())
            .into_par_iter()
            .map(|d| predict(d, &series, t).map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 }))
            .collect::<Result<_>>()?;
        for (row, v) in series.iter_mut().zip(step) {
            row.push(v);
        }
    }
    Ok(series.into_iter().map(|r| r[t0..].to_vec()).collect())
}
