//! Holdout evaluation and the district / year-wise / improvement tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{nrmse, population_sd, smape};
use crate::models::ForecastResult;
use crate::panel::RainfallPanel;

/// Which period's spread normalises RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    /// Standard deviation of the district's training months.
    Train,
    /// Standard deviation of the evaluated months themselves.
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub districts: Vec<String>,
    pub normalizer: Normalizer,
    /// Percent.
    pub smape: Vec<f64>,
    /// Unitless ratio (tables print it scaled by 100).
    pub nrmse: Vec<f64>,
    pub years: Vec<i32>,
    /// `yearly_smape[d][y]`
    pub yearly_smape: Vec<Vec<f64>>,
    pub mean_smape: f64,
    pub mean_nrmse: f64,
}

/// Scores a forecast against the panel's holdout. Forecast rows are matched to panel rows
/// by district name; the forecast must start at the first holdout month.
pub fn holdout_evaluate(forecast: &ForecastResult, panel: &RainfallPanel, normalizer: Normalizer) -> Result<EvalReport> {
    let t0 = panel.train_len();
    let expected = panel.month(t0);
    if forecast.first_month() != expected {
        return Err(Error::Misalignment(format!(
            "forecast starts {}, holdout starts {expected}",
            forecast.first_month()
        )));
    }
    let h = forecast.values.first().map_or(0, Vec::len);
    if h == 0 || h > panel.holdout_len() {
        return Err(Error::Misalignment(format!(
            "forecast covers {h} months, holdout has {}",
            panel.holdout_len()
        )));
    }
    let mut years: Vec<i32> = Vec::new();
    for i in 0..h {
        let y = panel.month(t0 + i).year;
        if years.last() != Some(&y) {
            years.push(y);
        }
    }
    let mut smapes = Vec::new();
    let mut nrmses = Vec::new();
    let mut yearly = Vec::new();
    for (d, name) in panel.districts.iter().enumerate() {
        let row = forecast
            .districts
            .iter()
            .position(|n| n == name)
            .map(|i| &forecast.values[i])
            .ok_or_else(|| Error::Misalignment(format!("no forecast for district `{name}`")))?;
        if row.len() != h {
            return Err(Error::Misalignment(format!("ragged forecast row for `{name}`")));
        }
        let actual = &panel.values[d][t0..t0 + h];
        let sigma = match normalizer {
            Normalizer::Train => population_sd(&panel.values[d][..t0]),
            Normalizer::Validation => population_sd(actual),
        };
        smapes.push(smape(actual, row)?);
        nrmses.push(nrmse(actual, row, sigma)?);
        let mut per_year = Vec::with_capacity(years.len());
        for &y in &years {
            let idx: Vec<usize> = (0..h).filter(|&i| panel.month(t0 + i).year == y).collect();
            let a: Vec<f64> = idx.iter().map(|&i| actual[i]).collect();
            let f: Vec<f64> = idx.iter().map(|&i| row[i]).collect();
            per_year.push(smape(&a, &f)?);
        }
        yearly.push(per_year);
    }
    let n = smapes.len() as f64;
    Ok(EvalReport {
        model: forecast.model.clone(),
        districts: panel.districts.clone(),
        normalizer,
        mean_smape: smapes.iter().sum::<f64>() / n,
        mean_nrmse: nrmses.iter().sum::<f64>() / n,
        smape: smapes,
        nrmse: nrmses,
        years,
        yearly_smape: yearly,
    })
}

/// `100 (a - b) / a`: positive when `b` has the lower error.
pub fn improvement(a: f64, b: f64) -> f64 {
    100.0 * (a - b) / a
}

/// Per-district improvement of `candidate` over `reference` as (sMAPE, NRMSE) percentages.
pub fn improvement_table(reference: &EvalReport, candidate: &EvalReport) -> Result<Vec<(String, f64, f64)>> {
    if reference.districts != candidate.districts {
        return Err(Error::Misalignment("reports cover different districts".into()));
    }
    Ok(reference
        .districts
        .iter()
        .enumerate()
        .map(|(d, name)| {
            (
                name.clone(),
                improvement(reference.smape[d], candidate.smape[d]),
                improvement(reference.nrmse[d], candidate.nrmse[d]),
            )
        })
        .collect())
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl EvalReport {
    /// `District,sMAPE (%),NRMSE`; NRMSE scaled by 100, two decimals.
    pub fn write_metrics_csv(&self, path: &Path) -> Result<()> {
        let header = ["District", "sMAPE (%)", "NRMSE"].map(String::from);
        write_rows(
            path,
            &header,
            self.districts
                .iter()
                .enumerate()
                .map(|(d, n)| vec![n.clone(), fmt2(self.smape[d]), fmt2(100.0 * self.nrmse[d])]),
        )
    }

    /// District rows, one sMAPE column per holdout year.
    pub fn write_yearly_csv(&self, path: &Path) -> Result<()> {
        let mut header = vec!["District".to_string()];
        header.extend(self.years.iter().map(i32::to_string));
        write_rows(
            path,
            &header,
            self.districts.iter().enumerate().map(|(d, n)| {
                let mut r = vec![n.clone()];
                r.extend(self.yearly_smape[d].iter().map(|v| fmt2(*v)));
                r
            }),
        )
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        crate::models::config::write_json(path, self)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        crate::models::config::read_json(path)
    }
}

/// `District,sMAPE,NRMSE` percentage improvements, two decimals.
pub fn write_improvement_csv(path: &Path, rows: &[(String, f64, f64)]) -> Result<()> {
    let header = ["District", "sMAPE", "NRMSE"].map(String::from);
    write_rows(path, &header, rows.iter().map(|(n, s, r)| vec![n.clone(), fmt2(*s), fmt2(*r)]))
}
