use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::folds::FoldPlan;
use crate::eval::metrics::{nrmse, population_sd};
use crate::models::Forecaster;
use crate::panel::MonthlyHistory;
use crate::spatial::DistrictGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    /// District-mean NRMSE per fold, +inf for a failed fold.
    pub fold_scores: Vec<f64>,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// District-mean NRMSE of one validation block, each district normalised by the standard
/// deviation of its own validation months.
pub fn block_score(actual: &[&[f64]], forecast: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (a, f) in actual.iter().zip(forecast) {
        total += nrmse(a, f, population_sd(a))?;
    }
    Ok(total / actual.len() as f64)
}

/// Runs `forecast(train_history, h_val)` on every fold and averages. The forecaster only
/// ever receives the fold's training window.
pub fn cv_score<F>(history: &MonthlyHistory, plan: &FoldPlan, forecast: F) -> CvOutcome
where
    F: Fn(&MonthlyHistory, usize) -> Result<Vec<Vec<f64>>>,
{
    let mut fold_scores = Vec::with_capacity(plan.folds.len());
    for fold in &plan.folds {
        let train = history.truncate(fold.train_len);
        let actual: Vec<&[f64]> = history.values.iter().map(|r| &r[fold.val_start..fold.val_end]).collect();
        let result = forecast(&train, plan.h_val).and_then(|f| block_score(&actual, &f));
        match result {
            Ok(s) if s.is_finite() => fold_scores.push(s),
            Ok(s) => {
                fold_scores.push(f64::INFINITY);
                return CvOutcome {
                    fold_scores,
                    score: f64::INFINITY,
                    error: Some(format!("non-finite fold score {s}")),
                };
            }
            Err(e) => {
                fold_scores.push(f64::INFINITY);
                return CvOutcome {
                    fold_scores,
                    score: f64::INFINITY,
                    error: Some(e.to_string()),
                };
            }
        }
    }
    let score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
    CvOutcome {
        fold_scores,
        score,
        error: None,
    }
}

pub fn cv_score_model(model: &dyn Forecaster, history: &MonthlyHistory, graph: &DistrictGraph, plan: &FoldPlan) -> CvOutcome {
    cv_score(history, plan, |train, h| model.fit_forecast(train, graph, h).map(|r| r.values))
}
