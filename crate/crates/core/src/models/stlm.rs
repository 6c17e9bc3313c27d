//! Spatio-temporal lag MLP: one network per district on its own lags and its nearest
//! neighbours' lags.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mlp::Mlp;
use crate::models::config::{DistrictParams, StlmConfig, TrainingOptions};
use crate::models::{check_graph, push_lags, recursive_joint_forecast, ForecastResult};
use crate::panel::MonthlyHistory;
use crate::seed::district_seed;
use crate::spatial::DistrictGraph;

/// Input vector for district `d` at target index `t`.
pub fn stlm_input(series: &[Vec<f64>], neighbors: &[usize], params: &DistrictParams, d: usize, t: usize) -> Result<Vec<f64>> {
    if t < params.first_row() || t > series[d].len() {
        return Err(Error::InsufficientHistory(t));
    }
    let mut buf = Vec::with_capacity(params.lag_dim());
    push_lags(&mut buf, series, d, t, params.p, &neighbors[..params.k], params.q);
    Ok(buf)
}

/// Per-district networks with the neighbour lists they were trained on.
#[derive(Debug, Clone)]
pub struct StlmModel {
    pub params: Vec<DistrictParams>,
    pub neighbors: Vec<Vec<usize>>,
    pub nets: Vec<Mlp>,
}

impl StlmModel {
    pub fn predict(&self, d: usize, series: &[Vec<f64>], t: usize) -> Result<f64> {
        let x = stlm_input(series, &self.neighbors[d], &self.params[d], d, t)?;
        self.nets[d].forward(&x)
    }
}

/// Builds one district's training matrix; `extra(t)` is appended to every row.
pub(crate) fn design_rows(
    series: &[Vec<f64>],
    neighbors: &[usize],
    params: &DistrictParams,
    d: usize,
    start: usize,
    end: usize,
    extra: impl Fn(usize) -> Vec<f64>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut xs = Vec::with_capacity(end.saturating_sub(start));
    let mut ys = Vec::with_capacity(end.saturating_sub(start));
    for t in start..end {
        let mut row = Vec::new();
        push_lags(&mut row, series, d, t, params.p, &neighbors[..params.k], params.q);
        row.extend(extra(t));
        xs.push(row);
        ys.push(series[d][t]);
    }
    (xs, ys)
}

pub(crate) fn train_net(
    name: &str,
    params: &DistrictParams,
    training: &TrainingOptions,
    seed: u64,
    xs: &[Vec<f64>],
    ys: &[f64],
) -> Result<Mlp> {
    let dim = xs.first().map_or(params.lag_dim(), Vec::len);
    let spec = params.mlp_spec(dim, training, district_seed(seed, name));
    Mlp::init(spec)?.train(xs, ys)
}

pub fn neighbor_lists(graph: &DistrictGraph, params: &[DistrictParams]) -> Result<Vec<Vec<usize>>> {
    params
        .iter()
        .enumerate()
        .map(|(d, p)| graph.knn(d, p.k).map(<[usize]>::to_vec))
        .collect()
}

pub fn stlm_fit(history: &MonthlyHistory, graph: &DistrictGraph, cfg: &StlmConfig) -> Result<StlmModel> {
    check_graph(history, graph)?;
    let params = cfg.params.resolve(&history.districts)?;
    let neighbors = neighbor_lists(graph, &params)?;
    let t0 = history.len();
    let nets = (0..history.num_districts())
        .into_par_iter()
        .map(|d| {
            let p = &params[d];
            let (xs, ys) = design_rows(&history.values, &neighbors[d], p, d, p.first_row(), t0, |_| Vec::new());
            train_net(&history.districts[d], p, &cfg.training, cfg.seed, &xs, &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StlmModel { params, neighbors, nets })
}

pub fn stlm_forecast(model: &StlmModel, history: &MonthlyHistory, horizon: usize) -> Result<ForecastResult> {
    let values = recursive_joint_forecast(history, horizon, |d, s, t| model.predict(d, s, t))?;
    Ok(ForecastResult {
        model: "stlm".into(),
        districts: history.districts.clone(),
        origin: history.origin(),
        values,
        fed_back: (0..horizon).map(|h| h > 0).collect(),
        config_hash: None,
    })
}

pub fn stlm_fit_forecast(history: &MonthlyHistory, graph: &DistrictGraph, cfg: &StlmConfig, horizon: usize) -> Result<ForecastResult> {
    let model = stlm_fit(history, graph, cfg)?;
    stlm_forecast(&model, history, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::config::DistrictTable;
    use crate::panel::YearMonth;
    use crate::spatial::LatLon;

    fn params(p: usize, k: usize, q: usize) -> DistrictParams {
        DistrictParams {
            p,
            k,
            q,
            hidden_units: vec![8, 4],
            learning_rate: 1e-2,
            l1_alpha: 0.0,
            epochs: 30,
        }
    }

    fn toy(d: usize, t: usize) -> (MonthlyHistory, DistrictGraph) {
        let names: Vec<String> = (0..d).map(|i| format!("D{i}")).collect();
        let values = (0..d)
            .map(|i| {
                (0..t)
                    .map(|m| 50.0 + 40.0 * ((m as f64 + i as f64) * std::f64::consts::PI / 6.0).sin() + i as f64)
                    .collect()
            })
            .collect();
        let graph = DistrictGraph::new(names.clone(), (0..d).map(|i| LatLon::new(22.0 + i as f64 * 0.3, 88.0)).collect());
        (
            MonthlyHistory {
                districts: names,
                start: YearMonth::new(2000, 1),
                values,
            },
            graph,
        )
    }

    #[test]
    fn input_vectors() {
        let series: Vec<Vec<f64>> = (0..3).map(|d| (0..10).map(|t| (10 * d + t) as f64).collect()).collect();
        assert_eq!(stlm_input(&series, &[1, 2], &params(2, 0, 1), 0, 5).unwrap(), vec![4.0, 3.0]);
        assert_eq!(stlm_input(&series, &[1, 2], &params(1, 2, 1), 0, 5).unwrap().len(), 3);
        // hand index oracle for p=3, k=2, q=2 at d=1 (neighbours 0 then 2), t=7
        let x = stlm_input(&series, &[0, 2], &params(3, 2, 2), 1, 7).unwrap();
        assert_eq!(x, vec![16.0, 15.0, 14.0, 6.0, 5.0, 26.0, 25.0]);
        assert!(matches!(
            stlm_input(&series, &[0, 2], &params(3, 2, 2), 1, 2),
            Err(Error::InsufficientHistory(2))
        ));
    }

    #[test]
    fn row_count_follows_trim_rule() {
        let (h, _) = toy(2, 40);
        for (p, k, q) in [(3, 0, 9), (3, 1, 9), (12, 1, 2)] {
            let pr = params(p, k, q);
            let (xs, ys) = design_rows(&h.values, &[1], &pr, 0, pr.first_row(), 40, |_| Vec::new());
            let expected = 40 - p.max(if k > 0 { q } else { 0 });
            assert_eq!((xs.len(), ys.len()), (expected, expected));
            assert!(xs.iter().all(|r| r.len() == p + k * q));
        }
    }

    #[test]
    fn constant_series_converges() {
        let h = MonthlyHistory {
            districts: vec!["A".into()],
            start: YearMonth::new(2000, 1),
            values: vec![vec![80.0; 120]],
        };
        let g = DistrictGraph::new(vec!["A".into()], vec![LatLon::new(0.0, 0.0)]);
        let cfg = StlmConfig {
            params: DistrictTable::uniform(params(3, 0, 1)),
            training: Default::default(),
            seed: 3,
        };
        let model = stlm_fit(&h, &g, &cfg).unwrap();
        let (xs, ys) = design_rows(&h.values, &[], &model.params[0], 0, 3, 120, |_| Vec::new());
        let rmse = (xs.iter().zip(&ys).map(|(x, y)| (model.nets[0].forward(x).unwrap() - y).powi(2)).sum::<f64>()
            / ys.len() as f64)
            .sqrt();
        assert!(rmse < 1e-2 * 80.0, "rmse {rmse}");
    }

    #[test]
    fn deterministic_and_nonnegative() {
        let (h, g) = toy(3, 96);
        let cfg = StlmConfig {
            params: DistrictTable::uniform(params(12, 1, 2)),
            training: Default::default(),
            seed: 11,
        };
        let a = stlm_fit_forecast(&h, &g, &cfg, 24).unwrap();
        let b = stlm_fit_forecast(&h, &g, &cfg, 24).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().flatten().all(|v| *v >= 0.0));
        assert_eq!(a.values[0].len(), 24);
    }

    #[test]
    fn k_zero_equals_single_series_runs() {
        let (h, g) = toy(3, 96);
        let cfg = StlmConfig {
            params: DistrictTable::uniform(params(12, 0, 1)),
            training: Default::default(),
            seed: 5,
        };
        let joint = stlm_fit_forecast(&h, &g, &cfg, 18).unwrap();
        for d in 0..3 {
            let hd = h.select(&[d]);
            let gd = g.aligned_to(&hd.districts).unwrap();
            let single = stlm_fit_forecast(&hd, &gd, &cfg, 18).unwrap();
            assert_eq!(single.values[0], joint.values[d]);
        }
    }
}
