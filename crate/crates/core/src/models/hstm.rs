//! Two-stage hierarchical model. Stage 1 forecasts each district's smoothed yearly features
//! with LASSO autoregressions; Stage 2 is a per-district network on monthly lags plus the
//! nine features of the target month's year.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{compute_yearly_features, descriptors_at, YearlyFeatureTable, NUM_FEATURES};
use crate::lasso::{fit_lasso, LassoOptions, LinearModel};
use crate::mlp::Mlp;
use crate::models::config::{DistrictParams, HstmConfig, Stage1Params};
use crate::models::stlm::{design_rows, neighbor_lists, train_net};
use crate::models::{check_graph, push_lags, recursive_joint_forecast, ForecastResult};
use crate::panel::MonthlyHistory;
use crate::spatial::DistrictGraph;

pub type YearVector = [f64; NUM_FEATURES];

#[derive(Debug, Clone, Default)]
pub struct HstmOptions {
    /// True yearly features (raw, over at least the forecast years) to use in place of
    /// Stage-1 forecasts. Diagnostic only: this reads the future by design.
    pub oracle_features: Option<YearlyFeatureTable>,
}

/// Stage-1 input for year index `t` of one feature: own lags, neighbour lags, descriptors.
pub fn stage1_input(series: &[Vec<f64>], neighbors: &[usize], params: &Stage1Params, d: usize, t: usize) -> Result<Vec<f64>> {
    if t < params.first_row() || t > series[d].len() {
        return Err(Error::InsufficientHistory(t));
    }
    let mut buf = Vec::with_capacity(params.p + params.k * params.q + 3);
    push_lags(&mut buf, series, d, t, params.p, neighbors, params.q);
    buf.extend(descriptors_at(&series[d], t, params.window)?.as_array());
    Ok(buf)
}

#[derive(Debug, Clone)]
pub struct Stage1Model {
    pub params: [Stage1Params; NUM_FEATURES],
    /// `neighbors[f][d]`
    pub neighbors: Vec<Vec<Vec<usize>>>,
    /// `models[f][d]`
    pub models: Vec<Vec<LinearModel>>,
}

fn feature_panel(table: &YearlyFeatureTable, f: usize) -> Vec<Vec<f64>> {
    table.smoothed.iter().map(|rows| rows.iter().map(|r| r[f]).collect()).collect()
}

/// Fits one LASSO model per feature type and district on the table's smoothed series.
pub fn stage1_fit(table: &YearlyFeatureTable, graph: &DistrictGraph, params: &[Stage1Params; NUM_FEATURES]) -> Result<Stage1Model> {
    let n_d = table.num_districts();
    let years = table.num_years();
    for p in params {
        p.validate(n_d)?;
        if years < p.first_row() + 2 {
            return Err(Error::HistoryTooShort {
                needed: p.first_row() + 2,
                got: years,
            });
        }
    }
    let neighbors: Vec<Vec<Vec<usize>>> = params
        .iter()
        .map(|p| (0..n_d).map(|d| graph.knn(d, p.k).map(<[usize]>::to_vec)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let panels: Vec<Vec<Vec<f64>>> = (0..NUM_FEATURES).map(|f| feature_panel(table, f)).collect();
    let flat = (0..NUM_FEATURES * n_d)
        .into_par_iter()
        .map(|i| {
            let (f, d) = (i / n_d, i % n_d);
            let p = &params[f];
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for t in p.first_row()..years {
                xs.push(stage1_input(&panels[f], &neighbors[f][d], p, d, t)?);
                ys.push(panels[f][d][t]);
            }
            let m = fit_lasso(&xs, &ys, p.lambda, LassoOptions::default())?;
            if !m.converged {
                log::debug!(
                    "stage-1 {} model for {} stopped after {} sweeps",
                    crate::features::FeatureKind::ALL[f],
                    table.districts[d],
                    m.iterations
                );
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let capped = flat.iter().filter(|m| !m.converged).count();
    if capped > 0 {
        // near-collinear lag columns with a tiny penalty; the fit is still usable
        log::warn!("{capped} of {} stage-1 regressions hit the sweep cap", flat.len());
    }
    let mut it = flat.into_iter();
    let models = (0..NUM_FEATURES).map(|_| it.by_ref().take(n_d).collect()).collect();
    Ok(Stage1Model {
        params: params.clone(),
        neighbors,
        models,
    })
}

/// Joint recursion over years: all districts' values of a feature for year `Y+1` are
/// predicted from the same state, then appended, and descriptors are recomputed from the
/// extended series. Returns `[d][step][f]`.
pub fn stage1_forecast(model: &Stage1Model, table: &YearlyFeatureTable, horizon_years: usize) -> Result<Vec<Vec<YearVector>>> {
    let n_d = table.num_districts();
    let years = table.num_years();
    let per_feature = (0..NUM_FEATURES)
        .into_par_iter()
        .map(|f| {
            let mut series = feature_panel(table, f);
            for s in 0..horizon_years {
                let t = years + s;
                let step = (0..n_d)
                    .map(|d| {
                        let x = stage1_input(&series, &model.neighbors[f][d], &model.params[f], d, t)?;
                        model.models[f][d].predict(&x)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                for (row, v) in series.iter_mut().zip(step) {
                    row.push(v);
                }
            }
            Ok(series.into_iter().map(|r| r[years..].to_vec()).collect::<Vec<Vec<f64>>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n_d)
        .map(|d| {
            (0..horizon_years)
                .map(|s| std::array::from_fn(|f| per_feature[f][d][s]))
                .collect()
        })
        .collect())
}

pub fn stage1_fit_forecast(
    table: &YearlyFeatureTable,
    graph: &DistrictGraph,
    params: &[Stage1Params; NUM_FEATURES],
    horizon_years: usize,
) -> Result<Vec<Vec<YearVector>>> {
    let model = stage1_fit(table, graph, params)?;
    stage1_forecast(&model, table, horizon_years)
}

/// Yearly feature vectors by absolute year index: observed (smoothed) for complete
/// history years, supplied forecasts afterwards.
#[derive(Debug, Clone)]
pub struct YearlyLookup {
    pub observed: Vec<Vec<YearVector>>,
    pub forecast: Vec<Vec<YearVector>>,
}

impl YearlyLookup {
    pub fn observed_years(&self) -> usize {
        self.observed.first().map_or(0, Vec::len)
    }

    pub fn get(&self, d: usize, year: usize) -> Result<&YearVector> {
        let n = self.observed_years();
        if year < n {
            Ok(&self.observed[d][year])
        } else {
            self.forecast[d].get(year - n).ok_or(Error::MissingYearlyFeature(year))
        }
    }
}

/// Stage-2 input for district `d` at month index `t` (history starts in January).
pub fn stage2_input(
    series: &[Vec<f64>],
    neighbors: &[usize],
    params: &DistrictParams,
    yearly: &YearlyLookup,
    d: usize,
    t: usize,
) -> Result<Vec<f64>> {
    if t < params.first_row() || t > series[d].len() {
        return Err(Error::InsufficientHistory(t));
    }
    let mut buf = Vec::with_capacity(params.lag_dim() + NUM_FEATURES);
    push_lags(&mut buf, series, d, t, params.p, &neighbors[..params.k], params.q);
    buf.extend_from_slice(yearly.get(d, t / 12)?);
    Ok(buf)
}

#[derive(Debug, Clone)]
pub struct Stage2Model {
    pub params: Vec<DistrictParams>,
    pub neighbors: Vec<Vec<usize>>,
    pub nets: Vec<Mlp>,
}

/// Trains on every complete observed year from the second one onward; targets are raw
/// monthly totals, the yearly tail is the smoothed observed vector of the target's year.
pub fn stage2_fit(history: &MonthlyHistory, graph: &DistrictGraph, cfg: &HstmConfig, yearly: &YearlyLookup) -> Result<Stage2Model> {
    let params = cfg.stage2.resolve(&history.districts)?;
    let neighbors = neighbor_lists(graph, &params)?;
    let end = 12 * yearly.observed_years();
    let nets = (0..history.num_districts())
        .into_par_iter()
        .map(|d| {
            let p = &params[d];
            let start = p.first_row().max(12);
            let (xs, ys) = design_rows(&history.values, &neighbors[d], p, d, start, end, |t| {
                yearly.observed[d][t / 12].to_vec()
            });
            train_net(&history.districts[d], p, &cfg.training, cfg.seed, &xs, &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stage2Model { params, neighbors, nets })
}

pub fn hstm_fit_forecast(
    history: &MonthlyHistory,
    graph: &DistrictGraph,
    cfg: &HstmConfig,
    horizon: usize,
    opts: &HstmOptions,
) -> Result<ForecastResult> {
    check_graph(history, graph)?;
    let spans = cfg.spans()?;
    let table = compute_yearly_features(history)?.with_spans(spans);
    let observed_years = table.num_years();
    let t0 = history.len();
    let last_year = (t0 + horizon).saturating_sub(1) / 12;
    let horizon_years = (last_year + 1).saturating_sub(observed_years);

    let forecast = match &opts.oracle_features {
        None => stage1_fit_forecast(&table, graph, &cfg.stage1_array()?, horizon_years)?,
        Some(truth) => {
            if truth.districts != history.districts || truth.first_year != table.first_year {
                return Err(Error::Misalignment("oracle features do not match the history".into()));
            }
            let truth = truth.clone().with_spans(spans);
            truth
                .smoothed
                .iter()
                .map(|rows| rows.iter().skip(observed_years).take(horizon_years).copied().collect())
                .collect()
        }
    };
    let yearly = YearlyLookup {
        observed: table.smoothed.clone(),
        forecast,
    };
    let model = stage2_fit(history, graph, cfg, &yearly)?;
    let values = recursive_joint_forecast(history, horizon, |d, s, t| {
        let x = stage2_input(s, &model.neighbors[d], &model.params[d], &yearly, d, t)?;
        model.nets[d].forward(&x)
    })?;
    let oracle = opts.oracle_features.is_some();
    Ok(ForecastResult {
        model: "hstm".into(),
        districts: history.districts.clone(),
        origin: history.origin(),
        values,
        fed_back: (0..horizon)
            .map(|h| h > 0 || (!oracle && (t0 + h) / 12 >= observed_years))
            .collect(),
        config_hash: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::models::config::DistrictTable;
    use crate::panel::YearMonth;
    use crate::spatial::LatLon;

    fn s1(p: usize, k: usize, q: usize, window: usize, lambda: f64) -> Stage1Params {
        Stage1Params {
            span: 1,
            p,
            q,
            k,
            window,
            lambda,
        }
    }

    fn table_from(series: Vec<Vec<f64>>) -> YearlyFeatureTable {
        let years = series[0].len();
        let rows: Vec<Vec<YearVector>> = series
            .iter()
            .map(|s| (0..years).map(|y| [s[y]; NUM_FEATURES]).collect())
            .collect();
        YearlyFeatureTable {
            districts: (0..series.len()).map(|i| format!("D{i}")).collect(),
            first_year: 1950,
            raw: rows.clone(),
            smoothed: rows,
            spans: [1; NUM_FEATURES],
        }
    }

    fn line_graph(n: usize) -> DistrictGraph {
        DistrictGraph::new(
            (0..n).map(|i| format!("D{i}")).collect(),
            (0..n).map(|i| LatLon::new(20.0 + i as f64, 88.0)).collect(),
        )
    }

    #[test]
    fn stage1_constant_is_fixed_point() {
        let table = table_from(vec![vec![7.5; 20], vec![7.5; 20]]);
        let params = std::array::from_fn(|_| s1(2, 1, 1, 3, 0.01));
        let f = stage1_fit_forecast(&table, &line_graph(2), &params, 4).unwrap();
        for v in f.iter().flatten().flatten() {
            assert!((v - 7.5).abs() < 1e-6);
        }
    }

    #[test]
    fn stage1_continues_a_line() {
        let line: Vec<f64> = (0..25).map(|y| 100.0 + 3.0 * y as f64).collect();
        let table = table_from(vec![line]);
        let params = std::array::from_fn(|_| s1(2, 0, 1, 3, 1e-9));
        let f = stage1_fit_forecast(&table, &line_graph(1), &params, 3).unwrap();
        for s in 0..3 {
            let want = 100.0 + 3.0 * (25 + s) as f64;
            assert!((f[0][s][0] - want).abs() < 1e-3, "step {s}: {} vs {want}", f[0][s][0]);
        }
    }

    #[test]
    fn stage1_descriptors_recomputed_from_fed_back_values() {
        let series: Vec<f64> = (0..15).map(|y| ((y * 7) % 5) as f64 + 0.1 * y as f64).collect();
        let table = table_from(vec![series.clone()]);
        let params = std::array::from_fn(|_| s1(1, 0, 1, 3, 0.0));
        let model = stage1_fit(&table, &line_graph(1), &params).unwrap();
        let f = stage1_forecast(&model, &table, 2).unwrap();
        // hand recursion
        let m = &model.models[0][0];
        let mut s = series.clone();
        for _ in 0..2 {
            let t = s.len();
            let d = descriptors_at(&s, t, 3).unwrap();
            let x = [s[t - 1], d.slope, d.mean_diff, d.momentum];
            let v = m.intercept + m.coefficients.iter().zip(x).map(|(c, x)| c * x).sum::<f64>();
            s.push(v);
        }
        assert!((f[0][0][0] - s[15]).abs() < 1e-12);
        assert!((f[0][1][0] - s[16]).abs() < 1e-12);
    }

    #[test]
    fn stage2_vector_layout() {
        let series: Vec<Vec<f64>> = (0..2).map(|d| (0..36).map(|t| (100 * d + t) as f64).collect()).collect();
        let params = DistrictParams {
            p: 1,
            k: 0,
            q: 1,
            hidden_units: vec![2],
            learning_rate: 1e-3,
            l1_alpha: 0.0,
            epochs: 1,
        };
        let yearly = YearlyLookup {
            observed: vec![
                vec![[1.0; NUM_FEATURES], [2.0; NUM_FEATURES]],
                vec![[3.0; NUM_FEATURES], [4.0; NUM_FEATURES]],
            ],
            forecast: vec![vec![[5.0; NUM_FEATURES]], vec![[6.0; NUM_FEATURES]]],
        };
        let x = stage2_input(&series, &[], &params, &yearly, 0, 12).unwrap();
        assert_eq!(x.len(), 10);
        // January of year 1: December lag, the new year's features
        assert_eq!(x[0], 11.0);
        assert_eq!(&x[1..], &[2.0; NUM_FEATURES]);
        let tails: Vec<Vec<f64>> = (12..24)
            .map(|t| stage2_input(&series, &[], &params, &yearly, 1, t).unwrap()[1..].to_vec())
            .collect();
        assert!(tails.iter().all(|t| t == &tails[0]));
        assert_eq!(stage2_input(&series, &[], &params, &yearly, 1, 25).unwrap()[1], 6.0);
        assert!(matches!(
            stage2_input(&series, &[], &params, &yearly, 1, 36),
            Err(Error::MissingYearlyFeature(3))
        ));
    }

    pub(crate) fn small_config(k: usize) -> HstmConfig {
        HstmConfig {
            stage1: FeatureKind::ALL
                .iter()
                .map(|f| {
                    (
                        *f,
                        Stage1Params {
                            span: 3,
                            ..s1(2, k, 1, 3, 1e-3)
                        },
                    )
                })
                .collect(),
            stage2: DistrictTable::uniform(DistrictParams {
                p: 12,
                k,
                q: 2,
                hidden_units: vec![8, 4],
                learning_rate: 1e-2,
                l1_alpha: 0.0,
                epochs: 20,
            }),
            training: Default::default(),
            seed: 9,
        }
    }

    fn toy(d: usize, years: usize) -> MonthlyHistory {
        MonthlyHistory {
            districts: (0..d).map(|i| format!("D{i}")).collect(),
            start: YearMonth::new(1990, 1),
            values: (0..d)
                .map(|i| {
                    (0..12 * years)
                        .map(|t| {
                            let m = (t % 12) as f64;
                            (60.0 + 50.0 * ((m - 6.0) / 2.0).cos() + (t as f64 * 0.7 + i as f64).sin() * 5.0).max(0.0)
                        })
                        .collect()
                })
                .collect(),
        }
    }

    #[test]
    fn full_run_is_deterministic_and_consumes_whole_years() {
        let h = toy(3, 14);
        let cfg = small_config(1);
        let g = line_graph(3);
        let a = hstm_fit_forecast(&h, &g, &cfg, 24, &HstmOptions::default()).unwrap();
        let b = hstm_fit_forecast(&h, &g, &cfg, 24, &HstmOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values[0].len(), 24);
        assert!(a.values.iter().flatten().all(|v| *v >= 0.0));
        assert!(a.fed_back.iter().all(|f| *f));
    }

    #[test]
    fn k_zero_equals_single_series_runs() {
        let h = toy(3, 14);
        let cfg = small_config(0);
        let g = line_graph(3);
        let joint = hstm_fit_forecast(&h, &g, &cfg, 15, &HstmOptions::default()).unwrap();
        for d in 0..3 {
            let hd = h.select(&[d]);
            let gd = g.aligned_to(&hd.districts).unwrap();
            let single = hstm_fit_forecast(&hd, &gd, &cfg, 15, &HstmOptions::default()).unwrap();
            assert_eq!(single.values[0], joint.values[d]);
        }
    }
}
