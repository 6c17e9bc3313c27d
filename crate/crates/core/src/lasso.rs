//! L1-penalised least squares by cyclic coordinate descent.
//!
//! Minimises `(1/(2N)) ||y - b0 - X b||^2 + lambda ||b||_1` with features standardised
//! internally (population scale) and an unpenalised intercept. Coefficients are reported
//! on the original feature scale.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Column means and population standard deviations; zero-variance columns get scale 0.
fn column_stats(x: &[Vec<f64>], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mut means = vec![0.0; p];
    for row in x {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut scales = vec![0.0; p];
    for row in x {
        for j in 0..p {
            scales[j] += (row[j] - means[j]).powi(2);
        }
    }
    scales.iter_mut().for_each(|s| *s = (*s / n).sqrt());
    (means, scales)
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

struct Standardized {
    /// Column-major standardised design; dropped columns are empty.
    cols: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
    y_mean: f64,
    yc: Vec<f64>,
}

fn standardize(x: &[Vec<f64>], y: &[f64]) -> Result<Standardized> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: n,
        });
    }
    let p = x[0].len();
    if p == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if let Some(row) = x.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: row.len(),
        });
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (means, scales) = column_stats(x, p);
    let cols = (0..p)
        .map(|j| {
            // relative cut so near-constant columns do not blow up after scaling
            if scales[j] <= 1e-12 * (1.0 + means[j].abs()) {
                Vec::new()
            } else {
                x.iter().map(|r| (r[j] - means[j]) / scales[j]).collect()
            }
        })
        .collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    Ok(Standardized {
        cols,
        means,
        scales,
        y_mean,
        yc: y.iter().map(|v| v - y_mean).collect(),
    })
}

/// Smallest penalty at which every coefficient is zero: `max_j |x~_j' (y - ybar)| / N`.
pub fn lambda_max(x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let s = standardize(x, y)?;
    let n = y.len() as f64;
    Ok(s.cols
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| (c.iter().zip(&s.yc).map(|(a, b)| a * b).sum::<f64>() / n).abs())
        .fold(0.0, f64::max))
}

pub fn fit_lasso(x: &[Vec<f64>], y: &[f64], lambda: f64, opts: LassoOptions) -> Result<LinearModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidSpec(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let s = standardize(x, y)?;
    let n = y.len() as f64;
    let p = s.cols.len();
    let mut beta = vec![0.0; p];
    let mut resid = s.yc.clone();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        iterations += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let col = &s.cols[j];
            if col.is_empty() {
                continue;
            }
            let old = beta[j];
            // standardised columns have unit mean square, so the coordinate step has no divisor
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n + old;
            let new = soft_threshold(rho, lambda);
            if new != old {
                let delta = new - old;
                for (r, a) in resid.iter_mut().zip(col) {
                    *r -= delta * a;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("lasso did not converge in {} sweeps (lambda {lambda})", opts.max_iter);
    }

    let mut coefficients = vec![0.0; p];
    let mut scales = vec![1.0; p];
    let mut intercept = s.y_mean;
    for j in 0..p {
        if !s.cols[j].is_empty() {
            scales[j] = s.scales[j];
            coefficients[j] = beta[j] / s.scales[j];
            intercept -= coefficients[j] * s.means[j];
        }
    }
    Ok(LinearModel {
        intercept,
        coefficients,
        feature_means: s.means,
        feature_scales: scales,
        lambda,
        iterations,
        converged,
    })
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                got: x.len(),
            });
        }
        Ok(self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|b| b.abs()).sum()
    }

    /// Objective on the original data for diagnostics.
    pub fn objective(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let n = y.len() as f64;
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(r, t)| (t - self.predict(r).unwrap_or(f64::NAN)).powi(2))
            .sum();
        let pen: f64 = self
            .coefficients
            .iter()
            .zip(&self.feature_scales)
            .map(|(b, s)| (b * s).abs())
            .sum();
        sse / (2.0 * n) + self.lambda * pen
    }

    /// JSON dump with named coefficients.
    pub fn write_json(&self, path: &Path, names: &[String]) -> Result<()> {
        #[derive(Serialize)]
        struct Named<'a> {
            name: &'a str,
            value: f64,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            lambda: f64,
            intercept: f64,
            coefficients: Vec<Named<'a>>,
        }
        let dump = Dump {
            lambda: self.lambda,
            intercept: self.intercept,
            coefficients: names
                .iter()
                .zip(&self.coefficients)
                .map(|(n, v)| Named { name: n, value: *v })
                .collect(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&dump)?).map_err(|e| Error::io(path, e))
    }
}

/// Least-squares slope of `y` against `1..=n`.
pub fn fit_ols_slope(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: y.len() });
    }
    let n = y.len() as f64;
    let tbar = (n + 1.0) / 2.0;
    let ybar = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in y.iter().enumerate() {
        let dt = (i + 1) as f64 - tbar;
        num += dt * (v - ybar);
        den += dt * dt;
    }
    Ok(num / den)
}
