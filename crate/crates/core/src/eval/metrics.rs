use crate::error::{Error, Result};

fn check(actual: &[f64], forecast: &[f64]) -> Result<()> {
    if actual.len() != forecast.len() || actual.is_empty() {
        return Err(Error::LengthMismatch(actual.len(), forecast.len()));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check(actual, forecast)?;
    let sse: f64 = actual.iter().zip(forecast).map(|(a, f)| (a - f).powi(2)).sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub fn nrmse(actual: &[f64], forecast: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::ZeroNormalizer(sigma));
    }
    Ok(rmse(actual, forecast)? / sigma)
}

/// Symmetric MAPE in percent; months where both values are zero contribute 0.
pub fn smape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check(actual, forecast)?;
    let total: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| {
            let den = (a.abs() + f.abs()) / 2.0;
            if den == 0.0 {
                0.0
            } else {
                (f - a).abs() / den
            }
        })
        .sum();
    Ok(100.0 * total / actual.len() as f64)
}

/// Standard deviation with denominator `n`.
pub fn population_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
