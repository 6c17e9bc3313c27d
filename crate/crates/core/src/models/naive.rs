//! Seasonal naive baseline: the last observed year repeated.

use crate::error::{Error, Result};
use crate::models::ForecastResult;
use crate::panel::MonthlyHistory;

pub const SEASON: usize = 12;

pub fn naive_forecast(history: &MonthlyHistory, horizon: usize) -> Result<ForecastResult> {
    let t0 = history.len();
    if t0 < SEASON {
        return Err(Error::HistoryTooShort {
            needed: SEASON,
            got: t0,
        });
    }
    let values = history
        .values
        .iter()
        .map(|row| (0..horizon).map(|h| row[t0 - SEASON + h % SEASON]).collect())
        .collect();
    Ok(ForecastResult {
        model: "naive".into(),
        districts: history.districts.clone(),
        origin: history.origin(),
        values,
        fed_back: vec![false; horizon],
        config_hash: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::YearMonth;

    fn history(row: Vec<f64>) -> MonthlyHistory {
        MonthlyHistory {
            districts: vec!["A".into()],
            start: YearMonth::new(2000, 1),
            values: vec![row],
        }
    }

    #[test]
    fn tiles_last_year() {
        let h = history((0..30).map(|t| t as f64).collect());
        let f = naive_forecast(&h, 26).unwrap();
        assert_eq!(f.values[0][0], 18.0);
        assert_eq!(f.values[0][12], f.values[0][0]);
        assert_eq!(f.values[0][25], 19.0);
        assert_eq!(f.origin, YearMonth::new(2002, 6));
    }

    #[test]
    fn periodic_input_is_a_fixed_point() {
        let year: Vec<f64> = (0..12).map(|m| (m * m) as f64).collect();
        let full: Vec<f64> = year.iter().cycle().take(12 * 20).copied().collect();
        let f = naive_forecast(&history(full[..12 * 11].to_vec()), 108).unwrap();
        assert_eq!(f.values[0], full[12 * 11..].to_vec());
    }

    #[test]
    fn short_history() {
        assert!(matches!(
            naive_forecast(&history(vec![1.0; 11]), 3),
            Err(Error::HistoryTooShort { needed: 12, got: 11 })
        ));
    }
}
