//! Yearly summary features, EMA smoothing and short-run trajectory descriptors.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::MonthlyHistory;

pub const NUM_FEATURES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    Total,
    MonsoonTotal,
    Entropy,
    #[serde(rename = "SD")]
    Sd,
    Centroid,
    Max,
    Q1,
    Q2,
    Q3,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; NUM_FEATURES] = [
        FeatureKind::Total,
        FeatureKind::MonsoonTotal,
        FeatureKind::Entropy,
        FeatureKind::Sd,
        FeatureKind::Centroid,
        FeatureKind::Max,
        FeatureKind::Q1,
        FeatureKind::Q2,
        FeatureKind::Q3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Total => "Total",
            FeatureKind::MonsoonTotal => "MonsoonTotal",
            FeatureKind::Entropy => "Entropy",
            FeatureKind::Sd => "SD",
            FeatureKind::Centroid => "Centroid",
            FeatureKind::Max => "Max",
            FeatureKind::Q1 => "Q1",
            FeatureKind::Q2 => "Q2",
            FeatureKind::Q3 => "Q3",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The nine features of one year of monthly totals (January first).
///
/// A year with no rain has no monthly distribution; it gets the uniform-year values
/// (entropy 1, centroid 6.5, quarterly shares 0.25).
pub fn year_features(months: &[f64; 12]) -> [f64; NUM_FEATURES] {
    let total: f64 = months.iter().sum();
    let monsoon: f64 = months[5..9].iter().sum();
    let mean = total / 12.0;
    let sd = (months.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 12.0).sqrt();
    let max = months.iter().copied().fold(0.0, f64::max);

    let (entropy, centroid, q) = if total > 0.0 {
        let mut h = 0.0;
        let mut c = 0.0;
        for (j, m) in months.iter().enumerate() {
            let p = m / total;
            if p > 0.0 {
                h -= p * p.ln();
            }
            c += (j + 1) as f64 * p;
        }
        let quarter = |q: usize| months[3 * q..3 * q + 3].iter().sum::<f64>() / total;
        ((h / 12f64.ln()).clamp(0.0, 1.0), c, [quarter(0), quarter(1), quarter(2)])
    } else {
        log::warn!("zero-rain year; using uniform distribution features");
        (1.0, 6.5, [0.25; 3])
    };
    [total, monsoon, entropy, sd, centroid, max, q[0], q[1], q[2]]
}

/// `F_0 = x_0`, `F_t = a x_t + (1 - a) F_{t-1}` with `a = 2 / (span + 1)`.
pub fn ema_smooth(series: &[f64], span: usize) -> Vec<f64> {
    assert!(span >= 1, "span must be positive");
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut out = Vec::with_capacity(series.len());
    let mut prev = None;
    for &x in series {
        let f = match prev {
            None => x,
            Some(p) => alpha * x + (1.0 - alpha) * p,
        };
        out.push(f);
        prev = Some(f);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptors {
    pub slope: f64,
    pub mean_diff: f64,
    pub momentum: f64,
    /// Effective window length actually used.
    pub window: usize,
}

impl Descriptors {
    pub fn as_array(&self) -> [f64; 3] {
        [self.slope, self.mean_diff, self.momentum]
    }
}

/// Descriptors for predicting year index `t` (0-based) from the `min(window, t)` values
/// preceding it. Requires `t >= 1`.
pub fn descriptors_at(series: &[f64], t: usize, window: usize) -> Result<Descriptors> {
    if t < 1 || window < 1 {
        return Err(Error::WindowTooEarly(t));
    }
    if t > series.len() {
        return Err(Error::InsufficientHistory(t));
    }
    let l = window.min(t);
    let w = &series[t - l..t];
    let n = l as f64;
    let mean = w.iter().sum::<f64>() / n;
    let mean_diff = w[l - 1] - mean;
    if l == 1 {
        return Ok(Descriptors {
            slope: 0.0,
            mean_diff,
            momentum: 0.5,
            window: 1,
        });
    }
    let jbar = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, f) in w.iter().enumerate() {
        let dj = (i + 1) as f64 - jbar;
        num += dj * (f - mean);
        den += dj * dj;
    }
    let ups = w.windows(2).filter(|p| p[1] - p[0] > 0.0).count();
    Ok(Descriptors {
        slope: num / den,
        mean_diff,
        momentum: ups as f64 / (n - 1.0),
        window: l,
    })
}

/// Per district × year × feature values, raw and smoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyFeatureTable {
    pub districts: Vec<String>,
    pub first_year: i32,
    /// `raw[d][y][f]`
    pub raw: Vec<Vec<[f64; NUM_FEATURES]>>,
    pub smoothed: Vec<Vec<[f64; NUM_FEATURES]>>,
    pub spans: [usize; NUM_FEATURES],
}

impl YearlyFeatureTable {
    pub fn num_years(&self) -> usize {
        self.raw.first().map_or(0, Vec::len)
    }

    pub fn num_districts(&self) -> usize {
        self.districts.len()
    }

    pub fn raw_series(&self, d: usize, f: FeatureKind) -> Vec<f64> {
        self.raw[d].iter().map(|row| row[f.index()]).collect()
    }

    pub fn smoothed_series(&self, d: usize, f: FeatureKind) -> Vec<f64> {
        self.smoothed[d].iter().map(|row| row[f.index()]).collect()
    }

    /// Re-smooths every series with one span per feature type, shared across districts.
    pub fn smooth(&mut self, spans: [usize; NUM_FEATURES]) {
        self.spans = spans;
        for (d, rows) in self.raw.iter().enumerate() {
            for f in FeatureKind::ALL {
                let s = ema_smooth(&rows.iter().map(|r| r[f.index()]).collect::<Vec<_>>(), spans[f.index()]);
                for (y, v) in s.into_iter().enumerate() {
                    self.smoothed[d][y][f.index()] = v;
                }
            }
        }
    }

    pub fn with_spans(mut self, spans: [usize; NUM_FEATURES]) -> Self {
        self.smooth(spans);
        self
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["district", "year", "feature", "raw", "smoothed"])?;
        for (d, name) in self.districts.iter().enumerate() {
            for y in 0..self.num_years() {
                for f in FeatureKind::ALL {
                    w.write_record([
                        name.clone(),
                        (self.first_year + y as i32).to_string(),
                        f.name().to_string(),
                        self.raw[d][y][f.index()].to_string(),
                        self.smoothed[d][y][f.index()].to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Raw features for every complete calendar year of `history`; the history must start in
/// January. Smoothed values start equal to raw (span 1) until [`YearlyFeatureTable::smooth`].
pub fn compute_yearly_features(history: &MonthlyHistory) -> Result<YearlyFeatureTable> {
    if history.start.month != 1 {
        return Err(Error::MalformedPanel(format!(
            "yearly features need a January start, got {}",
            history.start
        )));
    }
    let years = history.len() / 12;
    let raw: Vec<Vec<[f64; NUM_FEATURES]>> = history
        .values
        .iter()
        .map(|row| {
            (0..years)
                .map(|y| {
                    let mut m = [0.0; 12];
                    m.copy_from_slice(&row[12 * y..12 * y + 12]);
                    year_features(&m)
                })
                .collect()
        })
        .collect();
    Ok(YearlyFeatureTable {
        districts: history.districts.clone(),
        first_year: history.start.year,
        smoothed: raw.clone(),
        raw,
        spans: [1; NUM_FEATURES],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn months(v: [f64; 12]) -> [f64; 12] {
        v
    }

    #[test]
    fn uniform_year() {
        let f = year_features(&[1.0; 12]);
        assert_eq!(f[0], 12.0);
        assert_eq!(f[1], 4.0);
        assert!((f[2] - 1.0).abs() < 1e-15);
        assert_eq!(f[3], 0.0);
        assert!((f[4] - 6.5).abs() < 1e-12);
        assert_eq!(f[5], 1.0);
        for q in &f[6..] {
            assert!((q - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn single_month_year() {
        let mut m = [0.0; 12];
        m[6] = 100.0;
        let f = year_features(&m);
        assert_eq!(f[2], 0.0);
        assert_eq!(f[4], 7.0);
        assert_eq!(f[5], 100.0);
        assert_eq!((f[6], f[7], f[8]), (0.0, 0.0, 1.0));
    }

    #[test]
    fn mixed_year_against_hand_values() {
        // totals: 750; monsoon Jun..Sep = 50+200+300+150 = 700
        let m = months([10.0, 0.0, 0.0, 0.0, 0.0, 50.0, 200.0, 300.0, 150.0, 40.0, 0.0, 0.0]);
        let f = year_features(&m);
        assert_eq!(f[0], 750.0);
        assert_eq!(f[1], 700.0);
        assert_eq!(f[5], 300.0);
        let centroid = (1.0 * 10.0 + 6.0 * 50.0 + 7.0 * 200.0 + 8.0 * 300.0 + 9.0 * 150.0 + 10.0 * 40.0) / 750.0;
        assert!((f[4] - centroid).abs() < 1e-12);
        assert!((f[6] - 10.0 / 750.0).abs() < 1e-15);
        assert!((f[7] - 50.0 / 750.0).abs() < 1e-15);
        assert!((f[8] - 650.0 / 750.0).abs() < 1e-15);
    }

    #[test]
    fn zero_year_uses_uniform_convention() {
        let f = year_features(&[0.0; 12]);
        assert_eq!(&f[2..], &[1.0, 0.0, 6.5, 0.0, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn ema_cases() {
        assert_eq!(ema_smooth(&[3.0, 1.0, 4.0], 1), vec![3.0, 1.0, 4.0]);
        assert_eq!(ema_smooth(&[2.5; 4], 7), vec![2.5; 4]);
        assert_eq!(ema_smooth(&[0.0, 1.0], 3), vec![0.0, 0.5]);
    }

    #[test]
    fn descriptors_linear_window() {
        let s: Vec<f64> = (0..10).map(|j| 1.0 + 0.5 * j as f64).collect();
        let d = descriptors_at(&s, 8, 4).unwrap();
        assert_eq!(d.window, 4);
        assert!((d.slope - 0.5).abs() < 1e-12);
        assert!((d.mean_diff - 0.5 * 3.0 / 2.0).abs() < 1e-12);
        assert_eq!(d.momentum, 1.0);
    }

    #[test]
    fn descriptors_constant_window() {
        let d = descriptors_at(&[4.0; 6], 5, 3).unwrap();
        assert_eq!((d.slope, d.mean_diff, d.momentum), (0.0, 0.0, 0.0));
    }

    #[test]
    fn descriptors_hand_window() {
        let d = descriptors_at(&[2.0, 5.0, 3.0, 7.0], 4, 4).unwrap();
        // jbar 2.5, Fbar 4.25: sum (j-jbar)(F-Fbar) = (-1.5)(-2.25)+(-0.5)(0.75)+(0.5)(-1.25)+(1.5)(2.75) = 6.5
        assert!((d.slope - 6.5 / 5.0).abs() < 1e-12);
        assert!((d.mean_diff - 2.75).abs() < 1e-12);
        assert!((d.momentum - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn descriptors_short_windows() {
        let d = descriptors_at(&[3.0, 9.0], 1, 5).unwrap();
        assert_eq!(d.window, 1);
        assert_eq!((d.slope, d.mean_diff, d.momentum), (0.0, 0.0, 0.5));
        let d = descriptors_at(&[3.0, 9.0, 1.0], 2, 5).unwrap();
        assert_eq!(d.window, 2);
        assert_eq!(d.momentum, 1.0);
        assert!(matches!(descriptors_at(&[1.0], 0, 3), Err(Error::WindowTooEarly(0))));
    }

    #[test]
    fn table_from_history_uses_whole_years() {
        let h = MonthlyHistory {
            districts: vec!["A".into()],
            start: crate::panel::YearMonth::new(1900, 1),
            values: vec![(0..30).map(|t| (t % 12) as f64).collect()],
        };
        let t = compute_yearly_features(&h).unwrap().with_spans([3; NUM_FEATURES]);
        assert_eq!(t.num_years(), 2);
        assert_eq!(t.raw_series(0, FeatureKind::Total), vec![66.0, 66.0]);
        assert_eq!(t.smoothed_series(0, FeatureKind::Total), vec![66.0, 66.0]);
        let bad = MonthlyHistory {
            start: crate::panel::YearMonth::new(1900, 2),
            ..h
        };
        assert!(compute_yearly_features(&bad).is_err());
    }

    fn arb_year() -> impl Strategy<Value = [f64; 12]> {
        proptest::array::uniform12(prop_oneof![Just(0.0), 0.0f64..500.0])
    }

    proptest! {
        #[test]
        fn feature_ranges(m in arb_year()) {
            let f = year_features(&m);
            prop_assert!((0.0..=1.0).contains(&f[2]));
            prop_assert!((1.0..=12.0).contains(&f[4]));
            let qs = f[6] + f[7] + f[8];
            prop_assert!(qs <= 1.0 + 1e-12);
            prop_assert!(1.0 - qs >= -1e-12);
            prop_assert!(f[0] >= 0.0 && f[1] >= 0.0 && f[3] >= 0.0 && f[5] >= 0.0);
        }

        #[test]
        fn ema_commutes_with_affine_maps(
            xs in proptest::collection::vec(-100.0f64..100.0, 1..30),
            span in 1usize..50,
            a in -5.0f64..5.0,
            b in -10.0f64..10.0,
        ) {
            let lhs = ema_smooth(&xs.iter().map(|x| a * x + b).collect::<Vec<_>>(), span);
            let rhs: Vec<f64> = ema_smooth(&xs, span).iter().map(|f| a * f + b).collect();
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() <= 1e-9 * (1.0 + r.abs()));
            }
        }

        #[test]
        fn momentum_is_a_fraction_of_moves(
            xs in proptest::collection::vec(-10.0f64..10.0, 2..20),
            window in 2usize..8,
        ) {
            let t = xs.len();
            let d = descriptors_at(&xs, t, window).unwrap();
            prop_assert!((0.0..=1.0).contains(&d.momentum));
            let scaled = d.momentum * (d.window - 1) as f64;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }
}
