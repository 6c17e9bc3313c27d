//! Descriptive climate analytics: SPI extreme years, decadal trends, monsoon shares and
//! correlation against inter-district distance.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::year_features;
use crate::lasso::fit_ols_slope;
use crate::panel::MonthlyHistory;
use crate::spatial::DistrictGraph;

pub const SPI_THRESHOLD: f64 = 1.65;

/// Inclusive calendar-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Self {
        YearRange { start, end }
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 1971-1980, 1981-1990, ... up to the range starting at `last_start`.
    pub fn decades(first_start: i32, last_start: i32) -> Vec<YearRange> {
        (first_start..=last_start).step_by(10).map(|s| YearRange::new(s, s + 9)).collect()
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

impl FromStr for YearRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("year range `{s}` is not START-END"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        let r = YearRange::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if r.is_empty() {
            return Err(bad());
        }
        Ok(r)
    }
}

/// Annual and June-September totals for every complete calendar year.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualTotals {
    pub districts: Vec<String>,
    pub first_year: i32,
    pub totals: Vec<Vec<f64>>,
    pub monsoon: Vec<Vec<f64>>,
}

impl AnnualTotals {
    pub fn from_history(history: &MonthlyHistory) -> Result<Self> {
        if history.start.month != 1 {
            return Err(Error::MalformedPanel("annual totals need a January start".into()));
        }
        let years = history.len() / 12;
        let totals = history
            .values
            .iter()
            .map(|r| (0..years).map(|y| r[12 * y..12 * y + 12].iter().sum()).collect())
            .collect();
        let monsoon = history
            .values
            .iter()
            .map(|r| (0..years).map(|y| r[12 * y + 5..12 * y + 9].iter().sum()).collect())
            .collect();
        Ok(AnnualTotals {
            districts: history.districts.clone(),
            first_year: history.start.year,
            totals,
            monsoon,
        })
    }

    pub fn num_years(&self) -> usize {
        self.totals.first().map_or(0, Vec::len)
    }

    /// Year indices of `range`, which must lie inside the covered years.
    fn indices(&self, range: YearRange) -> Result<std::ops::Range<usize>> {
        let last = self.first_year + self.num_years() as i32 - 1;
        if range.is_empty() || range.start < self.first_year || range.end > last {
            return Err(Error::InvalidSpec(format!(
                "years {range} outside the covered {}-{last}",
                self.first_year
            )));
        }
        let a = (range.start - self.first_year) as usize;
        Ok(a..a + range.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiBaseline {
    pub range: YearRange,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl SpiBaseline {
    /// Mean and population standard deviation of annual totals over `range`.
    pub fn fit(annual: &AnnualTotals, range: YearRange) -> Result<Self> {
        let idx = annual.indices(range)?;
        let n = idx.len() as f64;
        let mut mean = Vec::new();
        let mut sd = Vec::new();
        for (name, row) in annual.districts.iter().zip(&annual.totals) {
            let w = &row[idx.clone()];
            let m = w.iter().sum::<f64>() / n;
            let s = (w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
            if !(s > 0.0) {
                return Err(Error::DegenerateBaseline(name.clone()));
            }
            mean.push(m);
            sd.push(s);
        }
        Ok(SpiBaseline { range, mean, sd })
    }
}

pub fn spi(annual_total: f64, baseline: &SpiBaseline, d: usize) -> f64 {
    (annual_total - baseline.mean[d]) / baseline.sd[d]
}

/// Per district: (heavy, light) years in `decade`, SPI strictly beyond ±1.65.
pub fn count_extreme_years(annual: &AnnualTotals, baseline: &SpiBaseline, decade: YearRange) -> Result<Vec<(usize, usize)>> {
    let idx = annual.indices(decade)?;
    Ok(annual
        .totals
        .iter()
        .enumerate()
        .map(|(d, row)| {
            row[idx.clone()].iter().fold((0, 0), |(h, l), x| {
                let s = spi(*x, baseline, d);
                (h + (s > SPI_THRESHOLD) as usize, l + (s < -SPI_THRESHOLD) as usize)
            })
        })
        .collect())
}

/// `slopes[d][i]`: least-squares slope (mm per year) of annual totals over decade `i`.
pub fn decadal_slopes(annual: &AnnualTotals, decades: &[YearRange]) -> Result<Vec<Vec<f64>>> {
    let ranges = decades.iter().map(|r| annual.indices(*r)).collect::<Result<Vec<_>>>()?;
    annual
        .totals
        .iter()
        .map(|row| ranges.iter().map(|r| fit_ols_slope(&row[r.clone()])).collect())
        .collect()
}

/// `shares[d][i]`: June-September rain as a fraction of all rain in decade `i`.
pub fn monsoon_proportions(annual: &AnnualTotals, decades: &[YearRange]) -> Result<Vec<Vec<f64>>> {
    let ranges = decades.iter().map(|r| annual.indices(*r)).collect::<Result<Vec<_>>>()?;
    Ok((0..annual.districts.len())
        .map(|d| {
            ranges
                .iter()
                .map(|r| {
                    let total: f64 = annual.totals[d][r.clone()].iter().sum();
                    let mon: f64 = annual.monsoon[d][r.clone()].iter().sum();
                    if total > 0.0 {
                        mon / total
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect())
}

/// Series whose cross-district correlations are related to distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesMetric {
    Monthly,
    YearlyMean,
    YearlySd,
    Skewness,
    Kurtosis,
    MonsoonTotal,
}

impl SeriesMetric {
    pub const ALL: [SeriesMetric; 6] = [
        SeriesMetric::Monthly,
        SeriesMetric::YearlyMean,
        SeriesMetric::YearlySd,
        SeriesMetric::Skewness,
        SeriesMetric::Kurtosis,
        SeriesMetric::MonsoonTotal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesMetric::Monthly => "monthly",
            SeriesMetric::YearlyMean => "yearly-mean",
            SeriesMetric::YearlySd => "yearly-sd",
            SeriesMetric::Skewness => "skewness",
            SeriesMetric::Kurtosis => "kurtosis",
            SeriesMetric::MonsoonTotal => "monsoon-total",
        }
    }
}

/// Third and fourth standardised moments (population form, not excess); `None` for a
/// constant year.
pub fn skew_kurt(x: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return None;
    }
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2)))
}

/// One series per district for the chosen metric (complete years only for yearly metrics).
pub fn metric_series(history: &MonthlyHistory, metric: SeriesMetric) -> Vec<Vec<f64>> {
    if metric == SeriesMetric::Monthly {
        return history.values.clone();
    }
    let years = history.len() / 12;
    history
        .values
        .iter()
        .map(|row| {
            (0..years)
                .map(|y| {
                    let mut m = [0.0; 12];
                    m.copy_from_slice(&row[12 * y..12 * y + 12]);
                    match metric {
                        SeriesMetric::YearlyMean => m.iter().sum::<f64>() / 12.0,
                        SeriesMetric::YearlySd => year_features(&m)[3],
                        SeriesMetric::MonsoonTotal => m[5..9].iter().sum(),
                        SeriesMetric::Skewness => skew_kurt(&m).map_or(f64::NAN, |s| s.0),
                        SeriesMetric::Kurtosis => skew_kurt(&m).map_or(f64::NAN, |s| s.1),
                        SeriesMetric::Monthly => unreachable!(),
                    }
                })
                .collect()
        })
        .collect()
}

/// Pearson correlation; `None` when either series is constant or holds non-finite values.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 || a.iter().chain(b).any(|v| !v.is_finite()) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    pub distance_km: f64,
    pub metric: SeriesMetric,
    pub r: Option<f64>,
}

/// All unordered district pairs with their distance and the Pearson r of the metric.
pub fn correlation_vs_distance(history: &MonthlyHistory, graph: &DistrictGraph, metric: SeriesMetric) -> Result<Vec<PairCorrelation>> {
    if graph.districts != history.districts {
        return Err(Error::Misalignment("graph districts differ from the panel's".into()));
    }
    let series = metric_series(history, metric);
    if series.first().map_or(0, Vec::len) < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: series.first().map_or(0, Vec::len),
        });
    }
    let n = history.num_districts();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(PairCorrelation {
                a: history.districts[i].clone(),
                b: history.districts[j].clone(),
                distance_km: graph.distances[i][j],
                metric,
                r: pearson(&series[i], &series[j]),
            });
        }
    }
    Ok(out)
}

fn wide_csv(path: &Path, districts: &[String], decades: &[YearRange], values: &[Vec<f64>], fmt: impl Fn(f64) -> String) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["district".to_string()];
    header.extend(decades.iter().map(YearRange::to_string));
    w.write_record(&header)?;
    for (name, row) in districts.iter().zip(values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| fmt(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_extremes_csv(path: &Path, districts: &[String], decades: &[YearRange], counts: &[Vec<(usize, usize)>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["district", "decade", "heavy_years", "light_years"])?;
    for (i, decade) in decades.iter().enumerate() {
        for (d, name) in districts.iter().enumerate() {
            let (h, l) = counts[i][d];
            w.write_record([name.clone(), decade.to_string(), h.to_string(), l.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_slopes_csv(path: &Path, districts: &[String], decades: &[YearRange], slopes: &[Vec<f64>]) -> Result<()> {
    wide_csv(path, districts, decades, slopes, |v| format!("{v:.4}"))
}

pub fn write_monsoon_csv(path: &Path, districts: &[String], decades: &[YearRange], shares: &[Vec<f64>]) -> Result<()> {
    wide_csv(path, districts, decades, shares, |v| if v.is_finite() { format!("{v:.4}") } else { "NA".into() })
}

pub fn write_correlation_csv(path: &Path, rows: &[PairCorrelation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["district_a", "district_b", "distance_km", "metric", "r"])?;
    for r in rows {
        w.write_record([
            r.a.clone(),
            r.b.clone(),
            format!("{:.3}", r.distance_km),
            r.metric.name().to_string(),
            r.r.map_or("NA".into(), |v| format!("{v:.6}")),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::YearMonth;
    use crate::spatial::LatLon;

    fn history_from_annual(per_year: &[Vec<f64>]) -> MonthlyHistory {
        // each year's rain all falls in July
        MonthlyHistory {
            districts: (0..per_year.len()).map(|i| format!("D{i}")).collect(),
            start: YearMonth::new(1960, 1),
            values: per_year
                .iter()
                .map(|ys| ys.iter().flat_map(|t| (0..12).map(move |m| if m == 6 { *t } else { 0.0 })).collect())
                .collect(),
        }
    }

    #[test]
    fn spi_identities() {
        let b = SpiBaseline {
            range: YearRange::new(1900, 1970),
            mean: vec![1000.0],
            sd: vec![200.0],
        };
        assert_eq!(spi(1000.0, &b, 0), 0.0);
        assert!((spi(1000.0 + 1.65 * 200.0, &b, 0) - 1.65).abs() < 1e-12);
        assert_eq!(spi(700.0, &b, 0), -1.5);
    }

    #[test]
    fn planted_extremes_counted() {
        // baseline 1960-1969 alternating 900/1100 -> mean 1000, sd 100
        let mut years: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 900.0 } else { 1100.0 }).collect();
        years.extend([1200.0, 800.0, 1170.0, 1000.0, 830.0, 1300.0, 1000.0, 1165.0, 700.0, 1000.0]);
        let h = history_from_annual(&[years]);
        let annual = AnnualTotals::from_history(&h).unwrap();
        let base = SpiBaseline::fit(&annual, YearRange::new(1960, 1969)).unwrap();
        assert!((base.mean[0] - 1000.0).abs() < 1e-9 && (base.sd[0] - 100.0).abs() < 1e-9);
        let counts = count_extreme_years(&annual, &base, YearRange::new(1970, 1979)).unwrap();
        // 1200, 1170, 1300 heavy; 800, 830, 700 light; 1165 is exactly 1.65 and not counted
        assert_eq!(counts, vec![(3, 3)]);
        let flat = history_from_annual(&[vec![500.0; 12]]);
        let a2 = AnnualTotals::from_history(&flat).unwrap();
        assert!(matches!(SpiBaseline::fit(&a2, YearRange::new(1960, 1965)), Err(Error::DegenerateBaseline(_))));
    }

    #[test]
    fn slopes_and_shares() {
        let years: Vec<f64> = (0..20).map(|i| 1000.0 + 30.0 * i as f64).collect();
        let h = history_from_annual(&[years, vec![800.0; 20]]);
        let annual = AnnualTotals::from_history(&h).unwrap();
        let decades = YearRange::decades(1960, 1970);
        let s = decadal_slopes(&annual, &decades).unwrap();
        assert!((s[0][0] - 30.0).abs() < 1e-9 && (s[0][1] - 30.0).abs() < 1e-9);
        assert!(s[1][0].abs() < 1e-12);
        let m = monsoon_proportions(&annual, &decades).unwrap();
        assert_eq!(m[1][0], 1.0);
        assert!(decadal_slopes(&annual, &[YearRange::new(1975, 1985)]).is_err());
    }

    #[test]
    fn pearson_cases() {
        let a = [1.0, 4.0, 2.0, 8.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a, &[2.0; 4]), None);
        let b = [0.5, 1.0, 3.0, 2.0];
        assert_eq!(pearson(&a, &b), pearson(&b, &a));
    }

    #[test]
    fn moments_of_known_year() {
        let (s, k) = skew_kurt(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 13.0]).unwrap();
        // one outlier among twelve: skew (n-2)/sqrt(n-1), kurtosis 1/p + 1/(1-p) - 3 with p = 1/12
        assert!((s - 10.0 / 11f64.sqrt()).abs() < 1e-12);
        assert!((k - (12.0 + 12.0 / 11.0 - 3.0)).abs() < 1e-12);
        assert!(skew_kurt(&[2.0; 12]).is_none());
    }

    #[test]
    fn all_pairs_reported() {
        let n = 19;
        let h = MonthlyHistory {
            districts: (0..n).map(|i| format!("D{i:02}")).collect(),
            start: YearMonth::new(1960, 1),
            values: (0..n).map(|i| (0..48).map(|t| ((t * (i + 1)) % 11) as f64).collect()).collect(),
        };
        let g = DistrictGraph::new(h.districts.clone(), (0..n).map(|i| LatLon::new(21.0 + 0.2 * i as f64, 88.0)).collect());
        for m in SeriesMetric::ALL {
            let rows = correlation_vs_distance(&h, &g, m).unwrap();
            assert_eq!(rows.len(), 171);
            assert!(rows.iter().filter_map(|r| r.r).all(|r| (-1.0..=1.0).contains(&r)));
        }
    }
}
