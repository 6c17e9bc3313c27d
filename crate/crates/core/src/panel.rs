//! Month axis and the district × month rainfall panel.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month, `month` in `1..=12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month {month} out of range");
        YearMonth { year, month }
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + self.month as i64 - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        YearMonth {
            year: ord.div_euclid(12) as i32,
            month: ord.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn add_months(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedPanel(format!("bad month label `{s}`, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(YearMonth { year, month })
    }
}

/// Observed monthly data up to a forecast origin. Forecasters only ever see this type,
/// so nothing past the origin can be read.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyHistory {
    pub districts: Vec<String>,
    pub start: YearMonth,
    /// `values[d][t]`, all rows of equal length.
    pub values: Vec<Vec<f64>>,
}

impl MonthlyHistory {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_districts(&self) -> usize {
        self.districts.len()
    }

    /// Last observed month.
    pub fn origin(&self) -> YearMonth {
        self.start.add_months(self.len() as i64 - 1)
    }

    pub fn month(&self, t: usize) -> YearMonth {
        self.start.add_months(t as i64)
    }

    /// History restricted to the listed districts, in that order.
    pub fn select(&self, indices: &[usize]) -> MonthlyHistory {
        MonthlyHistory {
            districts: indices.iter().map(|&i| self.districts[i].clone()).collect(),
            start: self.start,
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    /// First `n` months only.
    pub fn truncate(&self, n: usize) -> MonthlyHistory {
        MonthlyHistory {
            districts: self.districts.clone(),
            start: self.start,
            values: self.values.iter().map(|row| row[..n].to_vec()).collect(),
        }
    }
}

/// District × month panel with a train/holdout split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainfallPanel {
    pub districts: Vec<String>,
    pub start: YearMonth,
    pub values: Vec<Vec<f64>>,
    /// Index of the last training month.
    pub train_end: usize,
}

impl RainfallPanel {
    /// Builds a panel; `train_end` defaults to the second to last month until split.
    pub fn new(districts: Vec<String>, start: YearMonth, values: Vec<Vec<f64>>) -> Result<Self> {
        if districts.is_empty() || districts.len() != values.len() {
            return Err(Error::MalformedPanel(format!(
                "{} district names for {} rows",
                districts.len(),
                values.len()
            )));
        }
        let t = values[0].len();
        if t < 2 {
            return Err(Error::MalformedPanel("panel needs at least two months".into()));
        }
        for (name, row) in districts.iter().zip(&values) {
            if row.len() != t {
                return Err(Error::MalformedPanel(format!("row `{name}` has {} months, expected {t}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::MalformedPanel(format!("row `{name}` holds invalid value {v}")));
            }
        }
        Ok(RainfallPanel {
            districts,
            start,
            values,
            train_end: t - 2,
        })
    }

    pub fn num_districts(&self) -> usize {
        self.districts.len()
    }

    pub fn num_months(&self) -> usize {
        self.values[0].len()
    }

    pub fn month(&self, t: usize) -> YearMonth {
        self.start.add_months(t as i64)
    }

    pub fn months(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.num_months()).map(|t| self.month(t))
    }

    pub fn last_month(&self) -> YearMonth {
        self.month(self.num_months() - 1)
    }

    pub fn index_of(&self, m: YearMonth) -> Option<usize> {
        let off = self.start.months_until(m);
        (off >= 0 && (off as usize) < self.num_months()).then_some(off as usize)
    }

    pub fn district_index(&self, name: &str) -> Option<usize> {
        self.districts.iter().position(|d| d == name)
    }

    /// Number of training months (T0).
    pub fn train_len(&self) -> usize {
        self.train_end + 1
    }

    pub fn holdout_len(&self) -> usize {
        self.num_months() - self.train_len()
    }

    /// Data up to and including training month index `n - 1`.
    pub fn history(&self, n: usize) -> MonthlyHistory {
        MonthlyHistory {
            districts: self.districts.clone(),
            start: self.start,
            values: self.values.iter().map(|r| r[..n].to_vec()).collect(),
        }
    }

    pub fn training_history(&self) -> MonthlyHistory {
        self.history(self.train_len())
    }

    pub fn holdout(&self) -> Vec<&[f64]> {
        let t0 = self.train_len();
        self.values.iter().map(|r| &r[t0..]).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let labels: Vec<String> = self.months().map(|m| m.to_string()).collect();
        write_matrix_csv(path, &self.districts, &labels, &self.values)
    }

    /// Reads a panel CSV; the split is left at its default until [`split_panel`] is called.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let (districts, months, values) = read_matrix_csv(path)?;
        let start = *months
            .first()
            .ok_or_else(|| Error::MalformedPanel("no month columns".into()))?;
        for (i, m) in months.iter().enumerate() {
            if *m != start.add_months(i as i64) {
                return Err(Error::MalformedPanel(format!("month axis not dense at column `{m}`")));
            }
        }
        RainfallPanel::new(districts, start, values)
    }
}

/// Sets the split so that `train_end_month` is the last training month.
pub fn split_panel(mut panel: RainfallPanel, train_end_month: YearMonth) -> Result<RainfallPanel> {
    match panel.index_of(train_end_month) {
        Some(i) if i + 1 < panel.num_months() => {
            panel.train_end = i;
            Ok(panel)
        }
        _ => Err(Error::OutOfRange(train_end_month)),
    }
}

/// The default split month, December 2010.
pub const DEFAULT_TRAIN_END: YearMonth = YearMonth {
    year: 2010,
    month: 12,
};

pub(crate) fn write_matrix_csv(path: &Path, rows: &[String], columns: &[String], values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = Vec::with_capacity(columns.len() + 1);
    header.push("district".to_string());
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in rows.iter().zip(values) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(name.clone());
        rec.extend(row.iter().map(|v| format_value(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<YearMonth>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.get(0).map(str::trim) != Some("district") {
        return Err(Error::MissingColumn("district".into()));
    }
    let months = header
        .iter()
        .skip(1)
        .map(str::parse)
        .collect::<Result<Vec<YearMonth>>>()?;
    let mut districts = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let name = rec.get(0).unwrap_or_default().to_string();
        let row = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::MalformedPanel(format!("bad value `{c}` in row `{name}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        districts.push(name);
        values.push(row);
    }
    Ok((districts, months, values))
}

/// Shortest representation that round-trips through `f64::from_str`.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v}")
}
