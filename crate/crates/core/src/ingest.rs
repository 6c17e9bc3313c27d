//! Station-level daily records to district monthly panels.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{RainfallPanel, YearMonth};

#[derive(Debug, Clone, PartialEq)]
pub struct StationRecord {
    pub station_id: String,
    pub district: String,
    pub date: NaiveDate,
    /// `None` when the cell was empty or unparseable.
    pub rainfall_mm: Option<f64>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

/// Maps logical fields to CSV header names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub station: String,
    pub district: String,
    pub date: String,
    pub rainfall: String,
    pub lat: Option<String>,
    pub lon: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            station: "station_id".into(),
            district: "district".into(),
            date: "date".into(),
            rainfall: "rainfall_mm".into(),
            lat: None,
            lon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedStations {
    pub records: Vec<StationRecord>,
    pub rejected: Vec<Rejection>,
    pub total_rows: usize,
}

pub const DEFAULT_MAX_REJECT_FRACTION: f64 = 0.10;

fn earliest_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1900, 1, 1).unwrap()
}

fn latest_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 12, 31).unwrap()
}

/// Parses station rows. Rows with a malformed or out-of-range date, or negative rainfall,
/// are rejected and counted; the whole parse aborts once more than
/// `max_reject_fraction` of the rows are rejected.
pub fn parse_station_csv(path: &Path, schema: &CsvSchema, max_reject_fraction: f64) -> Result<ParsedStations> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_station_reader(file, schema, max_reject_fraction)
}

pub fn parse_station_reader<R: std::io::Read>(
    reader: R,
    schema: &CsvSchema,
    max_reject_fraction: f64,
) -> Result<ParsedStations> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let c_station = col(&schema.station)?;
    let c_district = col(&schema.district)?;
    let c_date = col(&schema.date)?;
    let c_rain = col(&schema.rainfall)?;
    let c_lat = schema.lat.as_deref().map(col).transpose()?;
    let c_lon = schema.lon.as_deref().map(col).transpose()?;

    let mut out = ParsedStations::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        out.total_rows += 1;
        let field = |c: usize| rec.get(c).unwrap_or("");

        let date = match NaiveDate::parse_from_str(field(c_date), "%Y-%m-%d") {
            Ok(d) if d >= earliest_date() && d <= latest_date() => d,
            Ok(d) => {
                out.rejected.push(Rejection {
                    row,
                    reason: format!("date {d} outside 1900-01-01..2019-12-31"),
                });
                continue;
            }
            Err(_) => {
                out.rejected.push(Rejection {
                    row,
                    reason: Error::MalformedDate {
                        row,
                        value: field(c_date).to_string(),
                    }
                    .to_string(),
                });
                continue;
            }
        };
        let rainfall_mm = field(c_rain).parse::<f64>().ok().filter(|v| v.is_finite());
        if let Some(v) = rainfall_mm {
            if v < 0.0 {
                out.rejected.push(Rejection {
                    row,
                    reason: Error::NegativeRainfall { row, value: v }.to_string(),
                });
                continue;
            }
        }
        let coord = |c: Option<usize>| c.and_then(|c| field(c).parse::<f64>().ok());
        out.records.push(StationRecord {
            station_id: field(c_station).to_string(),
            district: field(c_district).to_string(),
            date,
            rainfall_mm,
            lat: coord(c_lat),
            lon: coord(c_lon),
        });
    }
    if out.total_rows > 0 && out.rejected.len() as f64 > max_reject_fraction * out.total_rows as f64 {
        return Err(Error::TooManyRejected {
            rejected: out.rejected.len(),
            total: out.total_rows,
            threshold: max_reject_fraction,
        });
    }
    Ok(out)
}

/// Reads a `station_id,lat,lon` table and fills coordinates on matching records.
pub fn attach_station_coordinates(path: &Path, records: &mut [StationRecord]) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (cs, cla, clo) = (col("station_id")?, col("lat")?, col("lon")?);
    let mut coords = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |c: usize| rec.get(c).and_then(|v| v.parse::<f64>().ok());
        if let (Some(lat), Some(lon)) = (parse(cla), parse(clo)) {
            coords.insert(rec.get(cs).unwrap_or("").to_string(), (lat, lon));
        }
    }
    for r in records.iter_mut() {
        if let Some(&(lat, lon)) = coords.get(&r.station_id) {
            r.lat = Some(lat);
            r.lon = Some(lon);
        }
    }
    Ok(())
}

/// District daily totals keyed by district name, then date.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistrictDaily {
    pub series: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
}

/// Sums present station readings per (district, date). A district-day whose readings are
/// all missing is 0 mm.
pub fn district_daily(records: &[StationRecord]) -> Result<DistrictDaily> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut grouped: BTreeMap<(&str, NaiveDate), Vec<(&str, f64)>> = BTreeMap::new();
    for r in records {
        let slot = grouped.entry((r.district.as_str(), r.date)).or_default();
        if let Some(v) = r.rainfall_mm {
            slot.push((r.station_id.as_str(), v));
        }
    }
    let mut out = DistrictDaily::default();
    for ((district, date), mut vals) in grouped {
        // canonical order so the float sum does not depend on row order
        vals.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
        let total: f64 = vals.iter().map(|(_, v)| v).sum();
        out.series.entry(district.to_string()).or_default().insert(date, total);
    }
    Ok(out)
}

/// Sums daily values into months. The axis spans the first to the last covered month over
/// all districts; a district with no day at all in some month of that range is an error.
pub fn monthly_aggregate(daily: &DistrictDaily) -> Result<RainfallPanel> {
    let ym = |d: &NaiveDate| YearMonth::new(d.year(), d.month());
    let mut first: Option<YearMonth> = None;
    let mut last: Option<YearMonth> = None;
    for series in daily.series.values() {
        if let (Some((d0, _)), Some((d1, _))) = (series.first_key_value(), series.last_key_value()) {
            first = Some(first.map_or(ym(d0), |f| f.min(ym(d0))));
            last = Some(last.map_or(ym(d1), |l| l.max(ym(d1))));
        }
    }
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::NoRecords),
    };
    let t = (first.months_until(last) + 1) as usize;

    let mut districts = Vec::new();
    let mut values = Vec::new();
    for (name, series) in &daily.series {
        let mut row = vec![0.0; t];
        let mut covered = vec![false; t];
        for (date, v) in series {
            let idx = first.months_until(ym(date)) as usize;
            row[idx] += v;
            covered[idx] = true;
        }
        if let Some(gap) = covered.iter().position(|c| !c) {
            return Err(Error::GapInCoverage {
                district: name.clone(),
                month: first.add_months(gap as i64),
            });
        }
        districts.push(name.clone());
        values.push(row);
    }
    if t < 2 {
        return Err(Error::MalformedPanel("records cover fewer than two months".into()));
    }
    RainfallPanel::new(districts, first, values)
}
