//! Parse station-day rows (one of them malformed), aggregate to district monthly totals
//! and build the centroid graph from station coordinates.
//!
//!     cargo run --example ingest_stations

use hstm::ingest::{district_daily, monthly_aggregate, parse_station_reader, CsvSchema};
use hstm::spatial::{district_centroids, DistrictGraph};

fn main() -> hstm::Result<()> {
    let mut csv = String::from("station_id,district,date,rainfall_mm,lat,lon\n");
    for (station, district, lat, lon) in [
        ("BNK1", "BANKURA", 23.23, 87.07),
        ("BNK2", "BANKURA", 23.10, 87.30),
        ("BIR1", "BIRBHUM", 23.90, 87.53),
        ("KOL1", "KOLKATA", 22.57, 88.36),
    ] {
        for month in 1..=12 {
            for day in [5, 20] {
                let mm = if (6..=9).contains(&month) { 18.0 + day as f64 } else { 2.5 };
                csv += &format!("{station},{district},2015-{month:02}-{day:02},{mm},{lat},{lon}\n");
            }
        }
    }
    csv += "KOL1,KOLKATA,2015-13-01,4.0,22.57,88.36\n";
    // a blank reading counts as missing, not as zero
    csv += "BNK2,BANKURA,2015-07-21,,23.10,87.30\n";

    let schema = CsvSchema {
        lat: Some("lat".into()),
        lon: Some("lon".into()),
        ..CsvSchema::default()
    };
    let parsed = parse_station_reader(csv.as_bytes(), &schema, 0.10)?;
    println!("{} rows, {} rejected", parsed.total_rows, parsed.rejected.len());
    for r in &parsed.rejected {
        println!("  row {}: {}", r.row, r.reason);
    }

    let panel = monthly_aggregate(&district_daily(&parsed.records)?)?;
    for (name, row) in panel.districts.iter().zip(&panel.values) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.0}")).collect();
        println!("{name:>8}: {}", cells.join(" "));
    }

    let graph = DistrictGraph::from_centroid_map(&district_centroids(&parsed.records)?);
    for (d, name) in graph.districts.iter().enumerate() {
        let nn = graph.knn(d, 1)?[0];
        println!("{name} nearest: {} ({:.1} km)", graph.districts[nn], graph.distances[d][nn]);
    }
    Ok(())
}
