//! Descriptive climate tables: SPI extreme-year counts, decadal trends, monsoon share and
//! inter-district correlation against distance.
//!
//!     cargo run --example climate_analytics

use hstm::analytics::{
    correlation_vs_distance, count_extreme_years, decadal_slopes, monsoon_proportions, AnnualTotals, SeriesMetric,
    SpiBaseline, YearRange,
};
use hstm::panel::YearMonth;
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let spec = SynthSpec {
        years: 100,
        start_year: 1910,
        train_end: YearMonth::new(2000, 12),
        ..SynthSpec::default()
    };
    let synth = synth_panel(&spec)?;
    let history = synth.panel.history(synth.panel.num_months());
    let annual = AnnualTotals::from_history(&history)?;
    let baseline = SpiBaseline::fit(&annual, YearRange::new(1910, 1970))?;
    let decades = YearRange::decades(1971, 2000);

    println!("district  baseline mean/sd  heavy/light per decade");
    let counts = decades
        .iter()
        .map(|d| count_extreme_years(&annual, &baseline, *d))
        .collect::<hstm::Result<Vec<_>>>()?;
    for (d, name) in annual.districts.iter().enumerate() {
        let per: Vec<String> = counts.iter().map(|c| format!("{}/{}", c[d].0, c[d].1)).collect();
        println!("{name:>8}  {:7.0} / {:5.0}    {}", baseline.mean[d], baseline.sd[d], per.join("  "));
    }

    let slopes = decadal_slopes(&annual, &decades)?;
    let shares = monsoon_proportions(&annual, &decades)?;
    for (d, name) in annual.districts.iter().enumerate() {
        let s: Vec<String> = slopes[d].iter().map(|v| format!("{v:+6.1}")).collect();
        let m: Vec<String> = shares[d].iter().map(|v| format!("{:.1}%", 100.0 * v)).collect();
        println!("{name:>8}  slope mm/yr {}   monsoon {}", s.join(" "), m.join(" "));
    }

    let pairs = correlation_vs_distance(&history, &synth.graph, SeriesMetric::YearlyMean)?;
    let mut pairs: Vec<_> = pairs.into_iter().filter(|p| p.r.is_some()).collect();
    pairs.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km));
    for p in pairs.iter().take(3).chain(pairs.iter().rev().take(3)) {
        println!("{}-{} {:6.0} km  r {:.3}", p.a, p.b, p.distance_km, p.r.unwrap());
    }
    Ok(())
}
