//! The nine per-year summary features of a monthly series, their EMA smoothing and the
//! trend descriptors the yearly regressions see.
//!
//!     cargo run --example yearly_features

use hstm::features::{compute_yearly_features, descriptors_at, ema_smooth, year_features, FeatureKind, NUM_FEATURES};
use hstm::panel::YearMonth;
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let year = [10.0, 15.0, 20.0, 40.0, 90.0, 250.0, 330.0, 310.0, 240.0, 110.0, 20.0, 5.0];
    let f = year_features(&year);
    for kind in FeatureKind::ALL {
        println!("{:>16}: {:.4}", kind.name(), f[kind.index()]);
    }
    println!("dry year: {:?}", year_features(&[0.0; 12]));

    let spec = SynthSpec {
        districts: 2,
        years: 30,
        train_end: YearMonth::new(1985, 12),
        ..SynthSpec::default()
    };
    let synth = synth_panel(&spec)?;
    let table = compute_yearly_features(&synth.panel.training_history())?.with_spans([10; NUM_FEATURES]);
    let raw = table.raw_series(0, FeatureKind::Total);
    let smooth = table.smoothed_series(0, FeatureKind::Total);
    println!("{} annual totals, first_year {}", raw.len(), table.first_year);
    for (y, (r, s)) in raw.iter().zip(&smooth).enumerate().take(8) {
        println!("  {} raw {r:7.1} ema {s:7.1}", table.first_year + y as i32);
    }
    assert_eq!(ema_smooth(&raw, 10), smooth);

    let d = descriptors_at(&smooth, raw.len(), 5)?;
    println!(
        "descriptors for next year: slope {:.2} mean_diff {:.2} momentum {:.2}",
        d.slope, d.mean_diff, d.momentum
    );
    Ok(())
}
