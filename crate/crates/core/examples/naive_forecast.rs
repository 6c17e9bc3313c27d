//! The seasonal naive baseline: every forecast month repeats the same month of the last
//! observed year.
//!
//!     cargo run --example naive_forecast

use hstm::eval::{holdout_evaluate, Normalizer};
use hstm::models::naive_forecast;
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let synth = synth_panel(&SynthSpec::default())?;
    let panel = &synth.panel;
    let train = panel.training_history();
    let forecast = naive_forecast(&train, panel.holdout_len())?;
    println!("origin {}, {} months", forecast.origin, forecast.horizon());
    let row = &forecast.values[0];
    println!("{} first year: {:?}", forecast.districts[0], &row[..12].iter().map(|v| v.round()).collect::<Vec<_>>());
    assert_eq!(row[..12], row[12..24]);

    let report = holdout_evaluate(&forecast, panel, Normalizer::Train)?;
    for (d, name) in report.districts.iter().enumerate() {
        println!("{name:>4}  sMAPE {:6.2}  NRMSE {:6.2}", report.smape[d], 100.0 * report.nrmse[d]);
    }
    Ok(())
}
