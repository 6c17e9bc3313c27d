//! Two-stage forecast: yearly feature forecasts from LASSO regressions condition a monthly
//! network. Oracle mode substitutes the true future features to bound what better yearly
//! forecasts could buy.
//!
//!     cargo run --release --example hstm_forecast

use std::path::Path;

use hstm::eval::{holdout_evaluate, Normalizer};
use hstm::features::compute_yearly_features;
use hstm::models::config::read_json;
use hstm::models::hstm::hstm_fit_forecast;
use hstm::models::{HstmConfig, HstmOptions};
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let synth = synth_panel(&SynthSpec::default())?;
    let (panel, graph) = (&synth.panel, &synth.graph);
    let train = panel.training_history();
    let cfg: HstmConfig =
        read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_hstm_config.json"))?;
    let h = panel.holdout_len();

    let standard = hstm_fit_forecast(&train, graph, &cfg, h, &HstmOptions::default())?;
    let opts = HstmOptions {
        oracle_features: Some(compute_yearly_features(&panel.history(panel.num_months()))?),
    };
    let oracle = hstm_fit_forecast(&train, graph, &cfg, h, &opts)?;

    let a = holdout_evaluate(&standard, panel, Normalizer::Train)?;
    let b = holdout_evaluate(&oracle, panel, Normalizer::Train)?;
    for (d, name) in a.districts.iter().enumerate() {
        println!("{name:>4}  NRMSE {:6.2}  oracle {:6.2}", 100.0 * a.nrmse[d], 100.0 * b.nrmse[d]);
    }
    println!("mean  {:.2}  oracle {:.2}", 100.0 * a.mean_nrmse, 100.0 * b.mean_nrmse);
    Ok(())
}
