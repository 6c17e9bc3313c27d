//! Fit the spatio-temporal lag network (own lags plus lags of the nearest districts) and
//! forecast the holdout recursively, compared with the naive baseline.
//!
//!     cargo run --release --example stlm_forecast

use hstm::eval::{holdout_evaluate, Normalizer};
use hstm::models::{naive_forecast, DistrictParams, DistrictTable, StlmConfig, TrainingOptions};
use hstm::models::stlm::stlm_fit_forecast;
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let synth = synth_panel(&SynthSpec::default())?;
    let (panel, graph) = (&synth.panel, &synth.graph);
    let train = panel.training_history();
    let cfg = StlmConfig {
        params: DistrictTable::uniform(DistrictParams {
            p: 36,
            k: 2,
            q: 12,
            hidden_units: vec![8, 4],
            learning_rate: 1e-3,
            l1_alpha: 1e-4,
            epochs: 60,
        }),
        training: TrainingOptions::default(),
        seed: 2024,
    };
    let h = panel.holdout_len();
    let stlm = stlm_fit_forecast(&train, graph, &cfg, h)?;
    let first_fed = stlm.fed_back.iter().position(|b| *b).unwrap_or(h);
    println!("step {} is the first to read its own earlier output", first_fed + 1);

    let naive = holdout_evaluate(&naive_forecast(&train, h)?, panel, Normalizer::Train)?;
    let ours = holdout_evaluate(&stlm, panel, Normalizer::Train)?;
    for (d, name) in ours.districts.iter().enumerate() {
        println!(
            "{name:>4}  NRMSE naive {:6.2}  stlm {:6.2}",
            100.0 * naive.nrmse[d],
            100.0 * ours.nrmse[d]
        );
    }
    println!("mean  naive {:.2}  stlm {:.2}", 100.0 * naive.mean_nrmse, 100.0 * ours.mean_nrmse);
    Ok(())
}
