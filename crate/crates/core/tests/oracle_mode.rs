//! Feeding Stage 2 the true future yearly features instead of Stage-1 forecasts should not
//! make the holdout worse on the seeded synthetic panel.

use std::path::Path;

use hstm::eval::{holdout_evaluate, Normalizer};
use hstm::features::compute_yearly_features;
use hstm::models::config::read_json;
use hstm::models::hstm::hstm_fit_forecast;
use hstm::models::{HstmConfig, HstmOptions};
use hstm::synth::{synth_panel, SynthSpec};

#[test]
fn oracle_features_do_not_hurt() {
    let s = synth_panel(&SynthSpec::default()).unwrap();
    let cfg: HstmConfig =
        read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_hstm_config.json")).unwrap();
    let train = s.panel.training_history();
    let h = s.panel.holdout_len();

    let standard = hstm_fit_forecast(&train, &s.graph, &cfg, h, &HstmOptions::default()).unwrap();
    let truth = compute_yearly_features(&s.panel.history(s.panel.num_months())).unwrap();
    let opts = HstmOptions {
        oracle_features: Some(truth),
    };
    let oracle = hstm_fit_forecast(&train, &s.graph, &cfg, h, &opts).unwrap();

    let a = holdout_evaluate(&standard, &s.panel, Normalizer::Train).unwrap().mean_nrmse;
    let b = holdout_evaluate(&oracle, &s.panel, Normalizer::Train).unwrap().mean_nrmse;
    println!("standard {a:.5}, oracle {b:.5}");
    assert!(b <= a, "oracle {b} > standard {a}");
    assert!(oracle.fed_back[0] == false && standard.fed_back.iter().skip(1).all(|f| *f));
}
