//! Tune STLM and HSTM on a seeded synthetic panel, forecast the 108-month holdout and
//! compare against the seasonal naive baseline.
//!
//!     cargo run --release --example synthetic_benchmark -- [R] [K] [h_val]

use std::path::Path;
use std::time::Instant;

use hstm::eval::search::{HstmSpaceFile, StlmSpaceFile};
use hstm::eval::{build_folds, cv_score_model, holdout_evaluate, random_search, HstmSpace, Normalizer, StlmSpace};
use hstm::models::config::read_json;
use hstm::models::{Forecaster, ModelConfig};
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let r = args.first().copied().unwrap_or(50);
    let k = args.get(1).copied().unwrap_or(3);
    let h_val = args.get(2).copied().unwrap_or(60);
    let seed = 7;

    let synth = synth_panel(&SynthSpec::default())?;
    let (panel, graph) = (&synth.panel, &synth.graph);
    let train = panel.training_history();
    let plan = build_folds(train.len(), k, h_val)?;
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let started = Instant::now();

    let stlm_file: StlmSpaceFile = read_json(&configs.join("synthetic_space_stlm.json"))?;
    let space = StlmSpace::new(&stlm_file, panel.districts.clone(), seed)?;
    let stlm = random_search(&space, r, seed, |c| {
        cv_score_model(&ModelConfig::Stlm(c.clone()), &train, graph, &plan)
    })?;
    println!("stlm search: best cv {:.4} ({:.0?})", stlm.best_score, started.elapsed());

    let hstm_file: HstmSpaceFile = read_json(&configs.join("synthetic_space_hstm.json"))?;
    let space = HstmSpace::new(&hstm_file, panel.districts.clone(), seed)?;
    let hstm = random_search(&space, r, seed, |c| {
        cv_score_model(&ModelConfig::Hstm(c.clone()), &train, graph, &plan)
    })?;
    println!("hstm search: best cv {:.4} ({:.0?})", hstm.best_score, started.elapsed());

    let h = panel.holdout_len();
    for model in [ModelConfig::Naive, ModelConfig::Stlm(stlm.best), ModelConfig::Hstm(hstm.best)] {
        let forecast = model.fit_forecast(&train, graph, h)?;
        let report = holdout_evaluate(&forecast, panel, Normalizer::Train)?;
        println!(
            "{:>6}: mean NRMSE {:.4}  mean sMAPE {:.2}",
            model.name(),
            report.mean_nrmse,
            report.mean_smape
        );
    }
    println!("total {:.0?}", started.elapsed());
    Ok(())
}
