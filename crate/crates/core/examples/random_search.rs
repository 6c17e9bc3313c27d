//! Seeded random search over an STLM grid, scored by rolling-origin validation. The same
//! seed reproduces the same draws and the same winner.
//!
//!     cargo run --release --example random_search -- [R]

use std::path::Path;

use hstm::eval::search::StlmSpaceFile;
use hstm::eval::{build_folds, cv_score_model, random_search, StlmSpace};
use hstm::models::config::read_json;
use hstm::models::ModelConfig;
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let r = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    let seed = 7;
    let synth = synth_panel(&SynthSpec::default())?;
    let train = synth.panel.training_history();
    let plan = build_folds(train.len(), 2, 60)?;

    let file: StlmSpaceFile =
        read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/synthetic_space_stlm.json"))?;
    let space = StlmSpace::new(&file, synth.panel.districts.clone(), seed)?;
    let out = random_search(&space, r, seed, |c| {
        cv_score_model(&ModelConfig::Stlm(c.clone()), &train, &synth.graph, &plan)
    })?;
    for t in &out.trace {
        println!("#{:<2} {}  score {:.4}", t.index, &t.config_hash[..12], t.score);
    }
    let best = &out.best.params.districts[&synth.panel.districts[0]];
    println!("winner #{} score {:.4}", out.best_index, out.best_score);
    println!("  {}: p {} k {} q {} hidden {:?} lr {} l1 {} epochs {}", synth.panel.districts[0], best.p, best.k, best.q, best.hidden_units, best.learning_rate, best.l1_alpha, best.epochs);
    Ok(())
}
