//! Rolling-origin validation: build the fold plan and score a model on every block.
//!
//!     cargo run --release --example cv_folds -- [K] [h_val]

use hstm::eval::{build_folds, cv_score_model};
use hstm::models::ModelConfig;
use hstm::synth::{synth_panel, SynthSpec};

fn main() -> hstm::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let k = args.first().copied().unwrap_or(5);
    let h_val = args.get(1).copied().unwrap_or(60);

    let synth = synth_panel(&SynthSpec::default())?;
    let train = synth.panel.training_history();
    let plan = build_folds(train.len(), k, h_val)?;
    println!("T0 = {} months", train.len());
    for (i, f) in plan.folds.iter().enumerate() {
        println!(
            "fold {}: fit on 1..={}, validate {}..={} ({} to {})",
            i + 1,
            f.train_len,
            f.start_one_based(),
            f.val_end,
            train.month(f.val_start),
            train.month(f.val_end - 1)
        );
    }
    let cv = cv_score_model(&ModelConfig::Naive, &train, &synth.graph, &plan);
    println!("naive fold scores {:?}", cv.fold_scores.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("naive cv score {:.4}", cv.score);
    Ok(())
}
