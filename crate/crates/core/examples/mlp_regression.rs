//! Fit a small ReLU network with Adam and an L1 weight penalty to a noisy nonlinear
//! target; shows standardisation, early stopping and the training curve.
//!
//!     cargo run --release --example mlp_regression

use hstm::mlp::{Mlp, MlpSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hstm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = |a: f64, b: f64| 100.0 + 40.0 * (a * b).sin() + 15.0 * a;
    let x: Vec<Vec<f64>> = (0..600).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
    let y: Vec<f64> = x.iter().map(|r| f(r[0], r[1]) + rng.gen_range(-2.0..2.0)).collect();

    let spec = MlpSpec {
        learning_rate: 1e-2,
        l1_alpha: 1e-5,
        epochs: 200,
        seed: 1,
        patience: 20,
        ..MlpSpec::new(2, vec![16, 8])
    };
    let net = Mlp::init(spec)?.train(&x, &y)?;
    let h = &net.history;
    println!("epochs run {}, best epoch {:?}", h.train_loss.len(), h.best_epoch);
    for (e, (l, v)) in h.train_loss.iter().zip(&h.val_rmse).enumerate().step_by(20) {
        println!("  epoch {e:3}  train mse {l:.4}  val rmse {v:.3}");
    }
    for (a, b) in [(0.0, 0.0), (1.0, 1.5), (-1.5, 0.5)] {
        println!("f({a}, {b}) = {:.2}, net {:.2}", f(a, b), net.forward(&[a, b])?);
    }
    Ok(())
}
