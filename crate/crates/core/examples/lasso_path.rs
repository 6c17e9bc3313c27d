//! LASSO by coordinate descent along a geometric λ grid: coefficients shrink to zero at
//! λ_max and the fit approaches least squares as λ falls.
//!
//!     cargo run --example lasso_path

use hstm::lasso::{fit_lasso, lambda_max, LassoOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hstm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = [3.0, -2.0, 0.0, 0.0, 1.0];
    let x: Vec<Vec<f64>> = (0..200).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|r| 0.5 + r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-0.1..0.1))
        .collect();

    let top = lambda_max(&x, &y)?;
    println!("lambda_max {top:.4}");
    for i in 0..8 {
        let lambda = top * 0.3f64.powi(i);
        let m = fit_lasso(&x, &y, lambda, LassoOptions::default())?;
        let nz = m.coefficients.iter().filter(|c| **c != 0.0).count();
        let coef: Vec<String> = m.coefficients.iter().map(|c| format!("{c:6.3}")).collect();
        println!(
            "lambda {lambda:9.5}  nonzero {nz}  |b|_1 {:6.3}  iters {:4}  [{}]",
            m.l1_norm(),
            m.iterations,
            coef.join(" ")
        );
    }
    Ok(())
}
