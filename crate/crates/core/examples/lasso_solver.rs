// The weighted LASSO solver on its own, with a KKT certificate, and the
// plain-LASSO proximal estimator along a short penalty path.

use proxsel::estimators::{lasso_proximal, EstimatorConfig};
use proxsel::lasso::{kkt_violation, lasso_solve};
use proxsel::linalg::{Matrix, Vector};
use proxsel::simulation::{generate_invalid_tcp_data, SimConfig};

pub fn run_example() -> proxsel::Result<()> {
    let x = Matrix::from_fn(50, 4, |i, j| ((i * (j + 3)) % 11) as f64 - 5.0);
    let y = &x * Vector::from_column_slice(&[2.0, 0.0, -1.0, 0.0])
        + Vector::from_fn(50, |i, _| (i as f64).sin());
    let weights = Vector::from_element(4, 1.0);
    for lambda in [0.0, 10.0, 100.0, 1000.0] {
        let alpha = lasso_solve(&x, &y, lambda, &weights)?;
        let kkt = kkt_violation(&x, &y, lambda, &weights, &alpha)?;
        println!(
            "λ = {lambda:>6}: α = {:.3?}  (KKT violation {kkt:.1e})",
            alpha.as_slice()
        );
    }

    let sim = SimConfig {
        n: 1000,
        seed: 9,
        ..SimConfig::default()
    };
    let data = generate_invalid_tcp_data(&sim, 0)?.data;
    let config = EstimatorConfig::default();
    for lambda in [1.0, 10.0, 100.0] {
        let (alpha, beta) = lasso_proximal(&data, 0, lambda, &config)?;
        let support: Vec<usize> = (0..alpha.len()).filter(|&j| alpha[j] != 0.0).collect();
        println!("plain LASSO λ = {lambda:>5}: β̂ = {beta:.4}, nonzero α at {support:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
