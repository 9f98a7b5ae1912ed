// A short Monte Carlo study: coverage, interval length, bias, SE and RMSE
// of each method against the true effect.

use proxsel::estimators::Method;
use proxsel::simulation::{run_monte_carlo, McOptions, SimConfig};

pub fn run_example() -> proxsel::Result<()> {
    let sim = SimConfig {
        n: 1000,
        reps: 40,
        seed: 5,
        ..SimConfig::default()
    };
    let methods = [
        Method::AdaptiveProximal,
        Method::Oracle,
        Method::Naive,
        Method::Ols,
    ];
    let report = run_monte_carlo(&sim, &methods, &McOptions::default())?;

    println!(
        "{:<18} {:>5} {:>6} {:>7} {:>6} {:>6}",
        "method", "cov", "len", "bias", "se", "rmse"
    );
    for m in &report.methods {
        println!(
            "{:<18} {:>5.2} {:>6.3} {:>7.3} {:>6.3} {:>6.3}",
            m.method.label(),
            m.coverage.unwrap_or(f64::NAN),
            m.ci_length.unwrap_or(f64::NAN),
            m.bias,
            m.se.unwrap_or(f64::NAN),
            m.rmse
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
