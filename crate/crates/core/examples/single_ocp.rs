// One valid OCP, ten candidate TCPs of which three are invalid: the adaptive
// estimator next to the oracle, naive and OLS baselines.

use proxsel::estimators::{
    estimate_invalid_tcp, naive_p2sls, ols_baseline, oracle_p2sls, EstimatorConfig,
};
use proxsel::simulation::{generate_invalid_tcp_data, SimConfig};

pub fn run_example() -> proxsel::Result<()> {
    let sim = SimConfig {
        seed: 2024,
        ..SimConfig::default()
    };
    let data = generate_invalid_tcp_data(&sim, 0)?.data;
    let config = EstimatorConfig::default();

    let adaptive = estimate_invalid_tcp(&data, 0, &config)?;
    let oracle = oracle_p2sls(&data, 0, &sim.invalid_tcps(), &config)?;
    let naive = naive_p2sls(&data, 0, &config)?;
    let ols = ols_baseline(&data, &config)?;

    println!("true effect {}", sim.beta_true);
    for est in [&adaptive, &oracle, &naive, &ols] {
        let ci = est.ci.expect("closed-form interval");
        println!(
            "{:<18} {:>7.4}  [{:.4}, {:.4}]",
            est.method.label(),
            est.beta_hat,
            ci.lower,
            ci.upper
        );
    }
    println!(
        "selected invalid TCPs {:?}, truly invalid {:?}",
        adaptive.selected_invalid_tcps,
        sim.invalid_tcps()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
