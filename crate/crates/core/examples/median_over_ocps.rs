// Ten candidate OCPs, three of them affected by the treatment. Each OCP is
// tried as the valid one; the median is reported with a subsampling interval.

use proxsel::estimators::{
    estimate_invalid_tcp_ocp, subsample_ci, EstimatorConfig, SubsampleOptions,
};
use proxsel::simulation::{generate_invalid_tcp_ocp_data, SimConfig};

pub fn run_example() -> proxsel::Result<()> {
    let sim = SimConfig {
        n: 1500,
        p_w: 10,
        s_w: 3,
        seed: 7,
        ..SimConfig::default()
    };
    let data = generate_invalid_tcp_ocp_data(&sim, 0)?.data;
    let config = EstimatorConfig::default();

    let est = estimate_invalid_tcp_ocp(&data, &config)?;
    for (k, beta) in est.per_ocp_estimates.iter().flatten().enumerate() {
        match beta {
            Some(b) => println!("W{:<2} {b:.4}", k + 1),
            None => println!("W{:<2} failed", k + 1),
        }
    }
    println!("median {:.4}", est.beta_hat);

    // A small N keeps the example quick; the command-line default is 1000.
    let options = SubsampleOptions {
        n_subsamples: 50,
        seed: 7,
        ..SubsampleOptions::default()
    };
    let ci = subsample_ci(&data, &options, |d| {
        estimate_invalid_tcp_ocp(d, &config).map(|e| e.beta_hat)
    })?;
    println!(
        "subsampling interval [{:.4}, {:.4}] from {} subsamples of size {}",
        ci.interval.lower, ci.interval.upper, ci.succeeded, ci.size
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
