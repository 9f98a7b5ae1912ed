// Reproduce the invalid-TCP-count table at a handful of replications.
// `cargo run --release --example reproduce_table -- 200` gives desk scale.

use proxsel::estimators::Method;
use proxsel::simulation::{reproduce_table, Scale, TableId, TableOptions};

pub fn run_example_with(reps: usize) -> proxsel::Result<()> {
    let options = TableOptions {
        reps: Some(reps),
        seed: 1,
        ..TableOptions::default()
    };
    let report = reproduce_table(TableId::T4, Scale::Desk, &options)?;
    println!(
        "{:<6} {:>8} {:>8} {:>8} {:>10}",
        "", "cov", "se", "bias", "naive bias"
    );
    for row in &report.rows {
        let a = row
            .report
            .method(Method::AdaptiveProximal)
            .expect("adaptive row");
        let naive = row.report.method(Method::Naive).expect("naive row");
        println!(
            "{:<6} {:>8.2} {:>8.3} {:>8.3} {:>10.3}",
            row.label,
            a.coverage.unwrap_or(f64::NAN),
            a.se.unwrap_or(f64::NAN),
            a.bias,
            naive.bias
        );
    }
    Ok(())
}

pub fn run_example() -> proxsel::Result<()> {
    run_example_with(5)
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);
    run_example_with(reps)
}
