// Selection diagnostics on simulated data: the irrepresentable value of the
// reduced design and the restricted isometry margin.

use proxsel::estimators::{EstimatorConfig, Prepared, ReducedProblem};
use proxsel::identification::{irrepresentable_diagnostic, rip_constants, theorem3_condition};
use proxsel::linalg::{hstack, Matrix, Projector};
use proxsel::simulation::{generate_invalid_tcp_data, SimConfig};

pub fn run_example() -> proxsel::Result<()> {
    let sim = SimConfig {
        n: 1000,
        p_z: 8,
        s_z: 2,
        seed: 11,
        ..SimConfig::default()
    };
    let data = generate_invalid_tcp_data(&sim, 0)?.data;
    let config = EstimatorConfig::default();
    let prep = Prepared::new(&data, &config)?;
    let first = prep.first_stage(0)?;
    let reduced = ReducedProblem::new(&prep, &first)?;

    let irr = irrepresentable_diagnostic(&reduced.design, &sim.invalid_tcps(), &[1.0, 1.0])?;
    println!(
        "irrepresentable value {:.4} (condition holds: {})",
        irr.value, irr.holds
    );

    let (lo, hi) = rip_constants(&reduced.design, 2)?;
    println!("order-2 isometry constants of the reduced design: [{lo:.3}, {hi:.3}]");

    let n = data.n();
    let treat = hstack(&[
        &Matrix::from_column_slice(n, 1, data.d.as_slice()),
        &prep.xs,
    ]);
    let w = Projector::new(&Matrix::from_column_slice(n, 1, first.what.as_slice()))?;
    let rip = theorem3_condition(&data.z, &first.what, &w.residual(&treat), sim.s_z)?;
    println!(
        "recovery margin at order {}: {:.3} (holds: {})",
        rip.order,
        rip.theorem3_margin,
        rip.holds()
    );

    // Guarded: C(30, 10) supports is far beyond the enumeration limit.
    let wide = Matrix::from_fn(40, 30, |i, j| ((i * 31 + j * 17) % 23) as f64);
    match rip_constants(&wide, 10) {
        Err(e) => println!("refused: {e}"),
        Ok(_) => unreachable!("the guard should refuse"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
