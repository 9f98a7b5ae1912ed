// Identification from reduced-form moments: the effect is identified when
// every large-enough subset of TCPs with a common ratio Γ_j / δ_j agrees on it.

use proxsel::identification::{check_majority_rule, check_theorem1};

pub fn run_example() -> proxsel::Result<()> {
    let delta = [1.0, 2.0, 3.0, 4.0];

    // At most three invalid TCPs; the first three share the ratio 1.
    let report = check_theorem1(&delta, &[1.0, 2.0, 3.0, 8.0], 3, 1e-9)?;
    println!("Γ = (1, 2, 3, 8): identified = {}", report.identified);
    for s in &report.subsets {
        println!("  subset {:?} → q = {}", s.indices, s.q);
    }

    // Two disjoint pairs with different ratios: not identified.
    let report = check_theorem1(&delta, &[1.0, 2.0, 6.0, 8.0], 3, 1e-9)?;
    println!(
        "Γ = (1, 2, 6, 8): identified = {} ({:?})",
        report.identified, report.distinct_q
    );

    for bound in [4, 5, 6] {
        println!(
            "majority rule with 10 TCPs, at most {bound} invalid: {}",
            check_majority_rule(10, bound)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
