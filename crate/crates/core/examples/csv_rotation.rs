// From a delimited file to a per-OCP summary: write simulated data, load it
// back with explicit column roles, rotate every proxy through the OCP role
// and render the summary table.

use proxsel::data_io::{load_csv, render_table, write_csv, LoadOptions, RunReport, SchemaMap};
use proxsel::estimators::{rotate_proxies, EstimatorConfig};
use proxsel::simulation::{generate_invalid_tcp_data, SimConfig};

pub fn run_example() -> proxsel::Result<()> {
    let sim = SimConfig {
        n: 1200,
        p_z: 5,
        s_z: 1,
        seed: 3,
        ..SimConfig::default()
    };
    let dir = std::env::temp_dir().join(format!("proxsel-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| proxsel::Error::InvalidInput(e.to_string()))?;
    let path = dir.join("proxies.csv");
    write_csv(&path, &generate_invalid_tcp_data(&sim, 0)?.data)?;

    let schema = SchemaMap {
        outcome: "Y".into(),
        treatment: "D".into(),
        tcp: ["Z1", "Z2", "Z3", "Z4", "Z5"].map(String::from).to_vec(),
        ocp: vec!["W1".into()],
        covariates: Vec::new(),
    };
    let loaded = load_csv(&path, &schema, &LoadOptions::default())?;
    println!(
        "loaded {} rows ({} dropped)",
        loaded.dataset.n(),
        loaded.dropped_missing
    );

    let config = EstimatorConfig::default();
    let rotation = rotate_proxies(&loaded.dataset, &config)?;
    let mut report = RunReport::new("estimate", sim.seed, serde_json::to_value(&config)?);
    report.add_rotation(&rotation);
    print!("{}", render_table(&report));

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> proxsel::Result<()> {
    run_example()
}
