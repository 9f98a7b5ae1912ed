mod common;

use common::{export_sim, read_json, run, schema_flags, stderr};
use proxsel::estimators::{estimate_invalid_tcp, EstimatorConfig};
use proxsel::simulation::{generate_invalid_tcp_ocp_data, SimConfig};

fn args<'a>(fixed: &[&'a str], extra: &'a [String]) -> Vec<&'a str> {
    fixed
        .iter()
        .copied()
        .chain(extra.iter().map(String::as_str))
        .collect()
}

#[test]
fn simulate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[simulation]\nreps = 2\nn = 300\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--config", "c.toml", "--output", "r.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("r.json"));
    assert_eq!(report["monte_carlo"]["reps"], 2);
    assert_eq!(report["config"]["config"]["simulation"]["n"], 300);
    assert_eq!(
        report["monte_carlo"]["methods"].as_array().unwrap().len(),
        4
    );
    assert!(report.get("timing_seconds").is_none());
}

#[test]
fn bad_config_fails_with_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[simulation]\np_z = 3\ns_z = 5\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--config", "c.toml", "--output", "r.json"],
    );
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(
        err.contains("config error") && err.contains("simulation.s_z"),
        "{err}"
    );
    assert!(!dir.path().join("r.json").exists());

    std::fs::write(dir.path().join("c.toml"), "[simulaton]\nreps = 2\n").unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--config", "c.toml", "--output", "r.json"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("simulaton"));
}

#[test]
fn estimate_from_file_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n: 800,
        seed: 4,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "d.csv", &cfg);
    let flags = schema_flags(10, 1);
    let out = run(
        dir.path(),
        &args(
            &["estimate", "--data", "d.csv", "--output", "r.json"],
            &flags,
        ),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("r.json"));
    let data = generate_invalid_tcp_ocp_data(&cfg, 0).unwrap().data;
    let direct = estimate_invalid_tcp(&data, 0, &EstimatorConfig::default()).unwrap();
    let from_file = report["estimates"][0]["beta_hat"].as_f64().unwrap();
    assert_eq!(from_file.to_bits(), direct.beta_hat.to_bits());
    assert_eq!(report["per_ocp"][0]["ocp"], "W1");
    assert_eq!(report["data"]["n"], 800);
}

#[test]
fn rotation_over_ten_proxies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n: 1000,
        p_z: 9,
        s_z: 2,
        seed: 8,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "d.csv", &cfg);
    let flags = schema_flags(9, 1);
    let out = run(
        dir.path(),
        &args(
            &[
                "estimate", "--data", "d.csv", "--mode", "rotation", "--output", "r.txt",
                "--format", "table",
            ],
            &flags,
        ),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    let rows = text
        .lines()
        .filter(|l| l.starts_with('Z') || l.starts_with("W1"))
        .count();
    assert_eq!(rows, 10, "{text}");
    assert!(text.contains("median β̂ ="));
}

#[test]
fn subsampling_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n: 2500,
        seed: 1,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "d.csv", &cfg);
    let flags = schema_flags(10, 1);
    let out = run(
        dir.path(),
        &args(
            &[
                "estimate",
                "--data",
                "d.csv",
                "--subsample",
                "--output",
                "r.json",
            ],
            &flags,
        ),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("r.json"));
    let sub = &report["subsample"];
    assert_eq!(sub["size"], 522);
    assert_eq!(
        sub["succeeded"].as_u64().unwrap() + sub["failed"].as_u64().unwrap(),
        1000
    );
    assert_eq!(
        report["config"]["config"]["subsample"]["n_subsamples"],
        1000
    );
}

#[test]
fn identify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let one = run(
        dir.path(),
        &[
            "identify",
            "--delta",
            "1,2,3,4",
            "--gamma",
            "1,2,3,8",
            "--invalid-bound",
            "3",
            "--output",
            "a.json",
        ],
    );
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(
        read_json(&dir.path().join("a.json"))["identification"]["identified"],
        true
    );
    let two = run(
        dir.path(),
        &[
            "identify",
            "--delta",
            "1,2,3,4",
            "--gamma",
            "1,2,6,8",
            "--invalid-bound",
            "3",
            "--output",
            "b.json",
        ],
    );
    assert!(two.status.success());
    let report = read_json(&dir.path().join("b.json"));
    assert_eq!(report["identification"]["identified"], false);
    assert_eq!(report["identification"]["distinct_q_count"], 2);
}

#[test]
fn identify_needs_vectors_or_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["identify", "--invalid-bound", "2", "--output", "a.json"],
    );
    assert!(!out.status.success());
    assert!(!dir.path().join("a.json").exists());
}

#[test]
fn diagnose_reports_and_guards() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n: 600,
        p_z: 6,
        s_z: 2,
        seed: 2,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "d.csv", &cfg);
    let flags = schema_flags(6, 1);
    let out = run(
        dir.path(),
        &args(
            &[
                "diagnose", "--data", "d.csv", "--s-z", "2", "--output", "r.json",
            ],
            &flags,
        ),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("r.json"));
    assert!(
        report["diagnostics"]["irrepresentable"]["value"]
            .as_f64()
            .unwrap()
            >= 0.0
    );
    assert_eq!(report["diagnostics"]["rip"]["order"], 4);

    let wide = SimConfig {
        n: 400,
        p_z: 30,
        s_z: 3,
        seed: 2,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "wide.csv", &wide);
    let flags = schema_flags(30, 1);
    let out = run(
        dir.path(),
        &args(
            &[
                "diagnose", "--data", "wide.csv", "--s-z", "5", "--output", "w.json",
            ],
            &flags,
        ),
    );
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("30045015") && err.contains("1000000"), "{err}");
    assert!(!dir.path().join("w.json").exists());
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n: 200,
        p_z: 3,
        s_z: 1,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "d.csv", &cfg);
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--data",
            "d.csv",
            "--outcome-column",
            "Y",
            "--treatment-column",
            "D",
            "--tcp-columns",
            "Z1,Z2,Z9",
            "--ocp-columns",
            "W1",
            "--output",
            "r.json",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("Z9"));
}

#[test]
fn schema_from_config_and_table_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        n: 500,
        p_z: 4,
        s_z: 1,
        seed: 6,
        ..SimConfig::default()
    };
    export_sim(dir.path(), "d.csv", &cfg);
    std::fs::write(
        dir.path().join("c.toml"),
        "seed = 3\n[schema]\noutcome = \"Y\"\ntreatment = \"D\"\ntcp = [\"Z1\", \"Z2\", \"Z3\", \"Z4\"]\nocp = [\"W1\"]\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "estimate",
            "--config",
            "c.toml",
            "--data",
            "d.csv",
            "--baselines",
            "--format",
            "table",
            "--output",
            "r.txt",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert!(text.starts_with("# estimate (seed 3)"));
    let header = text.lines().find(|l| l.starts_with("W ")).unwrap();
    let cols: Vec<&str> = header.split(" | ").map(str::trim).collect();
    assert_eq!(cols, ["W", "Invalid TCPs", "Valid TCPs", "β̂", "CI"]);
    assert!(text.contains("naive") && text.contains("ols"));
}

#[test]
fn reproduce_small_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "reproduce",
            "--table",
            "t3",
            "--reps",
            "2",
            "--output",
            "t.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("t.json"));
    assert_eq!(report["table"]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(report["table"]["scale"], "desk");
    let out = run(dir.path(), &["reproduce", "--output", "u.json"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("reproduce.table"));
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "--timing",
            "identify",
            "--delta",
            "1,2",
            "--gamma",
            "2,4",
            "--invalid-bound",
            "1",
            "--output",
            "a.json",
        ],
    );
    assert!(out.status.success());
    assert!(
        read_json(&dir.path().join("a.json"))["timing_seconds"]
            .as_f64()
            .unwrap()
            >= 0.0
    );
}
