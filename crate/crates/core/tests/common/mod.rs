#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxsel"))
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("report exists"))
        .expect("valid json")
}

/// Write a simulated single-OCP dataset to `dir/name` and return the path.
pub fn export_sim(dir: &Path, name: &str, config: &proxsel::simulation::SimConfig) -> PathBuf {
    let data = proxsel::simulation::generate_invalid_tcp_ocp_data(config, 0)
        .unwrap()
        .data;
    let path = dir.join(name);
    proxsel::data_io::write_csv(&path, &data).unwrap();
    path
}

pub fn schema_flags(p_z: usize, p_w: usize) -> Vec<String> {
    let list = |prefix: &str, k: usize| {
        (1..=k)
            .map(|j| format!("{prefix}{j}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    vec![
        "--outcome-column".into(),
        "Y".into(),
        "--treatment-column".into(),
        "D".into(),
        "--tcp-columns".into(),
        list("Z", p_z),
        "--ocp-columns".into(),
        list("W", p_w),
    ]
}

pub mod oracles;
