//! Command-line front end: `simulate`, `reproduce`, `estimate`, `identify`, `diagnose`.
//!
//! Every command writes one report to `--output` and exits 0 only once that
//! report is complete. Reports echo the fully resolved configuration and the
//! subcommand arguments, so a run can be repeated from its own output.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data_io::{
    load_csv, parse_config, write_report, DataSummary, OcpRow, ReportFormat, RunConfig, RunReport,
    SchemaMap,
};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_invalid_tcp, estimate_invalid_tcp_ocp, naive_p2sls, ols_baseline, oracle_p2sls,
    rotate_proxies, subsample_ci, Dataset, Method, OcpFits, Prepared, ProxyEstimate,
    ReducedProblem,
};
use crate::identification::{
    check_theorem1, irrepresentable_diagnostic, theorem3_condition, DiagnosticReport,
};
use crate::linalg::{hstack, Matrix, Projector};
use crate::simulation::{
    reproduce_table, run_monte_carlo, McOptions, Scale, TableId, TableOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "proxsel",
    version,
    about = "Proximal causal effect estimation with possibly invalid proxies"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Record wall-clock time in the report (makes reports non-reproducible byte for byte).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Report format.
    #[arg(long, global = true, default_value = "structured")]
    pub format: ReportFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo study of one simulation configuration.
    Simulate(SimulateArgs),
    /// Re-run one of the reference simulation grids (t3, t4, t5, t6).
    Reproduce(ReproduceArgs),
    /// Estimate the treatment effect from a delimited data file.
    Estimate(EstimateArgs),
    /// Check identification from reduced-form moment vectors.
    Identify(IdentifyArgs),
    /// Selection diagnostics: irrepresentable value and restricted isometry margin.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// TOML run configuration; every key is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where the report is written.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Overrides `simulation.reps`.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated methods: adaptive_proximal, oracle, naive, ols, median_ocp.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<MethodArg>>,
    /// Attach subsampling intervals to the median-over-OCPs method.
    #[arg(long)]
    pub subsample: bool,
    /// Number of subsamples N.
    #[arg(long)]
    pub subsample_n: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub common: Common,
    /// t3, t4, t5 or t6.
    #[arg(long)]
    pub table: Option<TableId>,
    /// desk (200 replications, 200 subsamples) or full (500 replications, 1000 subsamples).
    #[arg(long)]
    pub scale: Option<Scale>,
    /// Overrides the scale's replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Number of subsamples N for t5.
    #[arg(long)]
    pub subsample_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One designated OCP, closed-form interval.
    Single,
    /// Median over all OCP columns.
    Median,
    /// Each proxy in turn as the OCP, the rest as TCPs.
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodArg {
    AdaptiveProximal,
    Oracle,
    Naive,
    Ols,
    MedianOcp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::AdaptiveProximal => Method::AdaptiveProximal,
            MethodArg::Oracle => Method::Oracle,
            MethodArg::Naive => Method::Naive,
            MethodArg::Ols => Method::Ols,
            MethodArg::MedianOcp => Method::MedianOcp,
        }
    }
}

/// Column roles; any flag given replaces the `[schema]` section of the configuration.
#[derive(Debug, Args, Serialize, Default)]
pub struct SchemaArgs {
    /// Outcome column name; column flags override the config `[schema]`.
    #[arg(long)]
    pub outcome_column: Option<String>,
    /// Treatment column name.
    #[arg(long)]
    pub treatment_column: Option<String>,
    /// Candidate treatment-inducing proxy columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tcp_columns: Option<Vec<String>>,
    /// Candidate outcome-inducing proxy columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ocp_columns: Option<Vec<String>>,
    /// Measured covariates, comma separated (optional).
    #[arg(long, value_delimiter = ',')]
    pub covariate_columns: Option<Vec<String>>,
    /// Field delimiter (default `,`).
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Drop rows with unparseable cells instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Delimited file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// OCP used as the valid one, by zero-based index or column name.
    #[arg(long, default_value = "0")]
    pub ocp: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: Mode,
    /// Also report naive proximal 2SLS and OLS (single mode).
    #[arg(long)]
    pub baselines: bool,
    /// Known invalid TCPs (zero-based); adds the oracle estimate (single mode).
    #[arg(long, value_delimiter = ',')]
    pub oracle_set: Option<Vec<usize>>,
    /// Compute a subsampling interval.
    #[arg(long)]
    pub subsample: bool,
    /// Number of subsamples N (default 1000).
    #[arg(long)]
    pub subsample_n: Option<usize>,
    /// Subsample size b (default ⌊n^{4/5}⌋).
    #[arg(long)]
    pub subsample_b: Option<usize>,
    /// Nominal miscoverage of every interval (default 0.05).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Reduced-form OCP coefficients δ̃, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "gamma",
        conflicts_with = "data"
    )]
    pub delta: Option<Vec<f64>>,
    /// Reduced-form outcome coefficients Γ̃, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "delta"
    )]
    pub gamma: Option<Vec<f64>>,
    /// Estimate the vectors from a data file instead.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// OCP used to estimate the moment vectors, by zero-based index or column name.
    #[arg(long, default_value = "0")]
    pub ocp: String,
    /// Upper bound I on the number of invalid TCPs.
    #[arg(long)]
    pub invalid_bound: usize,
    /// Relative tolerance when comparing ratios.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Invalid set for the irrepresentable value (default: the adaptive selection).
    #[arg(long, value_delimiter = ',')]
    pub invalid: Option<Vec<usize>>,
    /// Signs of the invalid coefficients (default: signs of the adaptive estimates).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Option<Vec<f64>>,
    /// Sparsity s_z for the restricted isometry margin (order 2 s_z); 0 skips it.
    #[arg(long)]
    pub s_z: Option<usize>,
}

/// Parse `std::env::args`, run, and map the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    // Per-replication warnings would flood long simulation runs.
    let level = match cli.command {
        Command::Simulate(_) | Command::Reproduce(_) => "error",
        _ => "warn",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(cli) {
        Ok(path) => {
            eprintln!("report written to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Run a parsed command line; returns the report path once written.
pub fn run(cli: Cli) -> Result<PathBuf> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            b = b.num_threads(t);
        }
        b.build()
            .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?
    };
    let started = Instant::now();
    let (mut report, output) = pool.install(|| dispatch(&cli))?;
    if cli.timing {
        report.timing_seconds = Some(started.elapsed().as_secs_f64());
    }
    for est in &report.estimates {
        if !est.weak_tcps.is_empty() {
            log::warn!(
                "{}: weak reduced-form OCP coefficients for TCPs {:?}; median-ratio step may be unstable",
                est.method,
                est.weak_tcps
            );
        }
    }
    write_report(&report, &output, cli.format)?;
    Ok(output)
}

fn dispatch(cli: &Cli) -> Result<(RunReport, PathBuf)> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a).map(|r| (r, a.common.output.clone())),
        Command::Reproduce(a) => reproduce(cli, a).map(|r| (r, a.common.output.clone())),
        Command::Estimate(a) => estimate(cli, a).map(|r| (r, a.common.output.clone())),
        Command::Identify(a) => identify(cli, a).map(|r| (r, a.common.output.clone())),
        Command::Diagnose(a) => diagnose(cli, a).map(|r| (r, a.common.output.clone())),
    }
}

fn load_config(cli: &Cli, common: &Common) -> Result<RunConfig> {
    let config = match &common.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    Ok(match cli.seed {
        Some(seed) => config.with_seed(seed),
        None => config,
    })
}

fn new_report<A: Serialize>(command: &str, config: &RunConfig, args: &A) -> Result<RunReport> {
    config.validate()?;
    let echo = serde_json::json!({
        "config": serde_json::to_value(config)?,
        "args": serde_json::to_value(args)?,
    });
    Ok(RunReport::new(command, config.seed, echo))
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<RunReport> {
    let mut config = load_config(cli, &args.common)?;
    if let Some(reps) = args.reps {
        config.simulation.reps = reps;
    }
    if let Some(methods) = &args.methods {
        config.methods = methods.iter().map(|&m| m.into()).collect();
    }
    if let Some(n) = args.subsample_n {
        config.subsample.n_subsamples = n;
    }
    let mut report = new_report("simulate", &config, args)?;
    let options = McOptions {
        estimator: config.estimator.clone(),
        subsample: args.subsample.then_some(config.subsample),
    };
    report.monte_carlo = Some(run_monte_carlo(
        &config.simulation,
        &config.methods,
        &options,
    )?);
    Ok(report)
}

fn reproduce(cli: &Cli, args: &ReproduceArgs) -> Result<RunReport> {
    let mut config = load_config(cli, &args.common)?;
    if let Some(t) = args.table {
        config.reproduce.table = Some(t);
    }
    if let Some(s) = args.scale {
        config.reproduce.scale = s;
    }
    if args.reps.is_some() {
        config.reproduce.reps = args.reps;
    }
    if args.subsample_n.is_some() {
        config.reproduce.n_subsamples = args.subsample_n;
    }
    let table = config.reproduce.table.ok_or_else(|| {
        Error::config(
            "reproduce.table",
            "no table given (use --table t3|t4|t5|t6)",
        )
    })?;
    let mut report = new_report("reproduce", &config, args)?;
    let options = TableOptions {
        seed: config.seed,
        reps: config.reproduce.reps,
        n_subsamples: config.reproduce.n_subsamples,
        estimator: config.estimator.clone(),
    };
    report.table = Some(reproduce_table(table, config.reproduce.scale, &options)?);
    Ok(report)
}

fn apply_schema(config: &mut RunConfig, flags: &SchemaArgs) -> Result<SchemaMap> {
    if let Some(d) = flags.delimiter {
        config.load.delimiter = d;
    }
    if flags.lenient {
        config.load.mode = crate::data_io::ParseMode::Lenient;
    }
    let any_flag = flags.outcome_column.is_some()
        || flags.treatment_column.is_some()
        || flags.tcp_columns.is_some()
        || flags.ocp_columns.is_some()
        || flags.covariate_columns.is_some();
    if any_flag {
        let base = config.schema.clone();
        let missing = |what: &str| {
            Error::config(
                format!("schema.{what}"),
                "not given by flag or configuration",
            )
        };
        let schema = SchemaMap {
            outcome: flags
                .outcome_column
                .clone()
                .or_else(|| base.as_ref().map(|s| s.outcome.clone()))
                .ok_or_else(|| missing("outcome"))?,
            treatment: flags
                .treatment_column
                .clone()
                .or_else(|| base.as_ref().map(|s| s.treatment.clone()))
                .ok_or_else(|| missing("treatment"))?,
            tcp: flags
                .tcp_columns
                .clone()
                .or_else(|| base.as_ref().map(|s| s.tcp.clone()))
                .ok_or_else(|| missing("tcp"))?,
            ocp: flags
                .ocp_columns
                .clone()
                .or_else(|| base.as_ref().map(|s| s.ocp.clone()))
                .ok_or_else(|| missing("ocp"))?,
            covariates: flags
                .covariate_columns
                .clone()
                .or_else(|| base.as_ref().map(|s| s.covariates.clone()))
                .unwrap_or_default(),
        };
        config.schema = Some(schema);
    }
    let schema = config.schema.clone().ok_or_else(|| {
        Error::config(
            "schema",
            "no column roles given (use a [schema] section or --*-column flags)",
        )
    })?;
    schema.validate()?;
    Ok(schema)
}

fn load(config: &RunConfig, schema: &SchemaMap, path: &PathBuf) -> Result<(Dataset, DataSummary)> {
    let loaded = load_csv(path, schema, &config.load)?;
    let summary = DataSummary {
        path: path.display().to_string(),
        n: loaded.dataset.n(),
        dropped_missing: loaded.dropped_missing,
        dropped_unparseable: loaded.dropped_unparseable,
    };
    Ok((loaded.dataset, summary))
}

fn ocp_index(spec: &str, data: &Dataset) -> Result<usize> {
    if let Ok(k) = spec.parse::<usize>() {
        return if k < data.p_w() {
            Ok(k)
        } else {
            Err(Error::IndexOutOfRange {
                index: k,
                len: data.p_w(),
            })
        };
    }
    data.names
        .ocp
        .iter()
        .position(|n| n == spec)
        .ok_or_else(|| Error::MissingColumn(vec![spec.to_string()]))
}

fn ocp_row(data: &Dataset, k: usize, est: &ProxyEstimate) -> OcpRow {
    let names = &data.names.tcp;
    let (invalid, valid): (Vec<usize>, Vec<usize>) =
        (0..names.len()).partition(|j| est.selected_invalid_tcps.contains(j));
    OcpRow {
        ocp: data.names.ocp[k].clone(),
        invalid_tcps: invalid.iter().map(|&j| names[j].clone()).collect(),
        valid_tcps: valid.iter().map(|&j| names[j].clone()).collect(),
        beta_hat: Some(est.beta_hat),
        ci: est.ci,
        error: None,
    }
}

fn estimate(cli: &Cli, args: &EstimateArgs) -> Result<RunReport> {
    let mut config = load_config(cli, &args.common)?;
    let schema = apply_schema(&mut config, &args.data.schema)?;
    if let Some(a) = args.alpha {
        config.estimator.alpha_level = a;
        config.subsample.alpha_level = a;
    }
    if let Some(n) = args.subsample_n {
        config.subsample.n_subsamples = n;
    }
    if args.subsample_b.is_some() {
        config.subsample.size = args.subsample_b;
    }
    let (data, summary) = load(&config, &schema, &args.data.data)?;
    let mut report = new_report("estimate", &config, args)?;
    report.data = Some(summary);
    let est = &config.estimator;

    match args.mode {
        Mode::Single => {
            let k = ocp_index(&args.data.ocp, &data)?;
            let adaptive = estimate_invalid_tcp(&data, k, est)?;
            report.per_ocp.push(ocp_row(&data, k, &adaptive));
            report.summary_beta = Some(adaptive.beta_hat);
            report.estimates.push(adaptive);
            if let Some(set) = &args.oracle_set {
                report.estimates.push(oracle_p2sls(&data, k, set, est)?);
            }
            if args.baselines {
                report.estimates.push(naive_p2sls(&data, k, est)?);
                report.estimates.push(ols_baseline(&data, est)?);
            }
            if args.subsample {
                let ci = subsample_ci(&data, &config.subsample, |d| {
                    estimate_invalid_tcp(d, k, est).map(|e| e.beta_hat)
                })?;
                report.subsample = Some(ci);
            }
        }
        Mode::Median => {
            let fits = OcpFits::run(&data, est)?;
            for (k, fit) in fits.fits.iter().enumerate() {
                report.per_ocp.push(match fit {
                    Ok(e) => ocp_row(&data, k, e),
                    Err(e) => OcpRow {
                        ocp: data.names.ocp[k].clone(),
                        invalid_tcps: Vec::new(),
                        valid_tcps: Vec::new(),
                        beta_hat: None,
                        ci: None,
                        error: Some(e.to_string()),
                    },
                });
            }
            let median = estimate_invalid_tcp_ocp(&data, est)?;
            report.summary_beta = Some(median.beta_hat);
            report.estimates.push(median);
            if args.subsample {
                let ci = subsample_ci(&data, &config.subsample, |d| {
                    estimate_invalid_tcp_ocp(d, est).map(|e| e.beta_hat)
                })?;
                report.subsample = Some(ci);
            }
        }
        Mode::Rotation => {
            if args.subsample {
                return Err(Error::InvalidInput(
                    "subsampling is not available in rotation mode".into(),
                ));
            }
            report.add_rotation(&rotate_proxies(&data, est)?);
        }
    }
    Ok(report)
}

fn identify(cli: &Cli, args: &IdentifyArgs) -> Result<RunReport> {
    let mut config = load_config(cli, &args.common)?;
    let (delta, gamma, summary) = match (&args.delta, &args.gamma, &args.data) {
        (Some(d), Some(g), None) => (d.clone(), g.clone(), None),
        (None, None, Some(path)) => {
            let schema = apply_schema(&mut config, &args.schema)?;
            let (data, summary) = load(&config, &schema, path)?;
            let k = ocp_index(&args.ocp, &data)?;
            let prep = Prepared::new(&data, &config.estimator)?;
            let first = prep.first_stage(k)?;
            (
                first.tcp_delta().to_vec(),
                first.tcp_gamma().to_vec(),
                Some(summary),
            )
        }
        _ => {
            return Err(Error::InvalidInput(
                "give either --delta and --gamma, or --data with column roles".into(),
            ))
        }
    };
    let mut report = new_report("identify", &config, args)?;
    report.data = summary;
    let result = check_theorem1(&delta, &gamma, args.invalid_bound, args.tol)?;
    if result.subsets.is_empty() {
        log::warn!(
            "no subset of size {} has a common ratio at tolerance {}",
            result.subset_size,
            args.tol
        );
    }
    report.identification = Some(result);
    Ok(report)
}

fn diagnose(cli: &Cli, args: &DiagnoseArgs) -> Result<RunReport> {
    let mut config = load_config(cli, &args.common)?;
    let schema = apply_schema(&mut config, &args.data.schema)?;
    let (data, summary) = load(&config, &schema, &args.data.data)?;
    let mut report = new_report("diagnose", &config, args)?;
    report.data = Some(summary);
    let k = ocp_index(&args.data.ocp, &data)?;
    let prep = Prepared::new(&data, &config.estimator)?;
    let first = prep.first_stage(k)?;
    let reduced = ReducedProblem::new(&prep, &first)?;

    let (invalid, signs) = match (&args.invalid, &args.signs) {
        (Some(set), Some(signs)) => (set.clone(), signs.clone()),
        (set, signs) => {
            let fit = prep.adaptive_fit(&first, &reduced, None)?;
            let set = set.clone().unwrap_or(fit.selected);
            let signs = signs.clone().unwrap_or_else(|| {
                set.iter()
                    .map(|&j| {
                        if fit.alpha_m.get(j).copied().unwrap_or(0.0) < 0.0 {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect()
            });
            (set, signs)
        }
    };
    let irrepresentable = if invalid.is_empty() || invalid.len() >= data.p_z() {
        log::warn!(
            "invalid set {invalid:?} is empty or covers every TCP; irrepresentable value skipped"
        );
        None
    } else {
        Some(irrepresentable_diagnostic(
            &reduced.design,
            &invalid,
            &signs,
        )?)
    };

    let s_z = args.s_z.unwrap_or(invalid.len());
    let rip = if s_z == 0 {
        None
    } else {
        let n = data.n();
        let treat = hstack(&[
            &Matrix::from_column_slice(n, 1, data.d.as_slice()),
            &prep.xs,
        ]);
        let w_proj = Projector::new(&Matrix::from_column_slice(n, 1, first.what.as_slice()))?;
        let d_tilde = w_proj.residual(&treat);
        Some(theorem3_condition(&data.z, &first.what, &d_tilde, s_z)?)
    };
    report.diagnostics = Some(DiagnosticReport {
        irrepresentable,
        rip,
    });
    Ok(report)
}
