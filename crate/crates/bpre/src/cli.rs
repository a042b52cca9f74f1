//! Command-line front end: argument parsing, experiment orchestration,
//! and run-record persistence.
//!
//! Every command writes the same artifact set into the output
//! directory:
//!
//! * `run_record.json`: command, seed, full config echo, a prefix of
//!   the realized environment records, RNG draw accounting, and a
//!   `complete` flag (written `false` up front, rewritten `true` when
//!   the pipeline finishes, so interrupted runs are visibly partial);
//! * `samples.csv`: the flat per-replicate dump with a fixed,
//!   documented column order;
//! * `report.json`: the command's summary statistics wrapped with the
//!   config echo so every report can reproduce itself;
//! * `timing.json`: wall-clock and worker count. Timing is execution
//!   detail, not experiment identity, and is the one file excluded
//!   from the byte-identity guarantee.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 runtime failure,
//! 4 acceptance-criterion failure (`verify` only).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigBuilder, ConfigError, RunConfig};
use crate::environment::{
    validate_assumptions, AssumptionProbe, AssumptionReport, EnvError, Environment,
    EnvironmentRecord,
};
use crate::limitlab::{ln_c_n, run_limit_report, scale_by_c, LimitError, LimitReport, LimitRunSpec};
use crate::pgf::LawError;
use crate::population::{simulate_trajectory, StepMode, Trajectory};
use crate::regularity::{
    check_sufficient_criterion, classify_process, ProcessVerdict, SufficientReport, Verdict,
};
use crate::report::{
    cell_f64, cell_opt_u64, cell_u64, cell_usize, write_bytes, write_json, CsvBuilder, ReportError,
};
use crate::stats::{ks_uniform, KsResult};
use crate::verify::{self, CriterionResult};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

/// How many per-replicate environments the run record captures, and how
/// deep. Records are provenance samples; the seed reproduces the rest.
const RECORDED_ENVIRONMENTS: u64 = 8;
const RECORDED_LEVELS: usize = 40;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{failed} acceptance criterion(s) failed")]
    Acceptance { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Acceptance { .. } => EXIT_ACCEPTANCE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(err: ReportError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<EnvError> for CliError {
    fn from(err: EnvError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<LawError> for CliError {
    fn from(err: LawError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<LimitError> for CliError {
    fn from(err: LimitError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bpre",
    version,
    about = "Branching processes in random environments: simulation, regularity, and limit laws"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Simulate quenched trajectories and dump per-level records.
    Simulate(CommonArgs),
    /// Classify regularity over the s grid on sampled environments.
    Classify(CommonArgs),
    /// Estimate limit statistics: Y law, normalized limits, functional
    /// equation residuals, growth taxonomy.
    Limits(CommonArgs),
    /// Run the acceptance suite; nonzero exit on any criterion failure.
    Verify(CommonArgs),
    /// Replay a recorded run and regenerate its artifacts.
    Report(CommonArgs),
}

/// Flags mirror config keys one-to-one and override file values.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Config file with flat `key = value` entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed; every stream in the run derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates (trajectories, or environments for classify).
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Generation cap n_max per trajectory.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Worker threads. Output bytes never depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for run_record.json, samples.csv, report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Offspring model kind: sibuya | cycle (config key model.kind).
    #[arg(long)]
    pub model: Option<String>,
    /// Lower edge of the tail-exponent range (model.alpha_min).
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Upper edge of the tail-exponent range (model.alpha_max).
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Single evaluation point s (config key s).
    #[arg(long)]
    pub s: Option<f64>,
    /// Comma-separated evaluation grid (config key s_grid).
    #[arg(long)]
    pub s_grid: Option<String>,
}

/// Merge defaults, config file, and flag overrides into a RunConfig.
pub fn resolve(args: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let mut builder = ConfigBuilder::default();
    if let Some(path) = &args.config {
        builder.load_file(path)?;
    }
    if let Some(model) = &args.model {
        builder.set("model.kind", model)?;
    }
    if let Some(v) = args.alpha_min {
        builder.set("model.alpha_min", &v.to_string())?;
    }
    if let Some(v) = args.alpha_max {
        builder.set("model.alpha_max", &v.to_string())?;
    }
    if let Some(v) = args.seed {
        builder.set("seed", &v.to_string())?;
    }
    if let Some(v) = args.replicates {
        builder.set("replicates", &v.to_string())?;
    }
    if let Some(v) = args.generations {
        builder.set("generations", &v.to_string())?;
    }
    if let Some(v) = args.workers {
        builder.set("workers", &v.to_string())?;
    }
    if let Some(path) = &args.out {
        builder.set("out", &path.display().to_string())?;
    }
    if let Some(v) = args.s {
        builder.set("s", &v.to_string())?;
    }
    if let Some(grid) = &args.s_grid {
        builder.set("s_grid", grid)?;
    }
    builder.finish()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        CliCommand::Simulate(args) => execute_simulate(&resolve(&args)?),
        CliCommand::Classify(args) => execute_classify(&resolve(&args)?),
        CliCommand::Limits(args) => execute_limits(&resolve(&args)?),
        CliCommand::Verify(args) => execute_verify(&resolve(&args)?),
        CliCommand::Report(args) => execute_report(&resolve(&args)?),
    }
}

/// Deterministic RNG consumption totals for the run.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngAccounting {
    pub offspring_draws: u64,
    pub stable_draws: u64,
}

/// The reproducibility record every command writes first (incomplete)
/// and last (complete).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub complete: bool,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub environments_total: u64,
    pub environments: Vec<EnvironmentRecord>,
    pub rng: RngAccounting,
}

/// report.json wrapper: results plus everything needed to reproduce them.
#[derive(Debug, Serialize)]
pub struct ReportFile<T> {
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub results: T,
}

#[derive(Debug, Serialize)]
struct Timing {
    command: String,
    workers: usize,
    wall_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub replicates: u64,
    pub stabilized: u64,
    pub truncated: u64,
    pub mean_levels: f64,
    pub mean_final_ln_z: f64,
    /// KS of final Y against Uniform(0,1) over non-truncated runs;
    /// uniform exactly when the process is regular.
    pub ks_y_uniform: Option<KsResult>,
}

#[derive(Debug, Serialize)]
pub struct ClassifySummary {
    pub environments: u64,
    pub s_grid: Vec<f64>,
    pub process_regular: u64,
    pub process_irregular: u64,
    pub process_inconclusive: u64,
    pub fraction_regular: f64,
    pub point_regular: u64,
    pub point_irregular: u64,
    pub point_inconclusive: u64,
    pub assumptions: AssumptionReport,
    pub sufficient: SufficientReport,
}

#[derive(Debug, Serialize)]
pub struct VerifySummary {
    pub passed: usize,
    pub failed: usize,
    pub criteria: Vec<CriterionResult>,
}

fn with_pool<T: Send>(workers: usize, task: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|err| CliError::Runtime(format!("worker pool: {err}")))?;
    Ok(pool.install(task))
}

fn mode_cell(mode: StepMode) -> &'static str {
    match mode {
        StepMode::Exact => "exact",
        StepMode::Asymptotic => "asymptotic",
    }
}

fn verdict_cell(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Regular => "regular",
        Verdict::Irregular => "irregular",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Record a provenance prefix of the per-replicate environments.
fn record_environments(config: &RunConfig) -> Result<Vec<EnvironmentRecord>, CliError> {
    let keep = config.replicates.min(RECORDED_ENVIRONMENTS);
    let levels = config.generations.clamp(1, RECORDED_LEVELS);
    let mut records = Vec::with_capacity(keep as usize);
    for r in 0..keep {
        let env = Environment::new(config.model.clone(), config.seed, r)?;
        records.push(env.record(levels));
    }
    Ok(records)
}

fn write_record(
    config: &RunConfig,
    command: &str,
    complete: bool,
    environments: Vec<EnvironmentRecord>,
    rng: RngAccounting,
) -> Result<(), CliError> {
    let record = RunRecord {
        command: command.to_string(),
        complete,
        seed: config.seed,
        config: config.echo(),
        environments_total: config.replicates,
        environments,
        rng,
    };
    write_json(&config.out, "run_record.json", &record)?;
    Ok(())
}

fn write_report_file<T: Serialize>(
    config: &RunConfig,
    command: &str,
    results: T,
) -> Result<(), CliError> {
    let file = ReportFile {
        command: command.to_string(),
        seed: config.seed,
        config: config.echo(),
        results,
    };
    write_json(&config.out, "report.json", &file)?;
    Ok(())
}

fn write_timing(config: &RunConfig, command: &str, started: Instant) -> Result<(), CliError> {
    let timing = Timing {
        command: command.to_string(),
        workers: config.workers,
        wall_ms: started.elapsed().as_millis(),
    };
    write_json(&config.out, "timing.json", &timing)?;
    Ok(())
}

pub fn execute_simulate(config: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    write_record(config, "simulate", false, Vec::new(), RngAccounting::default())?;

    let trajectories = with_pool(config.workers, || -> Result<Vec<Trajectory>, EnvError> {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let env = Environment::new(config.model.clone(), config.seed, r)?;
                Ok(simulate_trajectory(&env, r, &config.sim))
            })
            .collect()
    })??;

    let mut csv = CsvBuilder::new(&["replicate", "n", "mode", "count", "ln_z", "t"]);
    let mut rng = RngAccounting::default();
    let mut stabilized = 0u64;
    let mut truncated = 0u64;
    let mut levels_total = 0usize;
    let mut final_ln_z_sum = 0.0;
    let mut final_y = Vec::new();
    for (r, traj) in trajectories.iter().enumerate() {
        rng.offspring_draws += traj.offspring_draws;
        rng.stable_draws += traj.stable_draws;
        if traj.stabilized_at.is_some() {
            stabilized += 1;
        }
        if traj.truncated {
            truncated += 1;
        } else {
            final_y.push(traj.y);
        }
        levels_total += traj.levels.len();
        final_ln_z_sum += traj.levels.last().map_or(0.0, |level| level.ln_z);
        for level in &traj.levels {
            csv.row(&[
                cell_u64(r as u64),
                cell_usize(level.n),
                mode_cell(level.mode).to_string(),
                cell_opt_u64(level.count),
                cell_f64(level.ln_z),
                cell_f64(level.t_statistic),
            ]);
        }
    }
    write_bytes(&config.out, "samples.csv", &csv.into_bytes())?;

    let replicates = config.replicates;
    let summary = SimulateSummary {
        replicates,
        stabilized,
        truncated,
        mean_levels: levels_total as f64 / replicates as f64,
        mean_final_ln_z: final_ln_z_sum / replicates as f64,
        ks_y_uniform: if final_y.is_empty() {
            None
        } else {
            Some(ks_uniform(&final_y))
        },
    };
    write_report_file(config, "simulate", summary)?;
    write_record(config, "simulate", true, record_environments(config)?, rng)?;
    write_timing(config, "simulate", started)?;
    println!(
        "simulate: {replicates} replicates ({stabilized} stabilized, {truncated} truncated) -> {}",
        config.out.display()
    );
    Ok(())
}

pub fn execute_classify(config: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    write_record(config, "classify", false, Vec::new(), RngAccounting::default())?;

    let verdicts = with_pool(config.workers, || -> Result<Vec<ProcessVerdict>, CliError> {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let env = Environment::new(config.model.clone(), config.seed, r)?;
                Ok(classify_process(&env, &config.s_grid, &config.classify)?)
            })
            .collect()
    })??;

    let mut csv = CsvBuilder::new(&["replicate", "s", "verdict", "log_q_product_final"]);
    let mut process = [0u64; 3];
    let mut point = [0u64; 3];
    let index = |v: Verdict| match v {
        Verdict::Regular => 0,
        Verdict::Irregular => 1,
        Verdict::Inconclusive => 2,
    };
    for (r, process_verdict) in verdicts.iter().enumerate() {
        process[index(process_verdict.verdict)] += 1;
        for pv in &process_verdict.points {
            point[index(pv.verdict)] += 1;
            csv.row(&[
                cell_u64(r as u64),
                cell_f64(pv.s),
                verdict_cell(pv.verdict).to_string(),
                pv.log_q_products.last().map(|&q| cell_f64(q)).unwrap_or_default(),
            ]);
        }
    }
    write_bytes(&config.out, "samples.csv", &csv.into_bytes())?;

    let assumptions = validate_assumptions(&config.model, config.seed, &AssumptionProbe::default());
    let sufficient =
        check_sufficient_criterion(&config.model, config.seed, config.replicates.min(100))?;
    let summary = ClassifySummary {
        environments: config.replicates,
        s_grid: config.s_grid.clone(),
        process_regular: process[0],
        process_irregular: process[1],
        process_inconclusive: process[2],
        fraction_regular: process[0] as f64 / config.replicates as f64,
        point_regular: point[0],
        point_irregular: point[1],
        point_inconclusive: point[2],
        assumptions,
        sufficient,
    };
    let fraction = summary.fraction_regular;
    write_report_file(config, "classify", summary)?;
    write_record(
        config,
        "classify",
        true,
        record_environments(config)?,
        RngAccounting::default(),
    )?;
    write_timing(config, "classify", started)?;
    println!(
        "classify: {} environments x {} points, {:.1}% regular -> {}",
        config.replicates,
        config.s_grid.len(),
        100.0 * fraction,
        config.out.display()
    );
    Ok(())
}

pub fn execute_limits(config: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    write_record(config, "limits", false, Vec::new(), RngAccounting::default())?;

    let spec = LimitRunSpec {
        replicates: config.replicates,
        sim: config.sim.clone(),
        scheme: config.scheme,
        s_grid: config.s_grid.clone(),
        u_grid: config.u_grid.clone(),
        fe_environments: config.fe_environments,
        n_profile: 30,
    };
    let (report, rows): (LimitReport, Vec<(Trajectory, f64)>) =
        with_pool(config.workers, || -> Result<_, CliError> {
            let report = run_limit_report(&config.model, config.seed, &spec)?;
            let rows = (0..config.replicates)
                .into_par_iter()
                .map(|r| -> Result<(Trajectory, f64), CliError> {
                    let env = Environment::new(config.model.clone(), config.seed, r)?;
                    let traj = simulate_trajectory(&env, r, &config.sim);
                    let final_n = traj.levels.last().map_or(0, |level| level.n);
                    let ln_c = ln_c_n(&env, &config.scheme.c_n, final_n)?;
                    Ok((traj, ln_c))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((report, rows))
        })??;

    let mut csv = CsvBuilder::new(&["replicate", "final_n", "mode", "y", "t", "normalized"]);
    let mut rng = RngAccounting::default();
    for (r, (traj, ln_c)) in rows.iter().enumerate() {
        rng.offspring_draws += traj.offspring_draws;
        rng.stable_draws += traj.stable_draws;
        let last = traj.levels.last();
        csv.row(&[
            cell_u64(r as u64),
            cell_usize(last.map_or(0, |level| level.n)),
            last.map_or("exact", |level| mode_cell(level.mode)).to_string(),
            cell_f64(traj.y),
            cell_f64(traj.t),
            cell_f64(last.map_or(0.0, |level| scale_by_c(level.ln_z, *ln_c))),
        ]);
    }
    write_bytes(&config.out, "samples.csv", &csv.into_bytes())?;

    let ks = report.y.ks_uniform.statistic;
    write_report_file(config, "limits", report)?;
    write_record(config, "limits", true, record_environments(config)?, rng)?;
    write_timing(config, "limits", started)?;
    println!(
        "limits: {} replicates, KS(Y vs uniform) = {ks:.4} -> {}",
        config.replicates,
        config.out.display()
    );
    Ok(())
}

pub fn execute_verify(config: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    write_record(config, "verify", false, Vec::new(), RngAccounting::default())?;

    let criteria = verify::run_all();
    let mut csv = CsvBuilder::new(&["criterion", "pass", "detail"]);
    let mut failed = 0usize;
    for criterion in &criteria {
        println!(
            "{} {}  {}",
            criterion.id,
            if criterion.pass { "PASS" } else { "FAIL" },
            criterion.detail
        );
        if !criterion.pass {
            failed += 1;
        }
        csv.row(&[
            criterion.id.to_string(),
            u64::from(criterion.pass).to_string(),
            // commas in free text would break the flat format
            criterion.detail.replace(',', ";"),
        ]);
    }
    write_bytes(&config.out, "samples.csv", &csv.into_bytes())?;

    let summary = VerifySummary {
        passed: criteria.len() - failed,
        failed,
        criteria,
    };
    write_report_file(config, "verify", summary)?;
    write_record(
        config,
        "verify",
        true,
        Vec::new(),
        RngAccounting::default(),
    )?;
    write_timing(config, "verify", started)?;
    if failed > 0 {
        Err(CliError::Acceptance { failed })
    } else {
        println!("verify: all criteria passed -> {}", config.out.display());
        Ok(())
    }
}

/// Replay the run recorded in `--out`: re-validate its environment
/// records, rebuild the effective config from the echo, rerun the
/// recorded command, and rewrite the artifacts in place.
pub fn execute_report(config: &RunConfig) -> Result<(), CliError> {
    let record_path = config.out.join("run_record.json");
    let text = std::fs::read_to_string(&record_path).map_err(|err| {
        CliError::Runtime(format!("cannot read {}: {err}", record_path.display()))
    })?;
    let record: RunRecord = serde_json::from_str(&text)
        .map_err(|err| CliError::Runtime(format!("{} is not a run record: {err}", record_path.display())))?;

    for (idx, env_record) in record.environments.iter().enumerate() {
        env_record.reconstruct().map_err(|err| {
            CliError::Runtime(format!("environment record {idx} fails to reconstruct: {err}"))
        })?;
    }

    let mut builder = ConfigBuilder::default();
    for (key, value) in &record.config {
        builder
            .set(key, value)
            .map_err(|err| CliError::Runtime(format!("recorded config is invalid: {err}")))?;
    }
    builder
        .set("out", &config.out.display().to_string())
        .expect("out is a known key");
    builder
        .set("workers", &config.workers.to_string())
        .expect("workers is a known key");
    let replay = builder
        .finish()
        .map_err(|err| CliError::Runtime(format!("recorded config is invalid: {err}")))?;

    if !record.complete {
        println!("report: record was incomplete; regenerating from scratch");
    }
    println!(
        "report: replaying `{}` (seed {}) into {}",
        record.command,
        replay.seed,
        replay.out.display()
    );
    match record.command.as_str() {
        "simulate" => execute_simulate(&replay),
        "classify" => execute_classify(&replay),
        "limits" => execute_limits(&replay),
        "verify" => execute_verify(&replay),
        other => Err(CliError::Runtime(format!(
            "cannot replay a `{other}` record"
        ))),
    }
}
