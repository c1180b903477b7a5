use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use faultline_core::float_serde;
use faultline_core::log::TrajectoryLog;
use faultline_core::SolverReport;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const OUTPUT_ENV: &str = "FAULTLINE_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "runs";

pub const LOG_FILE: &str = "best_trajectory.log";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.json";
pub const CURVE_FILE: &str = "best_reward_curve.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub config_hash: String,
    pub scenario: String,
    pub solver: String,
    #[serde(with = "float_serde")]
    pub best_total_reward: f64,
    #[serde(with = "float_serde")]
    pub best_log_likelihood: f64,
    pub found_event: bool,
    pub first_event_iteration: Option<u64>,
    pub iterations_used: u64,
    pub sim_steps_used: u64,
    pub wall_time_seconds: f64,
}

/// Output root: the flag, then the environment, then the config.
pub fn output_root(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

pub fn cmd_run(
    config_path: &Path,
    output_dir: Option<PathBuf>,
    run_id: Option<String>,
) -> CliResult<PathBuf> {
    let cfg = RunConfig::load(config_path)?;
    let run_id = run_id
        .or_else(|| cfg.run_id.clone())
        .unwrap_or_else(|| cfg.default_run_id());
    if run_id.is_empty() || run_id.contains(['\t', '\n', '/', '\\']) {
        return Err(CliError::Invalid(
            "run_id: must be non-empty without tabs, newlines or path separators".into(),
        ));
    }
    let dir = output_root(output_dir, &cfg).join(&run_id);

    let start = Instant::now();
    let report = cfg.solve()?;
    let wall = start.elapsed().as_secs_f64();

    let traj = &report.best_trajectory;
    let summary = RunSummary {
        run_id: run_id.clone(),
        config_hash: cfg.hash.clone(),
        scenario: cfg.scenario_kind.name().into(),
        solver: cfg.solver.name().into(),
        best_total_reward: traj.total_reward,
        best_log_likelihood: traj.total_log_likelihood,
        found_event: traj.found_event,
        first_event_iteration: report.first_event_iteration,
        iterations_used: report.iterations_used,
        sim_steps_used: report.sim_steps_used,
        wall_time_seconds: wall,
    };

    fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    let log = TrajectoryLog::from_trajectory(&run_id, Some(&cfg.hash), traj);
    write_file(&dir.join(LOG_FILE), |w| log.write_to(w))?;
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    write_json(&dir.join(REPORT_FILE), &report)?;
    write_file(&dir.join(CURVE_FILE), |w| write_curve(&report, w))?;

    println!("run_id        {}", summary.run_id);
    println!("found_event   {}", summary.found_event);
    println!("best_reward   {}", summary.best_total_reward);
    println!("best_loglik   {}", summary.best_log_likelihood);
    match summary.first_event_iteration {
        Some(i) => println!("first_event   iteration {i}"),
        None => println!("first_event   none"),
    }
    println!("iterations    {}", summary.iterations_used);
    println!("output        {}", dir.display());
    Ok(dir)
}

pub fn write_curve<W: Write>(report: &SolverReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "iteration\tbest_total_reward")?;
    for (i, r) in &report.best_reward_curve {
        writeln!(w, "{i}\t{r}")?;
    }
    Ok(())
}

pub fn write_file<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let err = |e| CliError::io(format!("cannot write {}", path.display()), e);
    let file = File::create(path).map_err(err)?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(err)?;
    w.flush().map_err(err)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}
