use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use faultline_core::log::{LogRecord, TrajectoryLog};
use faultline_core::rollout::record_step;
use faultline_core::{RewardSpec, Simulator, Step};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::run::write_json;
use crate::with_sim;

pub const RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    /// 1-based step index.
    pub t: usize,
    pub field: String,
    pub logged: String,
    pub replayed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub run_id: Option<String>,
    pub config_hash_matches: bool,
    pub steps_logged: usize,
    pub steps_replayed: usize,
    pub matches: bool,
    pub mismatches: Vec<Mismatch>,
}

fn close(a: f64, b: f64) -> bool {
    a == b
        || (a.is_finite()
            && b.is_finite()
            && (a - b).abs() <= RELATIVE_TOLERANCE * a.abs().max(b.abs()))
}

/// Re-executes the logged actions and compares every recorded field.
pub fn verify<S: Simulator>(
    sim: &S,
    spec: &RewardSpec,
    log: &TrajectoryLog,
) -> (usize, Vec<Mismatch>) {
    let mut sim = sim.clone();
    let mut out = Vec::new();
    if let Err(e) = sim.reset() {
        out.push(mismatch(0, "initialize", String::new(), e.to_string()));
        return (0, out);
    }
    let mut replayed = 0;
    for rec in &log.records {
        if sim.is_terminal() {
            out.push(mismatch(
                rec.t,
                "step",
                "present".into(),
                "trajectory already terminated".into(),
            ));
            break;
        }
        let step = match record_step(&mut sim, rec.action.clone(), spec, true) {
            Ok((step, _)) => step,
            Err(e) => {
                out.push(mismatch(
                    rec.t,
                    "action",
                    rec.action.to_string(),
                    e.to_string(),
                ));
                break;
            }
        };
        replayed += 1;
        compare(rec, &step, &mut out);
    }
    if out.is_empty() && !sim.is_terminal() {
        out.push(mismatch(
            log.records.len() + 1,
            "step",
            "missing".into(),
            "trajectory continues".into(),
        ));
    }
    (replayed, out)
}

fn mismatch(t: usize, field: &str, logged: String, replayed: String) -> Mismatch {
    Mismatch {
        t,
        field: field.into(),
        logged,
        replayed,
    }
}

fn compare(rec: &LogRecord, step: &Step, out: &mut Vec<Mismatch>) {
    let mut push = |t, field, logged, replayed| out.push(mismatch(t, field, logged, replayed));
    if !close(rec.reward, step.reward) {
        push(
            rec.t,
            "reward",
            rec.reward.to_string(),
            step.reward.to_string(),
        );
    }
    if !close(rec.action_log_likelihood, step.action_log_likelihood) {
        push(
            rec.t,
            "action_log_likelihood",
            rec.action_log_likelihood.to_string(),
            step.action_log_likelihood.to_string(),
        );
    }
    if rec.event != step.event {
        push(
            rec.t,
            "event",
            rec.event.to_string(),
            step.event.to_string(),
        );
    }
    if rec.terminal != step.terminal {
        push(
            rec.t,
            "terminal",
            rec.terminal.to_string(),
            step.terminal.to_string(),
        );
    }
    if rec.state != step.state {
        push(
            rec.t,
            "state",
            format!("{} bytes", rec.state.len()),
            format!("{} bytes", step.state.len()),
        );
    }
}

pub fn read_log(path: &Path) -> CliResult<TrajectoryLog> {
    let file = File::open(path)
        .map_err(|e| CliError::io(format!("cannot read log {}", path.display()), e))?;
    let log = TrajectoryLog::read_from(BufReader::new(file))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    for (i, r) in log.records.iter().enumerate() {
        if r.t != i + 1 {
            return Err(CliError::Runtime(format!(
                "{}: corrupt log, record {} has step index {}",
                path.display(),
                i + 1,
                r.t
            )));
        }
        if r.run_id != log.records[0].run_id {
            return Err(CliError::Runtime(format!(
                "{}: corrupt log, run_id changes at step {}",
                path.display(),
                r.t
            )));
        }
    }
    Ok(log)
}

/// Returns the exit code: 0 when every step matches, 2 otherwise.
pub fn cmd_replay(
    log_path: &Path,
    config_path: &Path,
    allow_hash_mismatch: bool,
    report_path: Option<PathBuf>,
) -> CliResult<i32> {
    let cfg = RunConfig::load(config_path)?;
    let log = read_log(log_path)?;
    let hash_matches = log.config_hash.as_deref() == Some(cfg.hash.as_str());
    if !hash_matches {
        let logged = log.config_hash.as_deref().unwrap_or("none");
        let msg = format!(
            "config hash mismatch: log was produced with {logged}, {} hashes to {}",
            config_path.display(),
            cfg.hash
        );
        if !allow_hash_mismatch {
            return Err(CliError::Invalid(format!(
                "{msg} (pass --allow-hash-mismatch to replay anyway)"
            )));
        }
        eprintln!("warning: {msg}");
    }

    let (steps_replayed, mismatches) =
        with_sim!(&cfg.scenario, sim => verify(sim, &cfg.reward, &log));
    let report = ReplayReport {
        run_id: log.records.first().map(|r| r.run_id.clone()),
        config_hash_matches: hash_matches,
        steps_logged: log.records.len(),
        steps_replayed,
        matches: mismatches.is_empty(),
        mismatches,
    };

    if report.matches {
        println!("match: {} steps reproduced", report.steps_replayed);
    } else {
        println!("mismatch: {} difference(s)", report.mismatches.len());
        for m in &report.mismatches {
            println!(
                "  step {}: {} logged {} replayed {}",
                m.t, m.field, m.logged, m.replayed
            );
        }
    }
    if let Some(path) = report_path {
        write_json(&path, &report)?;
    }
    Ok(if report.matches { 0 } else { 2 })
}
