use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::run::{write_json, RunSummary, OUTPUT_ENV};

const DEFAULT_FILE: &str = "comparison.json";

pub fn read_summary(path: &Path) -> CliResult<RunSummary> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read summary {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: unreadable summary: {e}", path.display())))
}

/// Best reward first; equal rewards fall back to run_id order.
pub fn rank(summaries: &mut [RunSummary]) {
    summaries.sort_by(|a, b| {
        b.best_total_reward
            .total_cmp(&a.best_total_reward)
            .then_with(|| a.run_id.cmp(&b.run_id))
    });
}

pub fn table(rows: &[RunSummary]) -> String {
    let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
    let mut lines = vec![[
        "rank".to_string(),
        "run_id".into(),
        "best_total_reward".into(),
        "best_log_likelihood".into(),
        "first_event_iteration".into(),
        "wall_time_s".into(),
    ]];
    for (i, s) in rows.iter().enumerate() {
        lines.push([
            (i + 1).to_string(),
            s.run_id.clone(),
            format!("{:.6}", s.best_total_reward),
            format!("{:.6}", s.best_log_likelihood),
            opt(s.first_event_iteration),
            format!("{:.3}", s.wall_time_seconds),
        ]);
    }
    let widths: Vec<usize> = (0..6)
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn cmd_compare(paths: &[PathBuf], output: Option<PathBuf>) -> CliResult<PathBuf> {
    if paths.len() < 2 {
        return Err(CliError::Invalid(format!(
            "compare needs at least 2 summaries, got {}",
            paths.len()
        )));
    }
    let mut rows = paths
        .iter()
        .map(|p| read_summary(p))
        .collect::<CliResult<Vec<_>>>()?;
    rank(&mut rows);
    print!("{}", table(&rows));

    let out = output.unwrap_or_else(|| {
        std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_default()
            .join(DEFAULT_FILE)
    });
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(format!("cannot create {}", parent.display()), e))?;
    }
    write_json(&out, &rows)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(id: &str, reward: f64) -> RunSummary {
        RunSummary {
            run_id: id.into(),
            config_hash: String::new(),
            scenario: "cartpole".into(),
            solver: "mcts".into(),
            best_total_reward: reward,
            best_log_likelihood: reward,
            found_event: true,
            first_event_iteration: Some(3),
            iterations_used: 10,
            sim_steps_used: 100,
            wall_time_seconds: 0.5,
        }
    }

    #[test]
    fn ranking_breaks_ties_by_run_id() {
        let mut rows = vec![
            summary("b", -5.0),
            summary("c", f64::NEG_INFINITY),
            summary("a", -5.0),
            summary("d", -1.0),
        ];
        rank(&mut rows);
        let ids: Vec<_> = rows.iter().map(|r| r.run_id.as_str()).collect();
        assert_eq!(ids, ["d", "a", "b", "c"]);
    }

    #[test]
    fn table_has_a_row_per_run() {
        let t = table(&[summary("x", -1.0), summary("y", -2.0)]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().nth(1).unwrap().starts_with("1     x"));
    }
}
