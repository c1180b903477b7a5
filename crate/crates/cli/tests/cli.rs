use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CARTPOLE: &str = r#"
scenario = "cartpole"
rng_seed = 1
budget = 50000

[solver]
kind = "mcts"
"#;

fn faultline(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faultline"))
        .args(args)
        .current_dir(dir)
        .env_remove("FAULTLINE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Runs `config` into `<dir>/out` and returns the run directory.
fn run(dir: &Path, name: &str, config: &str, extra: &[&str]) -> PathBuf {
    write(dir, name, config);
    let mut args = vec!["run", name, "--output-dir", "out"];
    args.extend_from_slice(extra);
    let o = faultline(&args, dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("output").map(|s| s.trim().to_string()))
        .expect("output line");
    dir.join(line)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cartpole_run_reports_a_failure() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "cp.toml", CARTPOLE, &[]);
    assert!(out.ends_with("out/cartpole-mcts-s1"));
    for f in [
        "best_trajectory.log",
        "summary.json",
        "report.json",
        "best_reward_curve.tsv",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["found_event"], true);
    assert_eq!(summary["run_id"], "cartpole-mcts-s1");
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    assert!(summary["first_event_iteration"].as_u64().is_some());
}

#[test]
fn negative_beta_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "bad.toml",
        &format!("{CARTPOLE}\n[reward]\nbeta = -1.0\n"),
    );
    let o = faultline(&["run", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("beta"), "{}", stderr(&o));
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn unknown_scenario_lists_the_valid_ones() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "bad.toml",
        &CARTPOLE.replace("cartpole", "unicycle"),
    );
    let o = faultline(&["run", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for name in ["cartpole", "crosswalk", "encounter", "custom-discrete"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn cem_on_seed_actions_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = "scenario = \"encounter\"\nrng_seed = 0\nbudget = 100\n[solver]\nkind = \"cem\"\n";
    write(tmp.path(), "enc.toml", cfg);
    let o = faultline(&["run", "enc.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("cem requires continuous"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_config_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let o = faultline(&["run", "nope.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_matches_and_catches_edits() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "cp.toml", CARTPOLE, &[]);
    let log = out.join("best_trajectory.log");
    let log_arg = log.to_str().unwrap();

    let o = faultline(&["replay", log_arg, "--config", "cp.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("match"));

    // edit the reward of the fourth step
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cols: Vec<String> = lines[5].split('\t').map(str::to_string).collect();
    assert_eq!(cols[1], "4");
    cols[4] = "-0.125".into();
    lines[5] = cols.join("\t");
    let edited = write(tmp.path(), "edited.log", &(lines.join("\n") + "\n"));

    let o = faultline(
        &[
            "replay",
            edited.to_str().unwrap(),
            "--config",
            "cp.toml",
            "--report",
            "verdict.json",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("step 4: reward"), "{}", stdout(&o));
    let verdict = json(&tmp.path().join("verdict.json"));
    assert_eq!(verdict["matches"], false);
    let mismatches = verdict["mismatches"].as_array().unwrap();
    assert_eq!(mismatches.len(), 1);
    assert_eq!(mismatches[0]["t"], 4);
    assert_eq!(mismatches[0]["field"], "reward");
}

#[test]
fn replay_verdicts_are_identical_across_invocations() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "cp.toml", CARTPOLE, &[]);
    let log = out.join("best_trajectory.log");
    let verdict = |name: &str| {
        let o = faultline(
            &[
                "replay",
                log.to_str().unwrap(),
                "--config",
                "cp.toml",
                "--report",
                name,
            ],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(0));
        fs::read(tmp.path().join(name)).unwrap()
    };
    assert_eq!(verdict("a.json"), verdict("b.json"));
}

#[test]
fn replay_checks_the_config_hash() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "cp.toml", CARTPOLE, &[]);
    let log = out.join("best_trajectory.log");
    // same run, different bytes
    write(
        tmp.path(),
        "other.toml",
        &format!("{CARTPOLE}\n# comment\n"),
    );
    let args = ["replay", log.to_str().unwrap(), "--config", "other.toml"];
    let o = faultline(&args, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hash mismatch"));

    let mut args = args.to_vec();
    args.push("--allow-hash-mismatch");
    let o = faultline(&args, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn corrupt_logs_are_runtime_errors() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cp.toml", CARTPOLE);
    write(tmp.path(), "junk.log", "not a log\n");
    let o = faultline(&["replay", "junk.log", "--config", "cp.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_write_identical_logs() {
    let tmp = TempDir::new().unwrap();
    let a = run(tmp.path(), "cp.toml", CARTPOLE, &["--run-id", "a"]);
    let first = fs::read(a.join("best_trajectory.log")).unwrap();
    let b = run(tmp.path(), "cp.toml", CARTPOLE, &["--run-id", "a2"]);
    let strip = |p: &Path| {
        fs::read_to_string(p.join("best_trajectory.log"))
            .unwrap()
            .lines()
            .map(|l| l.split_once('\t').map_or(l, |(_, rest)| rest).to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    let c = run(tmp.path(), "cp.toml", CARTPOLE, &["--run-id", "a"]);
    assert_eq!(a, c);
    assert_eq!(fs::read(c.join("best_trajectory.log")).unwrap(), first);
    assert_eq!(
        fs::read(b.join("best_reward_curve.tsv")).unwrap(),
        fs::read(c.join("best_reward_curve.tsv")).unwrap()
    );
}

#[test]
fn output_dir_env_overrides_the_config() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "cp.toml",
        &CARTPOLE.replace(
            "budget = 50000",
            "budget = 500\noutput_dir = \"from-config\"",
        ),
    );
    let o = Command::new(env!("CARGO_BIN_EXE_faultline"))
        .args(["run", "cp.toml"])
        .current_dir(tmp.path())
        .env("FAULTLINE_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp
        .path()
        .join("from-env/cartpole-mcts-s1/summary.json")
        .is_file());
    assert!(!tmp.path().join("from-config").exists());

    let o = faultline(&["run", "cp.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp
        .path()
        .join("from-config/cartpole-mcts-s1/summary.json")
        .is_file());
}

#[test]
fn compare_ranks_and_breaks_ties_by_run_id() {
    let tmp = TempDir::new().unwrap();
    let a = run(tmp.path(), "cp.toml", CARTPOLE, &["--run-id", "zeta"]);
    let b = run(tmp.path(), "cp.toml", CARTPOLE, &["--run-id", "alpha"]);
    let random = CARTPOLE.replace("\"mcts\"", "\"random\"");
    let c = run(tmp.path(), "rnd.toml", &random, &[]);

    let summaries: Vec<String> = [&a, &c, &b]
        .iter()
        .map(|d| d.join("summary.json").to_str().unwrap().to_string())
        .collect();
    let mut args = vec!["compare"];
    args.extend(summaries.iter().map(String::as_str));
    args.extend(["--output", "cmp/table.json"]);
    let o = faultline(&args, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let rows = json(&tmp.path().join("cmp/table.json"));
    let rows = rows.as_array().unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r["run_id"].as_str().unwrap()).collect();
    let pos = |id| ids.iter().position(|x| *x == id).unwrap();
    assert!(pos("alpha") + 1 == pos("zeta"), "{ids:?}");
    let rewards: Vec<f64> = rows
        .iter()
        .map(|r| r["best_total_reward"].as_f64().unwrap())
        .collect();
    assert!(rewards.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn compare_needs_two_summaries() {
    let tmp = TempDir::new().unwrap();
    let a = run(tmp.path(), "cp.toml", CARTPOLE, &[]);
    let o = faultline(
        &["compare", a.join("summary.json").to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 2"));

    write(tmp.path(), "broken.json", "{");
    let o = faultline(
        &[
            "compare",
            a.join("summary.json").to_str().unwrap(),
            "broken.json",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_plot_matches_the_curve_file() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "cp.toml", CARTPOLE, &[]);
    let report = out.join("report.json");
    let o = faultline(&["export-plot", report.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let curve = fs::read_to_string(out.join("best_reward_curve.tsv")).unwrap();
    assert_eq!(stdout(&o), curve);
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("iteration\tbest_total_reward"));
    let iterations = json(&out.join("summary.json"))["iterations_used"]
        .as_u64()
        .unwrap();
    assert_eq!(lines.count() as u64, iterations);

    let o = faultline(
        &[
            "export-plot",
            report.to_str().unwrap(),
            "--output",
            "plot.tsv",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(tmp.path().join("plot.tsv")).unwrap(),
        curve
    );
}

#[test]
fn every_scenario_runs_end_to_end() {
    let configs = [
        "scenario = \"crosswalk\"\nrng_seed = 2\nbudget = 3000\n[solver]\nkind = \"cem\"\npopulation_size = 20\ngenerations = 3\n",
        "scenario = \"encounter\"\nrng_seed = 2\nbudget = 3000\n[solver]\nkind = \"random\"\n[encounter]\nhorizon = 30\n",
        "scenario = \"custom-discrete\"\nrng_seed = 2\nbudget = 1\n[solver]\nkind = \"exhaustive\"\n",
    ];
    for (i, cfg) in configs.iter().enumerate() {
        let tmp = TempDir::new().unwrap();
        let name = format!("c{i}.toml");
        let out = run(tmp.path(), &name, cfg, &[]);
        let log = out.join("best_trajectory.log");
        let o = faultline(
            &["replay", log.to_str().unwrap(), "--config", &name],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{cfg}: {}", stdout(&o));
    }
}
