//! Line-delimited trajectory log.
//!
//! ```text
//! # faultline-trajectory v1 config_hash=<hex or ->
//! run_id t state_b64 action reward action_log_likelihood event terminal
//! <one tab-separated record per step>
//! ```
//!
//! `t` is the 1-based step index. Reals use shortest round-trip formatting,
//! so a log read back reproduces the recorded values bit for bit.

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;

use crate::action::EnvironmentAction;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub const MAGIC: &str = "# faultline-trajectory v1";
pub const COLUMNS: [&str; 8] = [
    "run_id",
    "t",
    "state_b64",
    "action",
    "reward",
    "action_log_likelihood",
    "event",
    "terminal",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub run_id: String,
    pub t: usize,
    pub state: Vec<u8>,
    pub action: EnvironmentAction,
    pub reward: f64,
    pub action_log_likelihood: f64,
    pub event: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub config_hash: Option<String>,
    pub records: Vec<LogRecord>,
}

impl TrajectoryLog {
    pub fn from_trajectory(run_id: &str, config_hash: Option<&str>, traj: &Trajectory) -> Self {
        let records = traj
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| LogRecord {
                run_id: run_id.to_string(),
                t: i + 1,
                state: s.state.clone(),
                action: s.action.clone(),
                reward: s.reward,
                action_log_likelihood: s.action_log_likelihood,
                event: s.event,
                terminal: s.terminal,
            })
            .collect();
        TrajectoryLog {
            config_hash: config_hash.map(str::to_string),
            records,
        }
    }

    pub fn actions(&self) -> Vec<EnvironmentAction> {
        self.records.iter().map(|r| r.action.clone()).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{MAGIC} config_hash={}",
            self.config_hash.as_deref().unwrap_or("-")
        )?;
        writeln!(w, "{}", COLUMNS.join("\t"))?;
        for r in &self.records {
            if r.run_id.contains(['\t', '\n']) {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    "run_id may not contain tabs or newlines",
                ));
            }
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.run_id,
                r.t,
                B64.encode(&r.state),
                r.action,
                r.reward,
                r.action_log_likelihood,
                r.event,
                r.terminal
            )?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let io = |e: std::io::Error| Error::Log(e.to_string());

        let (_, first) = lines.next().ok_or_else(|| Error::Log("empty log".into()))?;
        let first = first.map_err(io)?;
        let rest = first
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::Log("missing log preamble".into()))?;
        let hash = rest
            .trim()
            .strip_prefix("config_hash=")
            .ok_or_else(|| Error::Log("missing config_hash in preamble".into()))?;
        let config_hash = (hash != "-").then(|| hash.to_string());

        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Log("missing header".into()))?;
        if header.map_err(io)? != COLUMNS.join("\t") {
            return Err(Error::Log("unexpected column header".into()));
        }

        let mut records = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(io)?;
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Log(format!("line {}: bad {what}", lineno + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != COLUMNS.len() {
                return Err(bad("field count"));
            }
            records.push(LogRecord {
                run_id: fields[0].to_string(),
                t: fields[1].parse().map_err(|_| bad("t"))?,
                state: B64.decode(fields[2]).map_err(|_| bad("state_b64"))?,
                action: fields[3].parse().map_err(|_| bad("action"))?,
                reward: fields[4].parse().map_err(|_| bad("reward"))?,
                action_log_likelihood: fields[5]
                    .parse()
                    .map_err(|_| bad("action_log_likelihood"))?,
                event: fields[6].parse().map_err(|_| bad("event"))?,
                terminal: fields[7].parse().map_err(|_| bad("terminal"))?,
            });
        }
        for (i, rec) in records.iter().enumerate() {
            if rec.t != i + 1 {
                return Err(Error::Log(format!(
                    "step indices out of order at record {}",
                    i + 1
                )));
            }
        }
        Ok(TrajectoryLog {
            config_hash,
            records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Step;
    use proptest::prelude::*;

    fn sample() -> Trajectory {
        let mut t = Trajectory::default();
        t.push(Step {
            state: vec![1, 2, 3],
            action: EnvironmentAction::Continuous(vec![0.1, -2.5e-7]),
            reward: -1.2345678901234567,
            action_log_likelihood: -1.2345678901234567,
            event: false,
            terminal: false,
        });
        t.push(Step {
            state: b"{\"x\":1}".to_vec(),
            action: EnvironmentAction::Seed(u64::MAX),
            reward: f64::NEG_INFINITY,
            action_log_likelihood: -0.1,
            event: false,
            terminal: true,
        });
        t
    }

    #[test]
    fn header_is_documented_and_stable() {
        let log = TrajectoryLog::from_trajectory("run-1", Some("abc"), &sample());
        let mut buf = Vec::new();
        log.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("# faultline-trajectory v1 config_hash=abc")
        );
        assert_eq!(
            lines.next(),
            Some("run_id\tt\tstate_b64\taction\treward\taction_log_likelihood\tevent\tterminal")
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn reads_back_what_was_written() {
        let log = TrajectoryLog::from_trajectory("run-1", None, &sample());
        let mut buf = Vec::new();
        log.write_to(&mut buf).unwrap();
        let back = TrajectoryLog::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn corrupted_lines_are_rejected() {
        let log = TrajectoryLog::from_trajectory("run-1", None, &sample());
        let mut buf = Vec::new();
        log.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("c:0.1", "c:zero");
        assert!(TrajectoryLog::read_from(text.as_bytes()).is_err());
        assert!(TrajectoryLog::read_from("garbage\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn reals_survive_the_text_format(reward in any::<f64>().prop_filter("nan", |x| !x.is_nan()), ll in -1e6f64..0.0) {
            let mut t = Trajectory::default();
            t.push(Step { state: vec![], action: EnvironmentAction::Discrete(1), reward, action_log_likelihood: ll, event: true, terminal: true });
            let log = TrajectoryLog::from_trajectory("r", Some("h"), &t);
            let mut buf = Vec::new();
            log.write_to(&mut buf).unwrap();
            let back = TrajectoryLog::read_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back.records[0].reward.to_bits(), reward.to_bits());
            prop_assert_eq!(back.records[0].action_log_likelihood.to_bits(), ll.to_bits());
        }
    }
}
