//! Search algorithms maximizing summed reward over action sequences.

mod cem;
mod exhaustive;
mod mcts;
mod random;

use std::cmp::Ordering;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

pub use cem::{solve_cem, CemConfig};
pub use exhaustive::{solve_exhaustive, EXHAUSTIVE_LIMIT};
pub use mcts::{solve_mcts, MctsConfig};
pub use random::{solve_random, solve_random_with, RandomConfig, SearchBudget};

use crate::error::{Error, Result};
use crate::reward::RewardSpec;
use crate::rollout::{rollout, ActionSource};
use crate::sim::{SimRng, Simulator};
use crate::trajectory::{trajectory_compare, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub best_trajectory: Trajectory,
    /// Completed rollouts.
    pub iterations_used: u64,
    pub sim_steps_used: u64,
    /// `(iteration, highest total reward so far)`, one point per iteration.
    /// This equals the best trajectory's reward whenever `alpha` is large
    /// enough that every event trajectory outscores every miss.
    #[serde(with = "crate::float_serde::curve")]
    pub best_reward_curve: Vec<(u64, f64)>,
    /// 1-based iteration at which an event trajectory was first seen.
    pub first_event_iteration: Option<u64>,
}

impl SolverReport {
    pub fn best_total_reward(&self) -> f64 {
        self.best_trajectory.total_reward
    }
}

/// Keeps the best trajectory and the anytime curve while a solver runs.
#[derive(Debug, Default)]
pub(crate) struct BestTracker {
    best: Option<Trajectory>,
    curve: Vec<(u64, f64)>,
    first_event: Option<u64>,
    max_reward: Option<f64>,
    iterations: u64,
    steps: u64,
}

impl BestTracker {
    pub fn observe(&mut self, traj: Trajectory) {
        self.iterations += 1;
        self.steps += traj.len() as u64;
        if traj.found_event && self.first_event.is_none() {
            self.first_event = Some(self.iterations);
        }
        let traj_reward = traj.total_reward;
        let better = match &self.best {
            None => true,
            Some(b) => trajectory_compare(&traj, b) == Ordering::Greater,
        };
        if better {
            self.best = Some(traj);
        }
        let max = self.max_reward.map_or(traj_reward, |m| m.max(traj_reward));
        self.max_reward = Some(max);
        self.curve.push((self.iterations, max));
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Builds the report, replaying the best action sequence once more to
    /// attach state snapshots. The replay is not charged to the budget.
    pub fn finish<S: Simulator>(self, sim: &mut S, spec: &RewardSpec) -> Result<SolverReport> {
        let best = self.best.ok_or(Error::NoCompletedRollout)?;
        let s0 = sim.initial_state();
        let actions = best.actions();
        let replayed = rollout(sim, ActionSource::Fixed(&actions), spec, &s0)?;
        debug_assert_eq!(replayed.total_reward.to_bits(), best.total_reward.to_bits());
        Ok(SolverReport {
            best_trajectory: replayed,
            iterations_used: self.iterations,
            sim_steps_used: self.steps,
            best_reward_curve: self.curve,
            first_event_iteration: self.first_event,
        })
    }
}

/// Independent generator for substream `stream` of `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Merges reports of independent searches that ran side by side. Iteration
/// `i` of search `k` becomes global iteration `(i - 1) * n + k + 1`.
pub(crate) fn merge_reports(reports: Vec<SolverReport>) -> SolverReport {
    let n = reports.len() as u64;
    let mut points: Vec<(u64, f64)> = Vec::new();
    let mut first_event: Option<u64> = None;
    let mut best: Option<Trajectory> = None;
    let (mut iterations, mut steps) = (0, 0);
    for (k, r) in reports.into_iter().enumerate() {
        let k = k as u64;
        let global = |i: u64| (i - 1) * n + k + 1;
        points.extend(r.best_reward_curve.iter().map(|&(i, v)| (global(i), v)));
        if let Some(i) = r.first_event_iteration {
            let g = global(i);
            first_event = Some(first_event.map_or(g, |f| f.min(g)));
        }
        iterations += r.iterations_used;
        steps += r.sim_steps_used;
        let better = match &best {
            None => true,
            Some(b) => trajectory_compare(&r.best_trajectory, b) == Ordering::Greater,
        };
        if better {
            best = Some(r.best_trajectory);
        }
    }
    points.sort_by_key(|p| p.0);
    let mut running = f64::NEG_INFINITY;
    let mut curve = Vec::with_capacity(points.len());
    for (i, (_, v)) in points.into_iter().enumerate() {
        running = running.max(v);
        curve.push((i as u64 + 1, running));
    }
    SolverReport {
        best_trajectory: best.expect("at least one report"),
        iterations_used: iterations,
        sim_steps_used: steps,
        best_reward_curve: curve,
        first_event_iteration: first_event,
    }
}
