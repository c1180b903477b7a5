use serde::{Deserialize, Serialize};

use super::{stream_rng, BestTracker, SolverReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::reward::RewardSpec;
use crate::rollout::{run_to_terminal, ActionSource};
use crate::sim::Simulator;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchBudget {
    Rollouts(u64),
    /// Rollouts keep starting until this many simulator steps were used.
    SimSteps(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomConfig {
    pub budget: SearchBudget,
    pub rng_seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

const BATCH: usize = 64;

/// Random search with a rollout budget.
pub fn solve_random<S: Simulator>(
    sim: &S,
    spec: &RewardSpec,
    budget: u64,
    rng_seed: u64,
) -> Result<SolverReport> {
    solve_random_with(
        sim,
        spec,
        &RandomConfig {
            budget: SearchBudget::Rollouts(budget),
            rng_seed,
            execution: Execution::default(),
        },
    )
}

/// Samples i.i.d. trajectories from the natural action distribution and
/// keeps the best. Rollout `i` draws from its own substream of the seed, so
/// the result does not depend on the execution mode.
pub fn solve_random_with<S: Simulator>(
    sim: &S,
    spec: &RewardSpec,
    cfg: &RandomConfig,
) -> Result<SolverReport> {
    spec.validate()?;
    let done = |tracker: &BestTracker| match cfg.budget {
        SearchBudget::Rollouts(n) => tracker.iterations() >= n,
        SearchBudget::SimSteps(n) => tracker.steps() >= n,
    };
    let mut tracker = BestTracker::default();
    let mut next_index = 0u64;
    while !done(&tracker) {
        let batch = match cfg.budget {
            SearchBudget::Rollouts(n) => ((n - tracker.iterations()) as usize).min(BATCH),
            SearchBudget::SimSteps(_) => BATCH,
        };
        let start = next_index;
        let results: Vec<Result<Trajectory>> = cfg.execution.map(batch, |i| {
            let mut sim = sim.clone();
            let mut rng = stream_rng(cfg.rng_seed, start + i as u64);
            sim.reset()?;
            run_to_terminal(&mut sim, ActionSource::Natural(&mut rng), spec, false)
        });
        next_index += batch as u64;
        for traj in results {
            if done(&tracker) {
                break;
            }
            tracker.observe(traj?);
        }
    }
    let mut sim = sim.clone();
    match tracker.iterations() {
        0 => Err(Error::NoCompletedRollout),
        _ => tracker.finish(&mut sim, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::chain::ChainMdp;

    #[test]
    fn single_rollout() {
        let r = solve_random(&ChainMdp::default(), &RewardSpec::default(), 1, 0).unwrap();
        assert_eq!(r.iterations_used, 1);
        assert_eq!(r.best_reward_curve.len(), 1);
    }

    #[test]
    fn zero_budget_has_no_rollout() {
        assert_eq!(
            solve_random(&ChainMdp::default(), &RewardSpec::default(), 0, 0),
            Err(Error::NoCompletedRollout)
        );
    }

    #[test]
    fn reproducible_across_execution_modes() {
        let sim = ChainMdp::default();
        let mk = |execution| RandomConfig {
            budget: SearchBudget::SimSteps(1000),
            rng_seed: 42,
            execution,
        };
        let a = solve_random_with(&sim, &RewardSpec::default(), &mk(Execution::Parallel)).unwrap();
        let b =
            solve_random_with(&sim, &RewardSpec::default(), &mk(Execution::Sequential)).unwrap();
        assert_eq!(a, b);
        assert!(a.sim_steps_used >= 1000);
        let c = solve_random(&sim, &RewardSpec::default(), 200, 42).unwrap();
        assert_eq!(
            c,
            solve_random(&sim, &RewardSpec::default(), 200, 42).unwrap()
        );
    }
}
