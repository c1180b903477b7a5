use super::{BestTracker, SolverReport};
use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::reward::RewardSpec;
use crate::rollout::record_step;
use crate::sim::Simulator;
use crate::trajectory::Trajectory;

/// Largest number of action sequences [`solve_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

/// Enumerates every action sequence of a finite discrete simulator and
/// returns the global optimum. Sequences sharing a prefix that already
/// terminated count once.
pub fn solve_exhaustive<S: Simulator>(sim: &S, spec: &RewardSpec) -> Result<SolverReport> {
    spec.validate()?;
    let ActionSpace::Discrete { count } = sim.action_space() else {
        return Err(Error::NotDiscrete);
    };
    let horizon = sim.horizon();
    let too_large = Error::InstanceTooLarge {
        actions: count,
        horizon,
        limit: EXHAUSTIVE_LIMIT,
    };
    let total = u32::try_from(horizon)
        .ok()
        .and_then(|h| (count as u64).checked_pow(h))
        .ok_or(too_large.clone())?;
    if total > EXHAUSTIVE_LIMIT {
        return Err(too_large);
    }

    let mut root = sim.clone();
    root.reset()?;
    let mut tracker = BestTracker::default();
    let mut prefix = Trajectory::default();
    if root.is_terminal() {
        return Err(Error::NoCompletedRollout);
    }
    descend(&root, count, spec, &mut prefix, &mut tracker)?;
    tracker.finish(&mut root, spec)
}

fn descend<S: Simulator>(
    sim: &S,
    count: usize,
    spec: &RewardSpec,
    prefix: &mut Trajectory,
    tracker: &mut BestTracker,
) -> Result<()> {
    for a in 0..count {
        let mut next = sim.clone();
        let (step, _) = record_step(&mut next, EnvironmentAction::Discrete(a), spec, false)?;
        let saved = prefix.clone();
        prefix.push(step);
        if next.is_terminal() {
            tracker.observe(prefix.clone());
        } else {
            descend(&next, count, spec, prefix, tracker)?;
        }
        *prefix = saved;
    }
    Ok(())
}
