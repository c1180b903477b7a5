//! The loop connecting solver actions to simulator steps.

use crate::action::EnvironmentAction;
use crate::error::{Error, Result};
use crate::reward::{reward_step, RewardSpec};
use crate::sim::{SimRng, Simulator, StepOutcome};
use crate::trajectory::{Step, Trajectory};

/// Where a rollout gets its actions from.
pub enum ActionSource<'a> {
    /// A fixed sequence; running out before termination is an error.
    Fixed(&'a [EnvironmentAction]),
    /// Samples from the simulator's natural action distribution.
    Natural(&'a mut SimRng),
    /// A fixed prefix followed by natural samples.
    PrefixThenNatural(&'a [EnvironmentAction], &'a mut SimRng),
}

impl ActionSource<'_> {
    fn next<S: Simulator>(&mut self, sim: &S, t: usize) -> Option<EnvironmentAction> {
        match self {
            ActionSource::Fixed(actions) => actions.get(t).cloned(),
            ActionSource::Natural(rng) => Some(sim.sample_action(rng)),
            ActionSource::PrefixThenNatural(prefix, rng) => match prefix.get(t) {
                Some(a) => Some(a.clone()),
                None => Some(sim.sample_action(rng)),
            },
        }
    }
}

/// Executes single steps against a simulator and records them with rewards.
#[derive(Debug)]
pub struct Recorder<'a> {
    spec: &'a RewardSpec,
    record_states: bool,
    pub trajectory: Trajectory,
}

impl<'a> Recorder<'a> {
    pub fn new(spec: &'a RewardSpec, record_states: bool) -> Self {
        Recorder {
            spec,
            record_states,
            trajectory: Trajectory::default(),
        }
    }

    pub fn step<S: Simulator>(
        &mut self,
        sim: &mut S,
        action: EnvironmentAction,
    ) -> Result<StepOutcome> {
        let (step, outcome) = record_step(sim, action, self.spec, self.record_states)?;
        self.trajectory.push(step);
        Ok(outcome)
    }

    pub fn finish(self) -> Trajectory {
        self.trajectory
    }
}

/// Executes `action` on `sim` and scores it.
pub fn record_step<S: Simulator>(
    sim: &mut S,
    action: EnvironmentAction,
    spec: &RewardSpec,
    record_state: bool,
) -> Result<(Step, StepOutcome)> {
    let outcome = sim.step(&action)?;
    if !outcome.action_log_likelihood.is_finite() {
        return Err(Error::NonFinite("action log-likelihood"));
    }
    let reward = reward_step(
        spec,
        &outcome,
        sim.time_step(),
        sim.horizon(),
        outcome.heuristic_metric,
        outcome.heuristic_metric,
    )?;
    let state = if record_state {
        sim.snapshot()
    } else {
        Vec::new()
    };
    let step = Step {
        state,
        action,
        reward,
        action_log_likelihood: outcome.action_log_likelihood,
        event: outcome.event,
        terminal: outcome.terminal,
    };
    Ok((step, outcome))
}

/// Initializes `sim` to `s0` and steps it until terminal, recording state
/// snapshots along the way.
pub fn rollout<S: Simulator>(
    sim: &mut S,
    actions: ActionSource<'_>,
    spec: &RewardSpec,
    s0: &S::State,
) -> Result<Trajectory> {
    sim.initialize(s0)?;
    run_to_terminal(sim, actions, spec, true)
}

/// Steps an already initialized simulator until terminal.
pub fn run_to_terminal<S: Simulator>(
    sim: &mut S,
    mut actions: ActionSource<'_>,
    spec: &RewardSpec,
    record_states: bool,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(spec, record_states);
    while !sim.is_terminal() {
        let t = sim.time_step();
        let action = actions.next(sim, t).ok_or(Error::ActionsExhausted(t))?;
        rec.step(sim, action)?;
    }
    Ok(rec.finish())
}
