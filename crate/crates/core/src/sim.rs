//! The black-box simulator contract.

use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::Result;

/// Generator used wherever a solver or simulator draws random numbers.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// What a simulator reports after executing one environment action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Log-probability (nats) of the action, or of the sampled transition in
    /// seed-action mode.
    pub action_log_likelihood: f64,
    /// Scenario-supplied action penalty. When present it replaces
    /// `-action_log_likelihood` as the per-step action cost.
    pub action_penalty: Option<f64>,
    pub event: bool,
    pub terminal: bool,
    /// Distance-style heuristic evaluated at the post-step state.
    pub heuristic_metric: Option<f64>,
}

impl StepOutcome {
    /// Per-step action cost subtracted from the reward.
    pub fn action_cost(&self) -> f64 {
        self.action_penalty.unwrap_or(-self.action_log_likelihood)
    }
}

/// A simulator that can be reset to an initial state, stepped with
/// environment actions, and queried for termination.
///
/// Implementations must be deterministic given the action sequence: all
/// randomness belongs to the solver's choice of actions (or, in seed mode,
/// to the seeds it hands over).
pub trait Simulator: Clone + Send + Sync {
    type State: Clone + Serialize + Send + Sync;

    fn action_space(&self) -> ActionSpace;

    /// Maximum trajectory length.
    fn horizon(&self) -> usize;

    fn initial_state(&self) -> Self::State;

    /// Resets the simulator to `s0`.
    fn initialize(&mut self, s0: &Self::State) -> Result<()>;

    /// Executes one action. Calling this after the simulator became terminal
    /// returns [`crate::Error::StepAfterTerminal`].
    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome>;

    /// True once the state is in the event set or the horizon was reached.
    fn is_terminal(&self) -> bool;

    fn state(&self) -> &Self::State;

    /// Number of steps executed since the last reset.
    fn time_step(&self) -> usize;

    /// Draws an action from the scenario's natural action distribution.
    fn sample_action(&self, rng: &mut SimRng) -> EnvironmentAction;

    fn reset(&mut self) -> Result<()> {
        let s0 = self.initial_state();
        self.initialize(&s0)
    }

    /// Opaque serialized form of the current state.
    fn snapshot(&self) -> Vec<u8> {
        serde_json::to_vec(self.state()).expect("simulator state serializes")
    }
}
