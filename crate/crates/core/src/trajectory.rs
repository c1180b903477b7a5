use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::action::EnvironmentAction;

/// One executed simulator step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// Opaque snapshot of the post-step state; empty when not recorded.
    #[serde(default)]
    pub state: Vec<u8>,
    pub action: EnvironmentAction,
    #[serde(with = "crate::float_serde")]
    pub reward: f64,
    pub action_log_likelihood: f64,
    pub event: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    #[serde(with = "crate::float_serde")]
    pub total_reward: f64,
    pub total_log_likelihood: f64,
    pub found_event: bool,
    pub horizon_reached: bool,
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory {
            steps: Vec::new(),
            total_reward: 0.0,
            total_log_likelihood: 0.0,
            found_event: false,
            horizon_reached: false,
        }
    }
}

impl Trajectory {
    /// Appends a step and keeps the totals and flags in sync.
    pub fn push(&mut self, step: Step) {
        self.total_reward += step.reward;
        self.total_log_likelihood += step.action_log_likelihood;
        if step.terminal {
            self.found_event = step.event;
            self.horizon_reached = !step.event;
        }
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_terminal(&self) -> bool {
        self.steps.last().is_some_and(|s| s.terminal)
    }

    pub fn actions(&self) -> Vec<EnvironmentAction> {
        self.steps.iter().map(|s| s.action.clone()).collect()
    }
}

/// Orders trajectories by search preference: event trajectories first, then
/// higher total reward, then higher total log-likelihood.
///
/// `Ordering::Greater` means `a` is preferred.
pub fn trajectory_compare(a: &Trajectory, b: &Trajectory) -> Ordering {
    a.found_event
        .cmp(&b.found_event)
        .then_with(|| a.total_reward.total_cmp(&b.total_reward))
        .then_with(|| a.total_log_likelihood.total_cmp(&b.total_log_likelihood))
}
