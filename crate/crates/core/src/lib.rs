//! Most-likely failure search for black-box simulators.
//!
//! A solver proposes environment actions, a [`Simulator`] advances one step
//! per action and reports the action's log-likelihood and whether the failure
//! event was reached, and [`reward_step`] turns that into a scalar reward.
//! Maximizing the summed reward over a trajectory yields the most probable
//! action sequence that drives the system under test into failure.
//!
//! Scenarios shipped with the crate live in [`scenarios`]; search algorithms
//! live in [`solvers`].

pub mod action;
pub mod error;
pub mod exec;
pub mod float_serde;
pub mod log;
pub mod reward;
pub mod rollout;
pub mod scenarios;
pub mod sim;
pub mod solvers;
pub mod trajectory;

pub use action::{ActionSpace, EnvironmentAction};
pub use error::{Error, Result};
pub use exec::Execution;
pub use reward::{dominance_bound, reward_step, RewardSpec};
pub use rollout::{rollout, ActionSource};
pub use sim::{SimRng, Simulator, StepOutcome};
pub use solvers::SolverReport;
pub use trajectory::{trajectory_compare, Step, Trajectory};
