//! Seed-action control of stochastic simulators.
//!
//! Instead of choosing physical actions, the solver hands the simulator one
//! 64-bit seed per step. The wrapped model draws all of that step's
//! randomness from a generator seeded with it and reports the exact
//! log-probability of the transition it sampled, which becomes the step's
//! action log-likelihood.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::sim::{SimRng, Simulator, StepOutcome};

/// A stochastic simulator whose transition probabilities are known exactly.
pub trait StochasticModel: Clone + Send + Sync {
    type State: Clone + Serialize + Send + Sync;

    fn initial_state(&self) -> Self::State;

    fn validate_state(&self, _state: &Self::State) -> Result<()> {
        Ok(())
    }

    /// Samples the successor of `state`, returning it together with the
    /// forward transition log-probability `log P(next | state)`.
    fn sample_transition(&self, state: &Self::State, rng: &mut SimRng) -> (Self::State, f64);

    fn is_event(&self, state: &Self::State) -> bool;

    fn heuristic(&self, _state: &Self::State) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct SeedWrapped<M: StochasticModel> {
    model: M,
    horizon: usize,
    state: M::State,
    t: usize,
    terminal: bool,
}

impl<M: StochasticModel> SeedWrapped<M> {
    pub fn new(model: M, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                field: "horizon",
                reason: "must be >= 1".into(),
            });
        }
        let state = model.initial_state();
        model.validate_state(&state)?;
        let terminal = model.is_event(&state);
        Ok(SeedWrapped {
            model,
            horizon,
            state,
            t: 0,
            terminal,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    /// Advances one step using `seed` for every random draw in the step.
    pub fn seeded_step(&mut self, seed: u64) -> Result<StepOutcome> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        let mut rng = SimRng::seed_from_u64(seed);
        let (next, log_p) = self.model.sample_transition(&self.state, &mut rng);
        self.state = next;
        self.t += 1;
        let event = self.model.is_event(&self.state);
        self.terminal = event || self.t >= self.horizon;
        Ok(StepOutcome {
            action_log_likelihood: log_p,
            action_penalty: None,
            event,
            terminal: self.terminal,
            heuristic_metric: self.model.heuristic(&self.state),
        })
    }
}

impl<M: StochasticModel> Simulator for SeedWrapped<M> {
    type State = M::State;

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Seed
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_state(&self) -> M::State {
        self.model.initial_state()
    }

    fn initialize(&mut self, s0: &M::State) -> Result<()> {
        self.model.validate_state(s0)?;
        self.state = s0.clone();
        self.t = 0;
        self.terminal = self.model.is_event(s0);
        Ok(())
    }

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        self.action_space().check(action)?;
        let EnvironmentAction::Seed(seed) = *action else {
            unreachable!("checked above")
        };
        self.seeded_step(seed)
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn state(&self) -> &M::State {
        &self.state
    }

    fn time_step(&self) -> usize {
        self.t
    }

    fn sample_action(&self, rng: &mut SimRng) -> EnvironmentAction {
        EnvironmentAction::Seed(rng.random())
    }
}

/// Markov chain over `0..n` states with a published transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededChain {
    /// `transitions[i][j] = P(next = j | current = i)`.
    pub transitions: Vec<Vec<f64>>,
    pub failure_states: Vec<usize>,
    pub start: usize,
}

impl Default for SeededChain {
    fn default() -> Self {
        SeededChain {
            transitions: vec![
                vec![0.7, 0.2, 0.1, 0.0],
                vec![0.3, 0.5, 0.15, 0.05],
                vec![0.1, 0.3, 0.4, 0.2],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            failure_states: vec![3],
            start: 0,
        }
    }
}

impl SeededChain {
    pub fn validate(&self) -> Result<()> {
        let n = self.transitions.len();
        let invalid = |reason: String| {
            Err(Error::InvalidParameter {
                field: "transitions",
                reason,
            })
        };
        if n == 0 {
            return invalid("empty table".into());
        }
        for (i, row) in self.transitions.iter().enumerate() {
            if row.len() != n {
                return invalid(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return invalid(format!("row {i} has entries outside [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return invalid(format!("row {i} sums to {sum}"));
            }
        }
        if self.start >= n || self.failure_states.iter().any(|&s| s >= n) {
            return Err(Error::InvalidParameter {
                field: "start",
                reason: "state index out of range".into(),
            });
        }
        Ok(())
    }
}

impl StochasticModel for SeededChain {
    type State = usize;

    fn initial_state(&self) -> usize {
        self.start
    }

    fn validate_state(&self, state: &usize) -> Result<()> {
        if *state < self.transitions.len() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                field: "start",
                reason: "state index out of range".into(),
            })
        }
    }

    fn sample_transition(&self, state: &usize, rng: &mut SimRng) -> (usize, f64) {
        let row = &self.transitions[*state];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = row.iter().rposition(|&p| p > 0.0).expect("row sums to one");
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if p > 0.0 && u < acc {
                next = j;
                break;
            }
        }
        (next, row[next].ln())
    }

    fn is_event(&self, state: &usize) -> bool {
        self.failure_states.contains(state)
    }
}
