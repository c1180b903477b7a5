//! Discrete chain MDP with per-state action probabilities.
//!
//! The state is an integer position. Each step the solver picks one of a
//! finite set of moves; move `a` taken at position `s` has natural
//! probability `action_probs[s][a]`. Positions inside `failure_region` are
//! the event set. Small instances are exhaustively enumerable, which makes
//! this the ground-truth instance for solver tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::sim::{SimRng, Simulator, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    /// Position change for each action.
    pub moves: Vec<i64>,
    /// Positions are clamped to `[min_position, max_position]`.
    pub min_position: i64,
    pub max_position: i64,
    /// One row per position from `min_position` to `max_position`, one
    /// column per action. Rows must be strictly positive and sum to one.
    pub action_probs: Vec<Vec<f64>>,
    /// Inclusive range of failing positions.
    pub failure_region: (i64, i64),
    pub start: i64,
    pub horizon: usize,
}

impl Default for ChainParams {
    /// Three moves (down, stay, up) over positions -2..=4, failure at 3 or
    /// above, horizon 5. Probabilities are position dependent so that the
    /// most likely failure does not simply climb greedily.
    fn default() -> Self {
        ChainParams {
            moves: vec![-1, 0, 1],
            min_position: -2,
            max_position: 4,
            action_probs: vec![
                vec![0.05, 0.15, 0.80], // -2
                vec![0.10, 0.30, 0.60], // -1
                vec![0.30, 0.60, 0.10], // 0
                vec![0.20, 0.50, 0.30], // 1
                vec![0.25, 0.60, 0.15], // 2
                vec![0.30, 0.40, 0.30], // 3
                vec![0.40, 0.30, 0.30], // 4
            ],
            failure_region: (3, 4),
            start: 0,
            horizon: 5,
        }
    }
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: String| Err(Error::InvalidParameter { field, reason });
        if self.moves.is_empty() {
            return invalid("moves", "at least one action is required".into());
        }
        if self.max_position < self.min_position {
            return invalid("max_position", "must be >= min_position".into());
        }
        let positions = (self.max_position - self.min_position + 1) as usize;
        if self.action_probs.len() != positions {
            return invalid(
                "action_probs",
                format!("expected {positions} rows, got {}", self.action_probs.len()),
            );
        }
        for (i, row) in self.action_probs.iter().enumerate() {
            if row.len() != self.moves.len() {
                return invalid("action_probs", format!("row {i} has {} entries", row.len()));
            }
            if row.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
                return invalid(
                    "action_probs",
                    format!("row {i} has entries outside (0, 1]"),
                );
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return invalid("action_probs", format!("row {i} sums to {sum}"));
            }
        }
        if !(self.min_position..=self.max_position).contains(&self.start) {
            return invalid("start", "outside the position range".into());
        }
        if self.failure_region.0 > self.failure_region.1 {
            return invalid("failure_region", "empty range".into());
        }
        if self.horizon == 0 {
            return invalid("horizon", "must be >= 1".into());
        }
        Ok(())
    }

    fn row(&self, position: i64) -> &[f64] {
        &self.action_probs[(position - self.min_position) as usize]
    }

    pub fn is_failure(&self, position: i64) -> bool {
        (self.failure_region.0..=self.failure_region.1).contains(&position)
    }

    /// Number of positions between `position` and the failure region.
    pub fn distance_to_failure(&self, position: i64) -> f64 {
        let (lo, hi) = self.failure_region;
        if position < lo {
            (lo - position) as f64
        } else if position > hi {
            (position - hi) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub position: i64,
}

#[derive(Debug, Clone)]
pub struct ChainMdp {
    params: ChainParams,
    state: ChainState,
    t: usize,
    terminal: bool,
}

impl ChainMdp {
    pub fn new(params: ChainParams) -> Result<Self> {
        params.validate()?;
        let state = ChainState {
            position: params.start,
        };
        let terminal = params.is_failure(params.start);
        Ok(ChainMdp {
            params,
            state,
            t: 0,
            terminal,
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// A chain whose failure region is unreachable within `horizon` steps.
    pub fn never_failing(horizon: usize) -> Self {
        ChainMdp::new(ChainParams {
            failure_region: (1000, 1000),
            horizon,
            ..ChainParams::default()
        })
        .expect("valid parameters")
    }

    /// A chain where moving up from the start fails immediately.
    pub fn fails_on_first(horizon: usize) -> Self {
        ChainMdp::new(ChainParams {
            failure_region: (1, 4),
            horizon,
            ..ChainParams::default()
        })
        .expect("valid parameters")
    }
}

impl Default for ChainMdp {
    fn default() -> Self {
        ChainMdp::new(ChainParams::default()).expect("default chain is valid")
    }
}

impl Simulator for ChainMdp {
    type State = ChainState;

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete {
            count: self.params.moves.len(),
        }
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn initial_state(&self) -> ChainState {
        ChainState {
            position: self.params.start,
        }
    }

    fn initialize(&mut self, s0: &ChainState) -> Result<()> {
        if !(self.params.min_position..=self.params.max_position).contains(&s0.position) {
            return Err(Error::InvalidParameter {
                field: "start",
                reason: "outside the position range".into(),
            });
        }
        self.state = *s0;
        self.t = 0;
        self.terminal = self.params.is_failure(s0.position);
        Ok(())
    }

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        self.action_space().check(action)?;
        let EnvironmentAction::Discrete(a) = *action else {
            unreachable!("checked above")
        };
        let p = self.params.row(self.state.position)[a];
        self.state.position = (self.state.position + self.params.moves[a])
            .clamp(self.params.min_position, self.params.max_position);
        self.t += 1;
        let event = self.params.is_failure(self.state.position);
        self.terminal = event || self.t >= self.params.horizon;
        Ok(StepOutcome {
            action_log_likelihood: p.ln(),
            action_penalty: None,
            event,
            terminal: self.terminal,
            heuristic_metric: Some(self.params.distance_to_failure(self.state.position)),
        })
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn state(&self) -> &ChainState {
        &self.state
    }

    fn time_step(&self) -> usize {
        self.t
    }

    fn sample_action(&self, rng: &mut SimRng) -> EnvironmentAction {
        let row = self.params.row(self.state.position);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return EnvironmentAction::Discrete(a);
            }
        }
        EnvironmentAction::Discrete(row.len() - 1)
    }
}
