//! Per-step reward for most-likely failure search.
//!
//! The reward is zero on the step that enters the event set, `-alpha - beta*f`
//! on a step that ends the trajectory at the horizon without an event, and
//! `-g - eta*h` otherwise, where `g` is the action cost reported by the
//! simulator. With `g = -log P(a)` the summed reward of an event trajectory is
//! its log-probability (up to the final step), so maximizing reward maximizes
//! the likelihood of the failure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::StepOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    /// Penalty magnitude for missing the event set. May be `f64::INFINITY`.
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    #[serde(default)]
    pub use_terminal_heuristic: bool,
    #[serde(default)]
    pub use_step_heuristic: bool,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            alpha: 1e4,
            beta: 0.0,
            eta: 0.0,
            use_terminal_heuristic: false,
            use_step_heuristic: false,
        }
    }
}

impl RewardSpec {
    pub fn new(alpha: f64, beta: f64, eta: f64) -> Result<Self> {
        let spec = RewardSpec {
            alpha,
            beta,
            eta,
            use_terminal_heuristic: beta != 0.0,
            use_step_heuristic: eta != 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Event search without heuristics and with an infinite miss penalty.
    pub fn infinite_alpha() -> Self {
        RewardSpec {
            alpha: f64::INFINITY,
            ..RewardSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::InvalidParameter {
                field: "alpha",
                reason: format!("must be >= 0 or +inf, got {}", self.alpha),
            });
        }
        for (field, v) in [("beta", self.beta), ("eta", self.eta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Reward for the step that produced `outcome`.
///
/// `t` is the number of steps taken including this one and `horizon` the
/// simulator's maximum trajectory length. Heuristic values are required only
/// when the corresponding flag is set and the case applies.
pub fn reward_step(
    spec: &RewardSpec,
    outcome: &StepOutcome,
    t: usize,
    horizon: usize,
    f_value: Option<f64>,
    h_value: Option<f64>,
) -> Result<f64> {
    if t > horizon {
        return Err(Error::StepBeyondHorizon { t, horizon });
    }
    if outcome.event {
        return Ok(0.0);
    }
    if outcome.terminal || t >= horizon {
        if spec.alpha == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let mut r = -spec.alpha;
        if spec.use_terminal_heuristic {
            let f = f_value.ok_or(Error::MissingHeuristic("terminal"))?;
            if !f.is_finite() {
                return Err(Error::NonFinite("terminal heuristic"));
            }
            r -= spec.beta * f;
        }
        return Ok(r);
    }
    let g = outcome.action_cost();
    if !g.is_finite() {
        return Err(Error::NonFinite("action cost"));
    }
    let mut r = -g;
    if spec.use_step_heuristic {
        let h = h_value.ok_or(Error::MissingHeuristic("step"))?;
        if !h.is_finite() {
            return Err(Error::NonFinite("step heuristic"));
        }
        r -= spec.eta * h;
    }
    Ok(r)
}

/// Miss penalty above which every event trajectory outscores every
/// trajectory that reaches the horizon without one.
///
/// `cost_min` and `cost_max` bound the per-step cost `g + eta*h` of
/// non-terminal steps. Terminal heuristics are assumed non-negative. The
/// exact bound `(T-1) * (max(cost_max, 0) + max(-cost_min, 0))` is padded by
/// a relative allowance for rounding in the summed rewards, so strict
/// dominance holds for the computed totals when `alpha` exceeds the result.
pub fn dominance_bound(horizon: usize, cost_min: f64, cost_max: f64) -> f64 {
    let steps = horizon.saturating_sub(1) as f64;
    let exact = steps * (cost_max.max(0.0) + (-cost_min).max(0.0));
    exact * (1.0 + 4.0 * (horizon as f64 + 1.0) * f64::EPSILON)
}
