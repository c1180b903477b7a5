//! Cross-entropy method over open-loop action sequences.
//!
//! The decision vector is the whole action sequence flattened to
//! `horizon * action_dim` reals. Each generation samples a population from
//! an axis-aligned Gaussian, ranks the rollouts, and refits mean and standard
//! deviation to the elites.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{stream_rng, BestTracker, SolverReport};
use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::reward::RewardSpec;
use crate::rollout::{run_to_terminal, ActionSource};
use crate::sim::Simulator;
use crate::trajectory::{trajectory_compare, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemConfig {
    pub population_size: usize,
    pub elite_fraction: f64,
    pub generations: usize,
    /// Initial standard deviation for each action component, or a single
    /// value for all of them; repeated over the horizon.
    pub initial_std: Vec<f64>,
    /// Lower bound applied to every refit standard deviation. With zero, a
    /// collapsed distribution is reported as an error.
    pub min_std: f64,
    pub max_sim_steps: Option<u64>,
    pub rng_seed: u64,
    pub execution: Execution,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            population_size: 100,
            elite_fraction: 0.1,
            generations: 50,
            initial_std: vec![1.0],
            min_std: 1e-3,
            max_sim_steps: None,
            rng_seed: 0,
            execution: Execution::default(),
        }
    }
}

/// Below this spread (relative to the mean's magnitude) the sampling
/// distribution is considered collapsed.
const COLLAPSE_TOLERANCE: f64 = 64.0 * f64::EPSILON;

impl CemConfig {
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize)
            .clamp(1, self.population_size.max(1))
    }

    pub fn validate(&self, action_dim: usize) -> Result<()> {
        let invalid = |field, reason: String| Err(Error::InvalidParameter { field, reason });
        if self.population_size == 0 {
            return invalid("population_size", "must be >= 1".into());
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return invalid("elite_fraction", "must lie in (0, 1)".into());
        }
        if self.generations == 0 {
            return invalid("generations", "must be >= 1".into());
        }
        if self.initial_std.len() != action_dim && self.initial_std.len() != 1 {
            return invalid(
                "initial_std",
                format!(
                    "expected 1 or {action_dim} entries, got {}",
                    self.initial_std.len()
                ),
            );
        }
        if self
            .initial_std
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return invalid("initial_std", "entries must be finite and > 0".into());
        }
        if !(self.min_std.is_finite() && self.min_std >= 0.0) {
            return invalid("min_std", "must be finite and >= 0".into());
        }
        Ok(())
    }
}

fn to_actions(x: &[f64], dim: usize) -> Vec<EnvironmentAction> {
    x.chunks(dim)
        .map(|c| EnvironmentAction::Continuous(c.to_vec()))
        .collect()
}

pub fn solve_cem<S: Simulator>(
    sim: &S,
    spec: &RewardSpec,
    cfg: &CemConfig,
) -> Result<SolverReport> {
    spec.validate()?;
    let space = sim.action_space();
    let ActionSpace::Continuous { dim } = space else {
        return Err(Error::ActionModeMismatch {
            expected: "continuous",
            found: space.name(),
        });
    };
    cfg.validate(dim)?;
    let horizon = sim.horizon();
    let n = horizon * dim;
    let mut mean = vec![0.0; n];
    let mut std: Vec<f64> = (0..n)
        .map(|i| cfg.initial_std[(i % dim) % cfg.initial_std.len()])
        .collect();
    let elites = cfg.elite_count();
    let mut rng = stream_rng(cfg.rng_seed, 0);
    let mut tracker = BestTracker::default();

    for generation in 0..cfg.generations {
        if cfg.max_sim_steps.is_some_and(|m| tracker.steps() >= m) {
            break;
        }
        let population: Vec<Vec<f64>> = (0..cfg.population_size)
            .map(|_| {
                (0..n)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mean[i] + std[i] * z
                    })
                    .collect()
            })
            .collect();
        let results: Vec<Result<Trajectory>> = cfg.execution.map(population.len(), |k| {
            let mut sim = sim.clone();
            sim.reset()?;
            let actions = to_actions(&population[k], dim);
            run_to_terminal(&mut sim, ActionSource::Fixed(&actions), spec, false)
        });
        let results: Vec<Trajectory> = results.into_iter().collect::<Result<_>>()?;

        let mut order: Vec<usize> = (0..results.len()).collect();
        order.sort_by(|&a, &b| trajectory_compare(&results[b], &results[a]).then(a.cmp(&b)));
        let elite_set: Vec<&Vec<f64>> = order[..elites].iter().map(|&k| &population[k]).collect();

        for traj in results {
            tracker.observe(traj);
        }

        let m = elites as f64;
        for i in 0..n {
            let mu = elite_set.iter().map(|x| x[i]).sum::<f64>() / m;
            mean[i] = mu;
            if elites > 1 {
                let var = elite_set.iter().map(|x| (x[i] - mu).powi(2)).sum::<f64>() / m;
                std[i] = var.sqrt().max(cfg.min_std);
            }
        }
        let max_std = std.iter().copied().fold(0.0, f64::max);
        let scale = mean.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if generation + 1 < cfg.generations && max_std < COLLAPSE_TOLERANCE * scale {
            return Err(Error::DegenerateDistribution {
                generation: generation + 1,
                max_std,
            });
        }
    }
    let mut sim = sim.clone();
    tracker.finish(&mut sim, spec)
}
