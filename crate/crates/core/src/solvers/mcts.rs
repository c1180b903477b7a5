//! Monte Carlo tree search with double progressive widening.
//!
//! Each node is an action-sequence prefix; because simulators are
//! deterministic given their actions, an iteration resets the simulator and
//! replays the path from the root. A node with `n` visits may hold at most
//! `max(1, k * n^alpha)` children; while below that bound, a new action is
//! drawn from the scenario's natural distribution. Otherwise the child with
//! the highest UCB score is followed, with returns normalized to `[0, 1]`
//! by the running min/max of finite returns seen in the tree. Below the
//! frontier the trajectory is completed with natural actions.

use serde::{Deserialize, Serialize};

use super::{merge_reports, stream_rng, BestTracker, SolverReport};
use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::reward::RewardSpec;
use crate::rollout::Recorder;
use crate::sim::{SimRng, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MctsConfig {
    pub exploration_constant: f64,
    pub widening_k: f64,
    pub widening_alpha: f64,
    pub max_iterations: u64,
    /// Stop starting iterations once this many simulator steps were used.
    pub max_sim_steps: Option<u64>,
    /// Maximum tree depth; deeper steps are rollout steps.
    pub rollout_depth_limit: usize,
    pub rng_seed: u64,
    /// Independent trees searched side by side and merged.
    pub parallel_trees: usize,
    pub execution: Execution,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            exploration_constant: 0.5,
            widening_k: 1.0,
            widening_alpha: 0.5,
            max_iterations: 1000,
            max_sim_steps: None,
            rollout_depth_limit: usize::MAX,
            rng_seed: 0,
            parallel_trees: 1,
            execution: Execution::default(),
        }
    }
}

impl MctsConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.into(),
            })
        };
        if !(self.exploration_constant.is_finite() && self.exploration_constant >= 0.0) {
            return invalid("exploration_constant", "must be finite and >= 0");
        }
        if !(self.widening_k.is_finite() && self.widening_k > 0.0) {
            return invalid("widening_k", "must be finite and > 0");
        }
        if !(self.widening_alpha > 0.0 && self.widening_alpha < 1.0) {
            return invalid("widening_alpha", "must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations", "must be >= 1");
        }
        if self.rollout_depth_limit == 0 {
            return invalid("rollout_depth_limit", "must be >= 1");
        }
        if self.parallel_trees == 0 {
            return invalid("parallel_trees", "must be >= 1");
        }
        Ok(())
    }

    /// Maximum children allowed at a node visited `visits` times.
    pub fn child_limit(&self, visits: u64) -> f64 {
        (self.widening_k * (visits as f64).powf(self.widening_alpha)).max(1.0)
    }
}

#[derive(Debug)]
struct Edge {
    action: EnvironmentAction,
    child: usize,
    visits: u64,
    finite_visits: u64,
    finite_return_sum: f64,
}

#[derive(Debug, Default)]
struct Node {
    visits: u64,
    edges: Vec<Edge>,
}

#[derive(Debug)]
struct Tree {
    nodes: Vec<Node>,
    min_return: f64,
    max_return: f64,
}

impl Tree {
    fn new() -> Self {
        Tree {
            nodes: vec![Node::default()],
            min_return: f64::INFINITY,
            max_return: f64::NEG_INFINITY,
        }
    }

    /// Mean normalized return of an edge. Non-finite returns count as the
    /// worst possible value.
    fn normalized_value(&self, e: &Edge) -> f64 {
        let range = self.max_return - self.min_return;
        if e.visits == 0 || e.finite_visits == 0 || range.is_nan() || range <= 0.0 {
            return 0.0;
        }
        let shifted = e.finite_return_sum - e.finite_visits as f64 * self.min_return;
        shifted / range / e.visits as f64
    }

    fn select(&self, node: usize, c: f64) -> usize {
        let n = &self.nodes[node];
        let ln_n = (n.visits.max(1) as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, e) in n.edges.iter().enumerate() {
            let score = if e.visits == 0 {
                f64::INFINITY
            } else {
                self.normalized_value(e) + c * (ln_n / e.visits as f64).sqrt()
            };
            // strict comparison keeps the lowest index on ties
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    fn add_child(&mut self, node: usize, action: EnvironmentAction) -> usize {
        let child = self.nodes.len();
        self.nodes.push(Node::default());
        self.nodes[node].edges.push(Edge {
            action,
            child,
            visits: 0,
            finite_visits: 0,
            finite_return_sum: 0.0,
        });
        self.nodes[node].edges.len() - 1
    }
}

fn search_tree<S: Simulator>(
    sim: &mut S,
    spec: &RewardSpec,
    cfg: &MctsConfig,
    max_iterations: u64,
    max_steps: Option<u64>,
    rng: &mut SimRng,
) -> Result<SolverReport> {
    let (_, tracker) = grow_tree(sim, spec, cfg, max_iterations, max_steps, rng)?;
    tracker.finish(sim, spec)
}

fn grow_tree<S: Simulator>(
    sim: &mut S,
    spec: &RewardSpec,
    cfg: &MctsConfig,
    max_iterations: u64,
    max_steps: Option<u64>,
    rng: &mut SimRng,
) -> Result<(Tree, BestTracker)> {
    let space = sim.action_space();
    let mut tree = Tree::new();
    let mut tracker = BestTracker::default();

    while tracker.iterations() < max_iterations && max_steps.is_none_or(|m| tracker.steps() < m) {
        sim.reset()?;
        let mut rec = Recorder::new(spec, false);
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut node = 0;

        while !sim.is_terminal() && path.len() < cfg.rollout_depth_limit {
            let n = &tree.nodes[node];
            let saturated =
                matches!(space, ActionSpace::Discrete { count } if n.edges.len() >= count);
            let widen = !saturated
                && (n.edges.is_empty()
                    || (n.edges.len() + 1) as f64 <= cfg.child_limit(n.visits + 1));
            let mut expanded = false;
            let edge = if widen {
                let action = sim.sample_action(rng);
                match n.edges.iter().position(|e| e.action == action) {
                    Some(i) => i,
                    None => {
                        expanded = true;
                        tree.add_child(node, action)
                    }
                }
            } else {
                tree.select(node, cfg.exploration_constant)
            };
            let action = tree.nodes[node].edges[edge].action.clone();
            rec.step(sim, action)?;
            path.push((node, edge));
            node = tree.nodes[node].edges[edge].child;
            if expanded {
                break;
            }
        }
        while !sim.is_terminal() {
            let action = sim.sample_action(rng);
            rec.step(sim, action)?;
        }
        let traj = rec.finish();

        // suffix returns for backpropagation
        let mut suffix = vec![0.0; traj.len() + 1];
        for i in (0..traj.len()).rev() {
            suffix[i] = suffix[i + 1] + traj.steps[i].reward;
        }
        for (depth, &(n, e)) in path.iter().enumerate() {
            let ret = suffix[depth];
            tree.nodes[n].visits += 1;
            let edge = &mut tree.nodes[n].edges[e];
            edge.visits += 1;
            if ret.is_finite() {
                edge.finite_visits += 1;
                edge.finite_return_sum += ret;
                tree.min_return = tree.min_return.min(ret);
                tree.max_return = tree.max_return.max(ret);
            }
        }
        if path.is_empty() {
            tree.nodes[0].visits += 1;
        }
        tracker.observe(traj);
    }
    Ok((tree, tracker))
}

/// Searches for the highest-reward trajectory of `sim`.
pub fn solve_mcts<S: Simulator>(
    sim: &S,
    spec: &RewardSpec,
    cfg: &MctsConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    spec.validate()?;
    if cfg.max_sim_steps == Some(0) {
        return Err(Error::NoCompletedRollout);
    }
    let trees = cfg.parallel_trees as u64;
    let share = |total: u64, k: u64| total / trees + u64::from(k < total % trees);
    let reports = cfg.execution.map(cfg.parallel_trees, |k| {
        let k = k as u64;
        let iterations = share(cfg.max_iterations, k);
        let steps = cfg.max_sim_steps.map(|m| share(m, k));
        if iterations == 0 || steps == Some(0) {
            return Ok(None);
        }
        let mut sim = sim.clone();
        let mut rng = stream_rng(cfg.rng_seed, k);
        search_tree(&mut sim, spec, cfg, iterations, steps, &mut rng).map(Some)
    });
    let reports: Vec<SolverReport> = reports
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    match reports.len() {
        0 => Err(Error::NoCompletedRollout),
        1 => Ok(reports.into_iter().next().expect("one report")),
        _ => Ok(merge_reports(reports)),
    }
}
