//! Run configuration files.
//!
//! A config is a TOML document naming a scenario and a solver, with optional
//! sections overriding scenario parameters and the reward. Unknown keys are
//! rejected so that typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};

use faultline_core::scenarios::cartpole::{CartpoleParams, CartpoleSim, CartpoleState};
use faultline_core::scenarios::chain::{ChainMdp, ChainParams};
use faultline_core::scenarios::crosswalk::{CrosswalkParams, CrosswalkSim};
use faultline_core::scenarios::encounter::{EncounterParams, EncounterSim};
use faultline_core::solvers::{
    solve_cem, solve_exhaustive, solve_mcts, solve_random_with, CemConfig, MctsConfig,
    RandomConfig, SearchBudget,
};
use faultline_core::{ActionSpace, Execution, RewardSpec, Simulator, SolverReport};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCENARIOS: [&str; 4] = ["cartpole", "crosswalk", "encounter", "custom-discrete"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Cartpole,
    Crosswalk,
    Encounter,
    CustomDiscrete,
}

impl ScenarioKind {
    fn parse(name: &str) -> CliResult<Self> {
        match name {
            "cartpole" => Ok(ScenarioKind::Cartpole),
            "crosswalk" => Ok(ScenarioKind::Crosswalk),
            "encounter" => Ok(ScenarioKind::Encounter),
            "custom-discrete" => Ok(ScenarioKind::CustomDiscrete),
            other => Err(CliError::Invalid(format!(
                "scenario: unknown scenario `{other}`, expected one of {}",
                SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Cartpole => "cartpole",
            ScenarioKind::Crosswalk => "crosswalk",
            ScenarioKind::Encounter => "encounter",
            ScenarioKind::CustomDiscrete => "custom-discrete",
        }
    }

    /// Miss penalty and terminal heuristic weight used when the config
    /// leaves them out.
    fn default_reward(self) -> (f64, f64) {
        match self {
            ScenarioKind::Cartpole => (1e4, 1e3),
            ScenarioKind::Crosswalk => (1e5, 1e4),
            ScenarioKind::Encounter => (f64::INFINITY, 0.0),
            ScenarioKind::CustomDiscrete => (1e4, 0.0),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardSection {
    alpha: Option<f64>,
    beta: Option<f64>,
    eta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MctsSection {
    pub exploration_constant: f64,
    pub widening_k: f64,
    pub widening_alpha: f64,
    /// Optional cap on iterations on top of the step budget.
    pub max_iterations: Option<u64>,
    /// Maximum tree depth; unlimited when absent.
    pub max_depth: Option<usize>,
    pub parallel_trees: usize,
    pub execution: Execution,
}

impl Default for MctsSection {
    fn default() -> Self {
        let d = MctsConfig::default();
        MctsSection {
            exploration_constant: d.exploration_constant,
            widening_k: d.widening_k,
            widening_alpha: d.widening_alpha,
            max_iterations: None,
            max_depth: None,
            parallel_trees: d.parallel_trees,
            execution: d.execution,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemSection {
    pub population_size: usize,
    pub elite_fraction: f64,
    pub generations: usize,
    pub initial_std: Vec<f64>,
    pub min_std: f64,
    pub execution: Execution,
}

impl Default for CemSection {
    fn default() -> Self {
        let d = CemConfig::default();
        CemSection {
            population_size: d.population_size,
            elite_fraction: d.elite_fraction,
            generations: d.generations,
            initial_std: d.initial_std,
            min_std: d.min_std,
            execution: d.execution,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSection {
    pub execution: Execution,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolverSection {
    Mcts(MctsSection),
    Cem(CemSection),
    Random(RandomSection),
    Exhaustive {},
}

impl SolverSection {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSection::Mcts(_) => "mcts",
            SolverSection::Cem(_) => "cem",
            SolverSection::Random(_) => "random",
            SolverSection::Exhaustive {} => "exhaustive",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CartpoleSection {
    horizon: usize,
    initial_state: CartpoleState,
    params: CartpoleParams,
}

impl Default for CartpoleSection {
    fn default() -> Self {
        CartpoleSection {
            horizon: 100,
            initial_state: CartpoleState::default(),
            params: CartpoleParams::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    run_id: Option<String>,
    rng_seed: u64,
    budget: u64,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    reward: RewardSection,
    solver: SolverSection,
    cartpole: Option<CartpoleSection>,
    crosswalk: Option<CrosswalkParams>,
    encounter: Option<EncounterParams>,
    #[serde(rename = "custom-discrete")]
    custom_discrete: Option<ChainParams>,
}

/// A simulator built from a validated config.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Scenario {
    Cartpole(CartpoleSim),
    Crosswalk(CrosswalkSim),
    Encounter(EncounterSim),
    CustomDiscrete(ChainMdp),
}

/// Calls `$body` with `$sim` bound to the concrete simulator.
#[macro_export]
macro_rules! with_sim {
    ($scenario:expr, $sim:ident => $body:expr) => {
        match $scenario {
            $crate::config::Scenario::Cartpole($sim) => $body,
            $crate::config::Scenario::Crosswalk($sim) => $body,
            $crate::config::Scenario::Encounter($sim) => $body,
            $crate::config::Scenario::CustomDiscrete($sim) => $body,
        }
    };
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario_kind: ScenarioKind,
    pub scenario: Scenario,
    pub run_id: Option<String>,
    pub rng_seed: u64,
    /// Simulator steps available to the solver.
    pub budget: u64,
    pub output_dir: Option<PathBuf>,
    pub reward: RewardSpec,
    pub solver: SolverSection,
    /// Hex SHA-256 of the config file bytes.
    pub hash: String,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::io(format!("cannot read config {}", path.display()), e))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Invalid(format!("{}: config is not UTF-8", path.display())))?;
        Self::parse(text, config_hash(&bytes))
    }

    pub fn parse(text: &str, hash: String) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| CliError::Invalid(format!("config: {}", e.message())))?;
        let kind = ScenarioKind::parse(&raw.scenario)?;

        let sections = [
            (ScenarioKind::Cartpole, raw.cartpole.is_some()),
            (ScenarioKind::Crosswalk, raw.crosswalk.is_some()),
            (ScenarioKind::Encounter, raw.encounter.is_some()),
            (ScenarioKind::CustomDiscrete, raw.custom_discrete.is_some()),
        ];
        for (other, present) in sections {
            if present && other != kind {
                return Err(CliError::Invalid(format!(
                    "[{}] section given but scenario is `{}`",
                    other.name(),
                    kind.name()
                )));
            }
        }

        let (alpha, beta) = kind.default_reward();
        let reward = RewardSpec::new(
            raw.reward.alpha.unwrap_or(alpha),
            raw.reward.beta.unwrap_or(beta),
            raw.reward.eta.unwrap_or(0.0),
        )
        .map_err(|e| CliError::core("reward", e))?;

        if raw.budget == 0 {
            return Err(CliError::Invalid("budget: must be >= 1".into()));
        }
        if let Some(id) = &raw.run_id {
            if id.is_empty() || id.contains(['\t', '\n', '/', '\\']) {
                return Err(CliError::Invalid(
                    "run_id: must be non-empty without tabs, newlines or path separators".into(),
                ));
            }
        }

        let section = kind.name();
        let scenario = match kind {
            ScenarioKind::Cartpole => {
                let c = raw.cartpole.unwrap_or_default();
                Scenario::Cartpole(
                    CartpoleSim::new(c.params, c.horizon, c.initial_state)
                        .map_err(|e| CliError::core(section, e))?,
                )
            }
            ScenarioKind::Crosswalk => Scenario::Crosswalk(
                CrosswalkSim::new(raw.crosswalk.unwrap_or_default())
                    .map_err(|e| CliError::core(section, e))?,
            ),
            ScenarioKind::Encounter => Scenario::Encounter(
                EncounterSim::from_params(raw.encounter.unwrap_or_default())
                    .map_err(|e| CliError::core(section, e))?,
            ),
            ScenarioKind::CustomDiscrete => Scenario::CustomDiscrete(
                ChainMdp::new(raw.custom_discrete.unwrap_or_default())
                    .map_err(|e| CliError::core(section, e))?,
            ),
        };

        let cfg = RunConfig {
            scenario_kind: kind,
            scenario,
            run_id: raw.run_id,
            rng_seed: raw.rng_seed,
            budget: raw.budget,
            output_dir: raw.output_dir,
            reward,
            solver: raw.solver,
            hash,
        };
        cfg.check_solver()?;
        Ok(cfg)
    }

    pub fn default_run_id(&self) -> String {
        format!(
            "{}-{}-s{}",
            self.scenario_kind.name(),
            self.solver.name(),
            self.rng_seed
        )
    }

    pub fn action_space(&self) -> ActionSpace {
        with_sim!(&self.scenario, sim => sim.action_space())
    }

    /// Rejects solver settings that cannot work on the chosen scenario
    /// before anything is simulated.
    fn check_solver(&self) -> CliResult<()> {
        let space = self.action_space();
        let wrap = |e| CliError::core("solver", e);
        match &self.solver {
            SolverSection::Mcts(_) => self.mcts_config().validate().map_err(wrap),
            SolverSection::Cem(_) => match space {
                ActionSpace::Continuous { dim } => self.cem_config().validate(dim).map_err(wrap),
                other => Err(CliError::Invalid(format!(
                    "solver: cem requires continuous actions, scenario `{}` uses {} actions",
                    self.scenario_kind.name(),
                    other.name()
                ))),
            },
            SolverSection::Random(_) => Ok(()),
            SolverSection::Exhaustive {} => match space {
                ActionSpace::Discrete { .. } => Ok(()),
                other => Err(CliError::Invalid(format!(
                    "solver: exhaustive requires discrete actions, scenario `{}` uses {} actions",
                    self.scenario_kind.name(),
                    other.name()
                ))),
            },
        }
    }

    fn mcts_config(&self) -> MctsConfig {
        let s = match &self.solver {
            SolverSection::Mcts(s) => s.clone(),
            _ => MctsSection::default(),
        };
        MctsConfig {
            exploration_constant: s.exploration_constant,
            widening_k: s.widening_k,
            widening_alpha: s.widening_alpha,
            max_iterations: s.max_iterations.unwrap_or(u64::MAX),
            max_sim_steps: Some(self.budget),
            rollout_depth_limit: s.max_depth.unwrap_or(usize::MAX),
            rng_seed: self.rng_seed,
            parallel_trees: s.parallel_trees,
            execution: s.execution,
        }
    }

    fn cem_config(&self) -> CemConfig {
        let s = match &self.solver {
            SolverSection::Cem(s) => s.clone(),
            _ => CemSection::default(),
        };
        CemConfig {
            population_size: s.population_size,
            elite_fraction: s.elite_fraction,
            generations: s.generations,
            initial_std: s.initial_std,
            min_std: s.min_std,
            max_sim_steps: Some(self.budget),
            rng_seed: self.rng_seed,
            execution: s.execution,
        }
    }

    pub fn solve(&self) -> CliResult<SolverReport> {
        with_sim!(&self.scenario, sim => self.solve_on(sim))
    }

    fn solve_on<S: Simulator>(&self, sim: &S) -> CliResult<SolverReport> {
        let spec = &self.reward;
        let report = match &self.solver {
            SolverSection::Mcts(_) => solve_mcts(sim, spec, &self.mcts_config()),
            SolverSection::Cem(_) => solve_cem(sim, spec, &self.cem_config()),
            SolverSection::Random(r) => solve_random_with(
                sim,
                spec,
                &RandomConfig {
                    budget: SearchBudget::SimSteps(self.budget),
                    rng_seed: self.rng_seed,
                    execution: r.execution,
                },
            ),
            SolverSection::Exhaustive {} => solve_exhaustive(sim, spec),
        };
        report.map_err(|e| CliError::core("solver", e))
    }
}
