use std::io::Cursor;

use faultline_core::log::TrajectoryLog;
use faultline_core::scenarios::cartpole::CartpoleSim;
use faultline_core::scenarios::crosswalk::CrosswalkSim;
use faultline_core::scenarios::encounter::{EncounterParams, EncounterSim};
use faultline_core::solvers::{solve_cem, solve_mcts, solve_random, CemConfig, MctsConfig};
use faultline_core::{rollout, ActionSource, RewardSpec, SimRng, Simulator, Trajectory};
use rand::SeedableRng;

fn replay<S: Simulator>(sim: &S, traj: &Trajectory, spec: &RewardSpec) -> Trajectory {
    let mut sim = sim.clone();
    let s0 = sim.initial_state();
    rollout(&mut sim, ActionSource::Fixed(&traj.actions()), spec, &s0).unwrap()
}

fn natural<S: Simulator>(sim: &S, spec: &RewardSpec, seed: u64) -> Trajectory {
    let mut sim = sim.clone();
    let s0 = sim.initial_state();
    let mut rng = SimRng::seed_from_u64(seed);
    rollout(&mut sim, ActionSource::Natural(&mut rng), spec, &s0).unwrap()
}

#[test]
fn fixed_actions_replay_bit_identically() {
    let spec = RewardSpec::new(1e4, 1e3, 0.0).unwrap();
    let cart = CartpoleSim::default();
    let walk = CrosswalkSim::default();
    let enc = EncounterSim::from_params(EncounterParams::default()).unwrap();
    for seed in 0..20 {
        let t = natural(&cart, &spec, seed);
        assert_eq!(replay(&cart, &t, &spec), t);
        let t = natural(&walk, &spec, seed);
        assert_eq!(replay(&walk, &t, &spec), t);
        let plain = RewardSpec::default();
        let t = natural(&enc, &plain, seed);
        assert_eq!(replay(&enc, &t, &plain), t);
    }
}

#[test]
fn solvers_are_pure_functions_of_their_seed() {
    let sim = CartpoleSim::default();
    let spec = RewardSpec::new(1e4, 1e3, 0.0).unwrap();
    assert_eq!(
        solve_random(&sim, &spec, 100, 4).unwrap(),
        solve_random(&sim, &spec, 100, 4).unwrap()
    );
    let mcts = MctsConfig {
        max_iterations: 100,
        rng_seed: 4,
        ..Default::default()
    };
    assert_eq!(
        solve_mcts(&sim, &spec, &mcts).unwrap(),
        solve_mcts(&sim, &spec, &mcts).unwrap()
    );
    let cem = CemConfig {
        population_size: 10,
        generations: 3,
        rng_seed: 4,
        ..Default::default()
    };
    assert_eq!(
        solve_cem(&sim, &spec, &cem).unwrap(),
        solve_cem(&sim, &spec, &cem).unwrap()
    );
}

#[test]
fn logged_trajectories_survive_a_round_trip() {
    let sim = CrosswalkSim::default();
    let spec = RewardSpec::new(1e5, 1e4, 0.0).unwrap();
    let report = solve_random(&sim, &spec, 50, 2).unwrap();
    let log = TrajectoryLog::from_trajectory("walk", Some("ab12"), &report.best_trajectory);
    let mut buf = Vec::new();
    log.write_to(&mut buf).unwrap();
    let back = TrajectoryLog::read_from(Cursor::new(&buf)).unwrap();
    assert_eq!(back, log);
    let replayed = replay(&sim, &report.best_trajectory, &spec);
    for (rec, step) in back.records.iter().zip(&replayed.steps) {
        assert_eq!(rec.reward.to_bits(), step.reward.to_bits());
        assert_eq!(rec.state, step.state);
    }
}
