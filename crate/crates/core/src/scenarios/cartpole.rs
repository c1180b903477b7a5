//! Cartpole with disturbance forces.
//!
//! The system under test is a linear state-feedback controller balancing the
//! pole. The environment action is an extra horizontal force on the cart,
//! naturally distributed as a zero-mean Gaussian. Failure is the cart leaving
//! `[-x_max, x_max]` or the pole leaning past `theta_max`.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::sim::{SimRng, Simulator, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartpoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartpoleState {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.x_dot.is_finite()
            && self.theta.is_finite()
            && self.theta_dot.is_finite()
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartpoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub gravity: f64,
    pub dt: f64,
    pub x_max: f64,
    pub theta_max: f64,
    /// Control force is `gains . [x, x_dot, theta, theta_dot]`.
    pub controller_gains: [f64; 4],
    pub disturbance_std: f64,
}

impl Default for CartpoleParams {
    fn default() -> Self {
        CartpoleParams {
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            gravity: 9.8,
            dt: 0.02,
            x_max: 2.4,
            theta_max: 12f64.to_radians(),
            // continuous-time LQR on the upright linearization, Q = I, R = 1
            controller_gains: [1.0, 2.3, 31.9, 8.2],
            disturbance_std: 7.0,
        }
    }
}

impl CartpoleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("pole_half_length", self.pole_half_length),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("x_max", self.x_max),
            ("disturbance_std", self.disturbance_std),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !(self.theta_max > 0.0 && self.theta_max < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                field: "theta_max",
                reason: format!("must lie in (0, pi/2), got {}", self.theta_max),
            });
        }
        if self.controller_gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "controller_gains",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn control_force(&self, s: &CartpoleState) -> f64 {
        self.controller_gains
            .iter()
            .zip(s.as_array())
            .map(|(g, v)| g * v)
            .sum()
    }
}

/// One semi-implicit Euler step of the classic cartpole equations of motion
/// under total horizontal force `control_force + disturbance`.
pub fn cartpole_step(
    s: &CartpoleState,
    control_force: f64,
    disturbance: f64,
    p: &CartpoleParams,
) -> Result<CartpoleState> {
    if !s.is_finite() {
        return Err(Error::NonFinite("cartpole state"));
    }
    if !control_force.is_finite() || !disturbance.is_finite() {
        return Err(Error::NonFinite("cartpole force"));
    }
    let force = control_force + disturbance;
    let total_mass = p.cart_mass + p.pole_mass;
    let pole_ml = p.pole_mass * p.pole_half_length;
    let (sin, cos) = s.theta.sin_cos();

    let temp = (force + pole_ml * s.theta_dot * s.theta_dot * sin) / total_mass;
    let theta_acc = (p.gravity * sin - cos * temp)
        / (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total_mass));
    let x_acc = temp - pole_ml * theta_acc * cos / total_mass;

    let x_dot = s.x_dot + p.dt * x_acc;
    let theta_dot = s.theta_dot + p.dt * theta_acc;
    Ok(CartpoleState {
        x: s.x + p.dt * x_dot,
        x_dot,
        theta: s.theta + p.dt * theta_dot,
        theta_dot,
    })
}

/// Strict-inequality failure test.
pub fn cartpole_event(s: &CartpoleState, p: &CartpoleParams) -> bool {
    s.x.abs() > p.x_max || s.theta.abs() > p.theta_max
}

/// Normalized distance to the failure set: 1 at the origin, 0 on the boundary.
pub fn cartpole_f(s: &CartpoleState, p: &CartpoleParams) -> f64 {
    let closeness = (s.x.abs() / p.x_max).max(s.theta.abs() / p.theta_max);
    1.0 - closeness.min(1.0)
}

/// Log-density of the natural disturbance distribution N(0, std^2).
pub fn cartpole_action_log_likelihood(disturbance: f64, p: &CartpoleParams) -> f64 {
    let z = disturbance / p.disturbance_std;
    -0.5 * z * z - p.disturbance_std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

#[derive(Debug, Clone)]
pub struct CartpoleSim {
    params: CartpoleParams,
    horizon: usize,
    s0: CartpoleState,
    state: CartpoleState,
    t: usize,
    terminal: bool,
}

impl CartpoleSim {
    pub fn new(params: CartpoleParams, horizon: usize, s0: CartpoleState) -> Result<Self> {
        params.validate()?;
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                field: "horizon",
                reason: "must be >= 1".into(),
            });
        }
        if !s0.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        let terminal = cartpole_event(&s0, &params);
        Ok(CartpoleSim {
            params,
            horizon,
            s0,
            state: s0,
            t: 0,
            terminal,
        })
    }

    pub fn params(&self) -> &CartpoleParams {
        &self.params
    }
}

impl Default for CartpoleSim {
    fn default() -> Self {
        CartpoleSim::new(CartpoleParams::default(), 100, CartpoleState::default())
            .expect("default cartpole parameters are valid")
    }
}

impl Simulator for CartpoleSim {
    type State = CartpoleState;

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous { dim: 1 }
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_state(&self) -> CartpoleState {
        self.s0
    }

    fn initialize(&mut self, s0: &CartpoleState) -> Result<()> {
        if !s0.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        self.state = *s0;
        self.t = 0;
        self.terminal = cartpole_event(s0, &self.params);
        Ok(())
    }

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        self.action_space().check(action)?;
        let disturbance = action.as_continuous().expect("checked")[0];
        let control = self.params.control_force(&self.state);
        self.state = cartpole_step(&self.state, control, disturbance, &self.params)?;
        self.t += 1;
        let event = cartpole_event(&self.state, &self.params);
        self.terminal = event || self.t >= self.horizon;
        Ok(StepOutcome {
            action_log_likelihood: cartpole_action_log_likelihood(disturbance, &self.params),
            action_penalty: None,
            event,
            terminal: self.terminal,
            heuristic_metric: Some(cartpole_f(&self.state, &self.params)),
        })
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn state(&self) -> &CartpoleState {
        &self.state
    }

    fn time_step(&self) -> usize {
        self.t
    }

    fn sample_action(&self, rng: &mut SimRng) -> EnvironmentAction {
        let normal = Normal::new(0.0, self.params.disturbance_std).expect("std validated");
        EnvironmentAction::Continuous(vec![normal.sample(rng)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardSpec;
    use crate::rollout::{rollout, ActionSource};

    fn p() -> CartpoleParams {
        CartpoleParams::default()
    }

    #[test]
    fn upright_origin_is_a_fixed_point() {
        let s = cartpole_step(&CartpoleState::default(), 0.0, 0.0, &p()).unwrap();
        assert_eq!(s, CartpoleState::default());
    }

    #[test]
    fn push_moves_cart_and_tips_pole() {
        let s = cartpole_step(&CartpoleState::default(), 0.0, 10.0, &p()).unwrap();
        assert!(s.x_dot > 0.0);
        assert!(s.theta_dot != 0.0);
        assert!(s.theta_dot < 0.0, "pole lags behind an accelerating cart");
    }

    #[test]
    fn unforced_pole_falls_at_linearized_rate() {
        let p = p();
        let total = p.cart_mass + p.pole_mass;
        let lambda = (p.gravity / (p.pole_half_length * (4.0 / 3.0 - p.pole_mass / total))).sqrt();
        assert!(lambda > 0.0);
        let theta0 = 1e-4;
        let mut s = CartpoleState {
            theta: theta0,
            ..Default::default()
        };
        for k in 1..=15 {
            s = cartpole_step(&s, 0.0, 0.0, &p).unwrap();
            let expected = theta0 * (lambda * p.dt * k as f64).cosh();
            assert!(s.theta > theta0);
            assert!(
                (s.theta - expected).abs() / expected < 0.05,
                "step {k}: {} vs {expected}",
                s.theta
            );
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let bad = CartpoleState {
            x: f64::NAN,
            ..Default::default()
        };
        assert!(cartpole_step(&bad, 0.0, 0.0, &p()).is_err());
        assert!(cartpole_step(&CartpoleState::default(), f64::INFINITY, 0.0, &p()).is_err());
    }

    #[test]
    fn failure_set_uses_strict_inequalities() {
        let p = p();
        let at = |x, theta| CartpoleState {
            x,
            theta,
            ..Default::default()
        };
        assert!(cartpole_event(&at(p.x_max + 0.01, 0.0), &p));
        assert!(!cartpole_event(&at(0.0, 0.0), &p));
        assert!(!cartpole_event(&at(p.x_max, 0.0), &p));
        assert!(cartpole_event(&at(0.0, -p.theta_max - 1e-9), &p));
    }

    #[test]
    fn normalized_distance_to_failure() {
        let p = p();
        let at = |x, theta| CartpoleState {
            x,
            theta,
            ..Default::default()
        };
        assert_eq!(cartpole_f(&at(0.0, 0.0), &p), 1.0);
        assert_eq!(cartpole_f(&at(0.0, p.theta_max), &p), 0.0);
        assert_eq!(cartpole_f(&at(0.5 * p.x_max, 0.25 * p.theta_max), &p), 0.5);
        assert_eq!(cartpole_f(&at(3.0 * p.x_max, 0.0), &p), 0.0);
    }

    #[test]
    fn disturbance_log_density() {
        let mut p = p();
        p.disturbance_std = 1.0;
        let at_mean = cartpole_action_log_likelihood(0.0, &p);
        assert!((at_mean + 0.918_938_533_204_672_7).abs() < 1e-15);
        for sigma in [0.3, 1.0, 7.0] {
            p.disturbance_std = sigma;
            let diff =
                cartpole_action_log_likelihood(sigma, &p) - cartpole_action_log_likelihood(0.0, &p);
            assert!((diff + 0.5).abs() < 1e-12);
            assert!(
                cartpole_action_log_likelihood(0.5, &p) > cartpole_action_log_likelihood(-0.7, &p)
            );
        }
    }

    #[test]
    fn balanced_without_disturbance() {
        let mut sim = CartpoleSim::default();
        let actions = vec![EnvironmentAction::Continuous(vec![0.0]); sim.horizon()];
        for s0 in [
            CartpoleState::default(),
            CartpoleState {
                x: 0.5,
                theta: 0.1,
                ..Default::default()
            },
        ] {
            let traj = rollout(
                &mut sim,
                ActionSource::Fixed(&actions),
                &RewardSpec::default(),
                &s0,
            )
            .unwrap();
            assert!(!traj.found_event);
            assert!(traj.horizon_reached);
            assert_eq!(traj.len(), sim.horizon());
            assert!(sim.state().theta.abs() < 0.1 * p().theta_max);
        }
    }

    #[test]
    fn reward_wiring_at_the_horizon() {
        let spec = RewardSpec::new(1e4, 1e3, 0.0).unwrap();
        let mut sim = CartpoleSim::default();
        let actions = vec![EnvironmentAction::Continuous(vec![0.0]); sim.horizon()];
        let s0 = CartpoleState::default();
        let traj = rollout(&mut sim, ActionSource::Fixed(&actions), &spec, &s0).unwrap();
        assert_eq!(traj.steps.last().unwrap().reward, -11000.0);
    }

    #[test]
    fn validation() {
        let mut params = p();
        params.theta_max = 2.0;
        assert!(matches!(
            CartpoleSim::new(params, 10, CartpoleState::default()),
            Err(Error::InvalidParameter {
                field: "theta_max",
                ..
            })
        ));
        let mut params = p();
        params.dt = 0.0;
        assert!(params.validate().is_err());
    }

    #[test]
    fn step_after_terminal_is_an_error() {
        let mut sim = CartpoleSim::new(p(), 1, CartpoleState::default()).unwrap();
        sim.step(&EnvironmentAction::Continuous(vec![0.0])).unwrap();
        assert!(sim.is_terminal());
        assert_eq!(
            sim.step(&EnvironmentAction::Continuous(vec![0.0])),
            Err(Error::StepAfterTerminal)
        );
    }
}
