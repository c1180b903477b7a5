//! Autonomous vehicle approaching a crosswalk.
//!
//! Frame: x along the road (east positive), y across it (north positive),
//! crosswalk centerline at x = 0. The vehicle drives east along y = 0 under
//! an intelligent-driver-model controller that treats a pedestrian observed
//! inside its lane as the lead obstacle. The environment action is six
//! numbers: pedestrian acceleration (x, y), and additive noise on the
//! vehicle's observation of pedestrian position (x, y) and velocity (x, y).
//! The per-step action cost is the Mahalanobis distance of the action from
//! its natural mean.

use nalgebra::{Cholesky, Matrix6, Vector6};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, EnvironmentAction};
use crate::error::{Error, Result};
use crate::sim::{SimRng, Simulator, StepOutcome};

pub const ACTION_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    pub desired_speed: f64,
    pub min_gap: f64,
    pub time_headway: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub accel_exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        IdmParams {
            desired_speed: 11.2,
            min_gap: 2.0,
            time_headway: 1.5,
            max_accel: 2.0,
            comfortable_decel: 3.0,
            accel_exponent: 4.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("desired_speed", self.desired_speed),
            ("min_gap", self.min_gap),
            ("time_headway", self.time_headway),
            ("max_accel", self.max_accel),
            ("comfortable_decel", self.comfortable_decel),
            ("accel_exponent", self.accel_exponent),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Desired dynamic gap `s*`.
    pub fn desired_gap(&self, own_speed: f64, closing_speed: f64) -> f64 {
        let dynamic = own_speed * self.time_headway
            + own_speed * closing_speed / (2.0 * (self.max_accel * self.comfortable_decel).sqrt());
        self.min_gap + dynamic.max(0.0)
    }
}

/// IDM acceleration toward a lead obstacle `gap` meters ahead, clamped to
/// `[-2 * comfortable_decel, max_accel]`. Pass `f64::INFINITY` for free road.
pub fn idm_accel(gap: f64, own_speed: f64, closing_speed: f64, p: &IdmParams) -> Result<f64> {
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "gap",
            reason: format!("must be > 0, got {gap}"),
        });
    }
    let free = (own_speed / p.desired_speed).powf(p.accel_exponent);
    let interaction = if gap.is_infinite() {
        0.0
    } else {
        (p.desired_gap(own_speed, closing_speed) / gap).powi(2)
    };
    let a = p.max_accel * (1.0 - free - interaction);
    Ok(a.clamp(-2.0 * p.comfortable_decel, p.max_accel))
}

/// Gaussian model of the natural action distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionModel {
    pub mean: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    chol_l: Matrix6<f64>,
    log_det: f64,
}

impl ActionModel {
    pub fn new(mean: Vector6<f64>, covariance: Matrix6<f64>) -> Result<Self> {
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action model"));
        }
        if (covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(covariance).ok_or(Error::NotPositiveDefinite)?;
        let chol_l = chol.l();
        let log_det = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(ActionModel {
            mean,
            covariance,
            chol_l,
            log_det,
        })
    }

    pub fn diagonal(mean: Vector6<f64>, stds: [f64; ACTION_DIM]) -> Result<Self> {
        let var = Vector6::from_iterator(stds.iter().map(|s| s * s));
        ActionModel::new(mean, Matrix6::from_diagonal(&var))
    }

    /// Squared Mahalanobis distance via a triangular solve.
    fn squared_distance(&self, a: &Vector6<f64>) -> f64 {
        let d = a - self.mean;
        let y = self
            .chol_l
            .solve_lower_triangular(&d)
            .expect("Cholesky factor has a positive diagonal");
        y.norm_squared()
    }

    pub fn log_density(&self, a: &Vector6<f64>) -> f64 {
        let k = ACTION_DIM as f64;
        -0.5 * (self.squared_distance(a) + self.log_det + k * (2.0 * std::f64::consts::PI).ln())
    }

    pub fn sample(&self, rng: &mut SimRng) -> Vector6<f64> {
        let z = Vector6::from_fn(|_, _| StandardNormal.sample(rng));
        self.mean + self.chol_l * z
    }
}

/// `sqrt((a - mu)^T Sigma^-1 (a - mu))`.
pub fn mahalanobis(a: &Vector6<f64>, model: &ActionModel) -> f64 {
    model.squared_distance(a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkState {
    pub vehicle_pos: [f64; 2],
    /// Eastward speed, never negative.
    pub vehicle_vel: f64,
    pub pedestrian_pos: [f64; 2],
    pub pedestrian_vel: [f64; 2],
    pub t: usize,
}

/// Center-to-center distance between vehicle and pedestrian.
pub fn crosswalk_f(s: &CrosswalkState) -> f64 {
    (s.vehicle_pos[0] - s.pedestrian_pos[0]).hypot(s.vehicle_pos[1] - s.pedestrian_pos[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosswalkParams {
    pub idm: IdmParams,
    pub dt: f64,
    pub horizon: usize,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    pub pedestrian_size: f64,
    /// The vehicle reacts to pedestrians observed with |y| below this.
    pub lane_half_width: f64,
    /// Standard deviations of the six action components.
    pub action_std: [f64; ACTION_DIM],
    pub vehicle_start: [f64; 2],
    pub vehicle_speed: f64,
    pub pedestrian_start: [f64; 2],
    pub pedestrian_velocity: [f64; 2],
}

impl Default for CrosswalkParams {
    fn default() -> Self {
        CrosswalkParams {
            idm: IdmParams::default(),
            dt: 0.1,
            horizon: 35,
            vehicle_length: 4.7,
            vehicle_width: 2.0,
            pedestrian_size: 0.6,
            lane_half_width: 1.5,
            action_std: [1.0, 1.0, 0.1, 0.1, 0.1, 0.1],
            vehicle_start: [-35.0, 0.0],
            vehicle_speed: 11.2,
            pedestrian_start: [0.0, -2.0],
            pedestrian_velocity: [0.0, 1.0],
        }
    }
}

impl CrosswalkParams {
    pub fn validate(&self) -> Result<()> {
        self.idm.validate()?;
        let positive = [
            ("dt", self.dt),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
            ("pedestrian_size", self.pedestrian_size),
            ("lane_half_width", self.lane_half_width),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if self.action_std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter {
                field: "action_std",
                reason: "all entries must be finite and > 0".into(),
            });
        }
        if !(self.vehicle_speed.is_finite() && self.vehicle_speed >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "vehicle_speed",
                reason: "must be finite and >= 0".into(),
            });
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter {
                field: "horizon",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn initial_state(&self) -> CrosswalkState {
        CrosswalkState {
            vehicle_pos: self.vehicle_start,
            vehicle_vel: self.vehicle_speed,
            pedestrian_pos: self.pedestrian_start,
            pedestrian_vel: self.pedestrian_velocity,
            t: 0,
        }
    }

    /// Axis-aligned box overlap between vehicle and pedestrian.
    pub fn collides(&self, vehicle: [f64; 2], pedestrian: [f64; 2]) -> bool {
        let half_x = 0.5 * (self.vehicle_length + self.pedestrian_size);
        let half_y = 0.5 * (self.vehicle_width + self.pedestrian_size);
        (vehicle[0] - pedestrian[0]).abs() < half_x && (vehicle[1] - pedestrian[1]).abs() < half_y
    }

    /// Gap from the vehicle's front bumper to an observed pedestrian's rear
    /// edge, or infinity when the pedestrian is not an obstacle.
    fn observed_gap(&self, s: &CrosswalkState, observed_pos: [f64; 2]) -> f64 {
        let in_lane = (observed_pos[1] - s.vehicle_pos[1]).abs() < self.lane_half_width;
        let ahead = observed_pos[0] > s.vehicle_pos[0];
        if !(in_lane && ahead) {
            return f64::INFINITY;
        }
        observed_pos[0]
            - 0.5 * self.pedestrian_size
            - (s.vehicle_pos[0] + 0.5 * self.vehicle_length)
    }
}

/// Advances pedestrian and vehicle by one step. Returns the new state and
/// whether the two bodies overlap.
pub fn crosswalk_step(
    s: &CrosswalkState,
    action: &[f64; ACTION_DIM],
    p: &CrosswalkParams,
) -> Result<(CrosswalkState, bool)> {
    if action.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("crosswalk action"));
    }
    let dt = p.dt;
    let mut next = *s;

    // pedestrian follows the commanded acceleration
    for (k, accel) in action.iter().take(2).enumerate() {
        next.pedestrian_vel[k] += accel * dt;
        next.pedestrian_pos[k] += next.pedestrian_vel[k] * dt;
    }

    // the vehicle reacts to a noisy observation of the pedestrian
    let obs_pos = [
        next.pedestrian_pos[0] + action[2],
        next.pedestrian_pos[1] + action[3],
    ];
    let obs_vel_x = next.pedestrian_vel[0] + action[4];
    let gap = p.observed_gap(s, obs_pos);
    let accel = if gap > 0.0 {
        idm_accel(gap, s.vehicle_vel, s.vehicle_vel - obs_vel_x, &p.idm)?
    } else {
        -2.0 * p.idm.comfortable_decel
    };
    next.vehicle_vel = (s.vehicle_vel + accel * dt).max(0.0);
    next.vehicle_pos[0] += next.vehicle_vel * dt;
    next.t += 1;

    let event = p.collides(next.vehicle_pos, next.pedestrian_pos);
    Ok((next, event))
}

#[derive(Debug, Clone)]
pub struct CrosswalkSim {
    params: CrosswalkParams,
    model: ActionModel,
    s0: CrosswalkState,
    state: CrosswalkState,
    terminal: bool,
}

impl CrosswalkSim {
    pub fn new(params: CrosswalkParams) -> Result<Self> {
        params.validate()?;
        let model = ActionModel::diagonal(Vector6::zeros(), params.action_std)?;
        let s0 = params.initial_state();
        let terminal = params.collides(s0.vehicle_pos, s0.pedestrian_pos);
        Ok(CrosswalkSim {
            params,
            model,
            s0,
            state: s0,
            terminal,
        })
    }

    pub fn params(&self) -> &CrosswalkParams {
        &self.params
    }

    pub fn action_model(&self) -> &ActionModel {
        &self.model
    }
}

impl Default for CrosswalkSim {
    fn default() -> Self {
        CrosswalkSim::new(CrosswalkParams::default()).expect("default crosswalk is valid")
    }
}

impl Simulator for CrosswalkSim {
    type State = CrosswalkState;

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous { dim: ACTION_DIM }
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn initial_state(&self) -> CrosswalkState {
        self.s0
    }

    fn initialize(&mut self, s0: &CrosswalkState) -> Result<()> {
        if !(s0.vehicle_vel.is_finite() && s0.vehicle_vel >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "vehicle_vel",
                reason: "must be finite and >= 0".into(),
            });
        }
        self.state = CrosswalkState { t: 0, ..*s0 };
        self.terminal = self.params.collides(s0.vehicle_pos, s0.pedestrian_pos);
        Ok(())
    }

    fn step(&mut self, action: &EnvironmentAction) -> Result<StepOutcome> {
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        self.action_space().check(action)?;
        let a: [f64; ACTION_DIM] = action
            .as_continuous()
            .expect("checked")
            .try_into()
            .expect("checked");
        let (next, event) = crosswalk_step(&self.state, &a, &self.params)?;
        self.state = next;
        self.terminal = event || self.state.t >= self.params.horizon;
        let av = Vector6::from(a);
        Ok(StepOutcome {
            action_log_likelihood: self.model.log_density(&av),
            action_penalty: Some(mahalanobis(&av, &self.model)),
            event,
            terminal: self.terminal,
            heuristic_metric: Some(crosswalk_f(&self.state)),
        })
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn state(&self) -> &CrosswalkState {
        &self.state
    }

    fn time_step(&self) -> usize {
        self.state.t
    }

    fn sample_action(&self, rng: &mut SimRng) -> EnvironmentAction {
        EnvironmentAction::Continuous(self.model.sample(rng).iter().copied().collect())
    }
}
