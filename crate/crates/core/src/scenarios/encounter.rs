//! Toy multi-aircraft encounter driven by seed actions.
//!
//! Aircraft fly straight at constant speed. A threshold advisory logic
//! projects each pair to its closest point of approach and, when the
//! projected miss falls inside the trigger box, tells the higher aircraft to
//! climb and the lower one to descend. Each step a pilot who has not yet
//! complied does so with a fixed probability (a geometric response delay),
//! and every aircraft's vertical rate receives discretized Gaussian noise.
//! Both random elements have finite support, so the step reports the exact
//! log-probability of what it sampled.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::seed::{SeedWrapped, StochasticModel};
use crate::sim::SimRng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PilotMode {
    #[default]
    Level,
    Climb,
    Descend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aircraft {
    /// Horizontal position, feet.
    pub x: f64,
    pub y: f64,
    /// Feet.
    pub altitude: f64,
    /// Radians, counterclockwise from +x.
    pub heading: f64,
    /// Horizontal speed, ft/s.
    pub speed: f64,
    /// ft/s, positive up.
    #[serde(default)]
    pub vertical_rate: f64,
    #[serde(default)]
    pub mode: PilotMode,
    #[serde(default)]
    pub advisory: Option<PilotMode>,
}

impl Aircraft {
    pub fn new(x: f64, y: f64, altitude: f64, heading_deg: f64, speed: f64) -> Self {
        Aircraft {
            x,
            y,
            altitude,
            heading: heading_deg.to_radians(),
            speed,
            vertical_rate: 0.0,
            mode: PilotMode::Level,
            advisory: None,
        }
    }

    fn velocity(&self) -> (f64, f64) {
        (
            self.speed * self.heading.cos(),
            self.speed * self.heading.sin(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterState {
    pub aircraft: Vec<Aircraft>,
}

/// Near mid-air collision thresholds in feet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmacParams {
    pub vertical_threshold: f64,
    pub horizontal_threshold: f64,
}

impl Default for NmacParams {
    fn default() -> Self {
        NmacParams {
            vertical_threshold: 100.0,
            horizontal_threshold: 500.0,
        }
    }
}

/// Horizontal and vertical separation of a pair, feet.
pub fn separation(a: &Aircraft, b: &Aircraft) -> (f64, f64) {
    (
        (a.x - b.x).hypot(a.y - b.y),
        (a.altitude - b.altitude).abs(),
    )
}

/// True iff some pair is strictly within both thresholds.
pub fn nmac(state: &EncounterState, p: &NmacParams) -> Result<bool> {
    let n = state.aircraft.len();
    if n < 2 {
        return Err(Error::TooFewAircraft(n));
    }
    for (i, a) in state.aircraft.iter().enumerate() {
        for b in &state.aircraft[i + 1..] {
            let (h, v) = separation(a, b);
            if h < p.horizontal_threshold && v < p.vertical_threshold {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncounterParams {
    pub aircraft: Vec<Aircraft>,
    /// Seconds per step.
    pub dt: f64,
    pub horizon: usize,
    /// Projected horizontal miss (feet) below which an advisory is issued.
    pub advisory_horizontal_trigger: f64,
    /// Projected vertical miss (feet) below which an advisory is issued.
    pub advisory_vertical_trigger: f64,
    /// Seconds ahead the closest point of approach is searched.
    pub advisory_lookahead: f64,
    /// An advisory clears once the projected miss exceeds trigger * hysteresis.
    pub advisory_hysteresis: f64,
    /// Vertical rate commanded by an advisory, ft/s.
    pub advisory_rate: f64,
    /// Per-step probability that a pilot starts complying with an advisory.
    pub response_probability: f64,
    /// Spacing of the vertical-rate noise support, ft/s.
    pub noise_step: f64,
    /// Noise support is `-noise_levels..=noise_levels` times `noise_step`.
    pub noise_levels: u32,
    /// Standard deviation of the noise, in units of `noise_step`.
    pub noise_sigma: f64,
    pub nmac: NmacParams,
    /// Must be set to use NMAC thresholds other than 100 ft / 500 ft.
    pub nmac_override: bool,
}

impl Default for EncounterParams {
    /// Two aircraft head-on at the same altitude, 16,000 ft apart, closing
    /// at 600 ft/s.
    fn default() -> Self {
        EncounterParams {
            aircraft: vec![
                Aircraft::new(-8000.0, 0.0, 10_000.0, 0.0, 300.0),
                Aircraft::new(8000.0, 0.0, 10_000.0, 180.0, 300.0),
            ],
            dt: 1.0,
            horizon: 40,
            advisory_horizontal_trigger: 2000.0,
            advisory_vertical_trigger: 600.0,
            advisory_lookahead: 15.0,
            advisory_hysteresis: 1.5,
            advisory_rate: 25.0,
            response_probability: 0.1,
            noise_step: 3.0,
            noise_levels: 2,
            noise_sigma: 1.0,
            nmac: NmacParams::default(),
            nmac_override: false,
        }
    }
}

impl EncounterParams {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: String| Err(Error::InvalidParameter { field, reason });
        let n = self.aircraft.len();
        if n < 2 {
            return Err(Error::TooFewAircraft(n));
        }
        if n > 3 {
            return invalid(
                "aircraft",
                format!("two or three aircraft supported, got {n}"),
            );
        }
        for a in &self.aircraft {
            if !(a.speed.is_finite() && a.speed >= 0.0) {
                return invalid("aircraft", "speeds must be finite and >= 0".into());
            }
            if ![a.x, a.y, a.altitude, a.heading, a.vertical_rate]
                .iter()
                .all(|v| v.is_finite())
            {
                return invalid("aircraft", "non-finite initial geometry".into());
            }
        }
        let positive = [
            ("dt", self.dt),
            (
                "advisory_horizontal_trigger",
                self.advisory_horizontal_trigger,
            ),
            ("advisory_vertical_trigger", self.advisory_vertical_trigger),
            ("advisory_lookahead", self.advisory_lookahead),
            ("advisory_rate", self.advisory_rate),
            ("noise_step", self.noise_step),
            ("noise_sigma", self.noise_sigma),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return invalid(field, format!("must be finite and > 0, got {v}"));
            }
        }
        if !(self.advisory_hysteresis.is_finite() && self.advisory_hysteresis >= 1.0) {
            return invalid("advisory_hysteresis", "must be >= 1".into());
        }
        if !(self.response_probability > 0.0 && self.response_probability < 1.0) {
            return invalid("response_probability", "must lie in (0, 1)".into());
        }
        if self.horizon == 0 {
            return invalid("horizon", "must be >= 1".into());
        }
        if self.nmac != NmacParams::default() && !self.nmac_override {
            return invalid(
                "nmac",
                "thresholds differ from 100 ft / 500 ft; set nmac_override = true".into(),
            );
        }
        if !(self.nmac.vertical_threshold > 0.0 && self.nmac.horizontal_threshold > 0.0) {
            return invalid("nmac", "thresholds must be > 0".into());
        }
        Ok(())
    }

    /// Probabilities of noise levels `-noise_levels..=noise_levels`.
    pub fn noise_distribution(&self) -> Vec<f64> {
        let k = self.noise_levels as i64;
        let w: Vec<f64> = (-k..=k)
            .map(|i| (-(i * i) as f64 / (2.0 * self.noise_sigma * self.noise_sigma)).exp())
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    fn commanded_rate(&self, mode: PilotMode) -> f64 {
        match mode {
            PilotMode::Level => 0.0,
            PilotMode::Climb => self.advisory_rate,
            PilotMode::Descend => -self.advisory_rate,
        }
    }
}

/// Projected (horizontal, vertical) miss distance at the closest horizontal
/// approach within `lookahead` seconds.
fn projected_miss(a: &Aircraft, b: &Aircraft, lookahead: f64) -> (f64, f64) {
    let (px, py) = (b.x - a.x, b.y - a.y);
    let (avx, avy) = a.velocity();
    let (bvx, bvy) = b.velocity();
    let (vx, vy) = (bvx - avx, bvy - avy);
    let v2 = vx * vx + vy * vy;
    let tau = if v2 > 0.0 {
        (-(px * vx + py * vy) / v2).clamp(0.0, lookahead)
    } else {
        0.0
    };
    let dz = b.altitude - a.altitude;
    let dvz = b.vertical_rate - a.vertical_rate;
    ((px + vx * tau).hypot(py + vy * tau), (dz + dvz * tau).abs())
}

#[derive(Debug, Clone)]
pub struct EncounterModel {
    params: EncounterParams,
    noise: Vec<f64>,
}

impl EncounterModel {
    pub fn new(params: EncounterParams) -> Result<Self> {
        params.validate()?;
        let noise = params.noise_distribution();
        Ok(EncounterModel { params, noise })
    }

    pub fn params(&self) -> &EncounterParams {
        &self.params
    }

    /// Deterministic advisory update with hysteresis.
    fn update_advisories(&self, aircraft: &mut [Aircraft]) {
        let p = &self.params;
        let n = aircraft.len();
        let mut issue: Vec<Option<PilotMode>> = vec![None; n];
        let mut keep = vec![false; n];
        for i in 0..n {
            for j in i + 1..n {
                let (h, v) = projected_miss(&aircraft[i], &aircraft[j], p.advisory_lookahead);
                if h < p.advisory_horizontal_trigger && v < p.advisory_vertical_trigger {
                    let (hi, lo) = if aircraft[j].altitude > aircraft[i].altitude {
                        (j, i)
                    } else {
                        (i, j)
                    };
                    issue[hi].get_or_insert(PilotMode::Climb);
                    issue[lo].get_or_insert(PilotMode::Descend);
                }
                if h <= p.advisory_horizontal_trigger * p.advisory_hysteresis
                    && v <= p.advisory_vertical_trigger * p.advisory_hysteresis
                {
                    keep[i] = true;
                    keep[j] = true;
                }
            }
        }
        for (k, a) in aircraft.iter_mut().enumerate() {
            a.advisory = match (a.advisory, issue[k]) {
                // no reversals while an advisory is active
                (Some(active), _) if keep[k] => Some(active),
                (_, fresh) => fresh,
            };
        }
    }
}

impl Default for EncounterModel {
    fn default() -> Self {
        EncounterModel::new(EncounterParams::default()).expect("default encounter is valid")
    }
}

fn sample_index(weights: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl StochasticModel for EncounterModel {
    type State = EncounterState;

    fn initial_state(&self) -> EncounterState {
        EncounterState {
            aircraft: self.params.aircraft.clone(),
        }
    }

    fn validate_state(&self, state: &EncounterState) -> Result<()> {
        if state.aircraft.len() < 2 {
            return Err(Error::TooFewAircraft(state.aircraft.len()));
        }
        Ok(())
    }

    fn sample_transition(&self, state: &EncounterState, rng: &mut SimRng) -> (EncounterState, f64) {
        let p = &self.params;
        let mut aircraft = state.aircraft.clone();
        self.update_advisories(&mut aircraft);

        let mut log_p = 0.0;
        for a in aircraft.iter_mut() {
            match a.advisory {
                Some(sense) if a.mode != sense => {
                    if rng.random::<f64>() < p.response_probability {
                        a.mode = sense;
                        log_p += p.response_probability.ln();
                    } else {
                        log_p += (1.0 - p.response_probability).ln();
                    }
                }
                Some(_) => {}
                None => a.mode = PilotMode::Level,
            }
        }
        for a in aircraft.iter_mut() {
            let level = sample_index(&self.noise, rng);
            log_p += self.noise[level].ln();
            let offset = level as f64 - p.noise_levels as f64;
            a.vertical_rate = p.commanded_rate(a.mode) + offset * p.noise_step;
        }
        for a in aircraft.iter_mut() {
            let (vx, vy) = a.velocity();
            a.x += vx * p.dt;
            a.y += vy * p.dt;
            a.altitude += a.vertical_rate * p.dt;
        }
        (EncounterState { aircraft }, log_p)
    }

    fn is_event(&self, state: &EncounterState) -> bool {
        nmac(state, &self.params.nmac).expect("aircraft count validated")
    }
}

pub type EncounterSim = SeedWrapped<EncounterModel>;

impl EncounterSim {
    pub fn from_params(params: EncounterParams) -> Result<Self> {
        let horizon = params.horizon;
        SeedWrapped::new(EncounterModel::new(params)?, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::EnvironmentAction;
    use crate::reward::RewardSpec;
    use crate::rollout::{run_to_terminal, ActionSource};
    use crate::sim::Simulator;
    use rand::SeedableRng;

    fn pair(h: f64, v: f64) -> EncounterState {
        EncounterState {
            aircraft: vec![
                Aircraft::new(0.0, 0.0, 5000.0, 0.0, 200.0),
                Aircraft::new(h, 0.0, 5000.0 + v, 90.0, 200.0),
            ],
        }
    }

    #[test]
    fn nmac_thresholds_are_strict() {
        let p = NmacParams::default();
        assert!(nmac(&pair(499.0, 99.0), &p).unwrap());
        assert!(!nmac(&pair(499.0, 100.0), &p).unwrap());
        assert!(!nmac(&pair(500.0, 99.0), &p).unwrap());
        assert!(!nmac(&pair(0.0, 101.0), &p).unwrap());
    }

    #[test]
    fn nmac_any_pair_and_order_independent() {
        let p = NmacParams::default();
        let mut s = pair(499.0, 99.0);
        s.aircraft
            .insert(0, Aircraft::new(-30_000.0, 0.0, 9000.0, 0.0, 100.0));
        assert!(nmac(&s, &p).unwrap());
        s.aircraft.reverse();
        assert!(nmac(&s, &p).unwrap());
        s.aircraft.swap(0, 1);
        assert!(nmac(&s, &p).unwrap());
    }

    #[test]
    fn nmac_needs_two_aircraft() {
        let s = EncounterState {
            aircraft: vec![Aircraft::new(0.0, 0.0, 0.0, 0.0, 0.0)],
        };
        assert_eq!(
            nmac(&s, &NmacParams::default()),
            Err(Error::TooFewAircraft(1))
        );
    }

    #[test]
    fn nmac_override_is_required() {
        let mut p = EncounterParams::default();
        p.nmac.horizontal_threshold = 1000.0;
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { field: "nmac", .. })
        ));
        p.nmac_override = true;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn parallel_tracks_far_apart_never_collide() {
        let params = EncounterParams {
            aircraft: vec![
                Aircraft::new(0.0, 0.0, 10_000.0, 0.0, 300.0),
                Aircraft::new(0.0, 10_000.0, 10_000.0, 0.0, 250.0),
            ],
            ..EncounterParams::default()
        };
        let mut sim = EncounterSim::from_params(params).unwrap();
        let mut rng = SimRng::seed_from_u64(9);
        for _ in 0..50 {
            sim.reset().unwrap();
            let traj = run_to_terminal(
                &mut sim,
                ActionSource::Natural(&mut rng),
                &RewardSpec::default(),
                false,
            )
            .unwrap();
            assert!(!traj.found_event);
            assert_eq!(traj.len(), 40);
        }
    }

    /// Recomputes the step probability from the observed state change.
    fn oracle_log_p(
        params: &EncounterParams,
        before: &EncounterState,
        after: &EncounterState,
    ) -> f64 {
        let k = params.noise_levels as i64;
        let w: Vec<f64> = (-k..=k)
            .map(|i| (-0.5 * (i as f64 / params.noise_sigma).powi(2)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let mut log_p = 0.0;
        for (a, b) in before.aircraft.iter().zip(&after.aircraft) {
            if let Some(sense) = b.advisory {
                if a.mode != sense {
                    log_p += if b.mode == sense {
                        params.response_probability.ln()
                    } else {
                        (1.0 - params.response_probability).ln()
                    };
                }
            }
            let commanded = match b.mode {
                PilotMode::Level => 0.0,
                PilotMode::Climb => params.advisory_rate,
                PilotMode::Descend => -params.advisory_rate,
            };
            let level = ((b.vertical_rate - commanded) / params.noise_step).round() as i64;
            assert!(level.abs() <= k);
            log_p += (w[(level + k) as usize] / z).ln();
        }
        log_p
    }

    #[test]
    fn reported_log_probability_matches_sampled_outcomes() {
        let params = EncounterParams::default();
        let mut sim = EncounterSim::from_params(params.clone()).unwrap();
        let mut rng = SimRng::seed_from_u64(21);
        let mut saw_advisory = false;
        for _ in 0..20 {
            sim.reset().unwrap();
            while !sim.is_terminal() {
                let before = sim.state().clone();
                let o = sim.step(&EnvironmentAction::Seed(rng.random())).unwrap();
                let after = sim.state();
                saw_advisory |= after.aircraft.iter().any(|a| a.advisory.is_some());
                let expected = oracle_log_p(&params, &before, after);
                assert!((o.action_log_likelihood - expected).abs() < 1e-12);
            }
        }
        assert!(saw_advisory);
    }

    #[test]
    fn noise_distribution_is_normalized_and_symmetric() {
        let d = EncounterParams::default().noise_distribution();
        assert_eq!(d.len(), 5);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(d[0], d[4]);
        assert!(d[2] > d[1]);
    }

    #[test]
    fn advisories_resolve_most_encounters() {
        let mut sim = EncounterSim::from_params(EncounterParams::default()).unwrap();
        let mut rng = SimRng::seed_from_u64(4);
        let n = 400;
        let mut events = 0;
        for _ in 0..n {
            sim.reset().unwrap();
            let traj = run_to_terminal(
                &mut sim,
                ActionSource::Natural(&mut rng),
                &RewardSpec::default(),
                false,
            )
            .unwrap();
            events += traj.found_event as usize;
        }
        assert!(events > 0, "failure should be reachable");
        assert!(events < n / 5, "{events} NMACs in {n} encounters");
    }
}
