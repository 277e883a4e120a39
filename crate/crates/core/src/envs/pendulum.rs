use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_scalar_action, GenerativeModel, Transition};
use crate::error::{Error, Result};
use crate::partition::ActionSpace;

/// Torque-limited pendulum; angle 0 is upright.
#[derive(Clone, Debug, PartialEq)]
pub struct PendulumParams {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub max_torque: f64,
    pub episode_length: usize,
    /// Start angle is uniform in `[-init_angle, init_angle]`.
    pub init_angle: f64,
    /// Start velocity is uniform in `[-init_speed, init_speed]`.
    pub init_speed: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            dt: 0.05,
            max_speed: 8.0,
            max_torque: 2.0,
            episode_length: 100,
            init_angle: PI / 2.0,
            init_speed: 1.0,
        }
    }
}

impl PendulumParams {
    /// Largest raw cost over the admissible state/torque box.
    pub fn max_cost(&self) -> f64 {
        PI * PI + 0.1 * self.max_speed * self.max_speed + 0.001 * self.max_torque * self.max_torque
    }

    /// Angular acceleration from gravity per unit `sin(theta)`.
    pub fn gravity_gain(&self) -> f64 {
        3.0 * self.gravity / (2.0 * self.length)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PendulumState {
    /// Wrapped to `(-pi, pi]`.
    pub theta: f64,
    pub theta_dot: f64,
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Semi-implicit Euler step. The reward is `1 - c / c_max` with
/// `c = theta^2 + 0.1 theta_dot^2 + 0.001 torque^2` evaluated at the
/// pre-step state. Never terminal.
pub fn pendulum_step(
    state: &PendulumState,
    torque: f64,
    params: &PendulumParams,
) -> Result<(PendulumState, f64, bool)> {
    let torque = check_scalar_action(&[torque], params.max_torque)?;
    let theta = wrap_angle(state.theta);
    let cost = theta * theta + 0.1 * state.theta_dot * state.theta_dot + 0.001 * torque * torque;
    let reward = 1.0 - cost / params.max_cost();

    let acc = params.gravity_gain() * theta.sin() + 3.0 / (params.mass * params.length * params.length) * torque;
    let theta_dot = (state.theta_dot + acc * params.dt).clamp(-params.max_speed, params.max_speed);
    let next = PendulumState { theta: wrap_angle(theta + theta_dot * params.dt), theta_dot };
    if !(next.theta.is_finite() && next.theta_dot.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok((next, reward.clamp(0.0, 1.0), false))
}

#[derive(Clone, Debug)]
pub struct Pendulum {
    params: PendulumParams,
    space: ActionSpace,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Result<Self> {
        if !(params.dt > 0.0 && params.max_speed > 0.0 && params.max_torque > 0.0) {
            return Err(Error::InvalidConfig("pendulum timestep, speed cap and torque bound must be positive".into()));
        }
        let space = ActionSpace::interval(-params.max_torque, params.max_torque)?;
        Ok(Self { params, space })
    }

    pub fn standard() -> Self {
        Self::new(PendulumParams::default()).expect("default parameters are valid")
    }

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }
}

impl GenerativeModel for Pendulum {
    type State = PendulumState;

    fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    fn episode_length(&self) -> usize {
        self.params.episode_length
    }

    fn reset(&self, seed: u64) -> PendulumState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = self.params.init_angle;
        let v = self.params.init_speed;
        PendulumState { theta: wrap_angle(rng.random_range(-a..=a)), theta_dot: rng.random_range(-v..=v) }
    }

    fn step(&self, state: &PendulumState, action: &[f64]) -> Result<Transition<PendulumState>> {
        let torque = check_scalar_action(action, self.params.max_torque)?;
        let (state, reward, terminal) = pendulum_step(state, torque, &self.params)?;
        Ok(Transition { state, reward, terminal })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn upright_rest_has_full_reward() {
        let (next, reward, done) = pendulum_step(&PendulumState::default(), 0.0, &PendulumParams::default()).unwrap();
        assert_eq!(reward, 1.0);
        assert_eq!(next, PendulumState::default());
        assert!(!done);
    }

    #[test]
    fn hanging_down_reward() {
        let params = PendulumParams::default();
        let down = PendulumState { theta: PI, theta_dot: 0.0 };
        let (_, reward, _) = pendulum_step(&down, 0.0, &params).unwrap();
        assert_relative_eq!(reward, 1.0 - PI * PI / params.max_cost(), epsilon = 1e-15);
        assert_relative_eq!(reward, 0.39352068799038253, epsilon = 1e-12);
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let s = PendulumState { theta: 0.7, theta_dot: -1.3 };
        let (n, reward, _) = pendulum_step(&s, 1.25, &PendulumParams::default()).unwrap();
        assert_relative_eq!(n.theta, 0.6685331632714133, epsilon = 1e-14);
        assert_relative_eq!(n.theta_dot, -0.6293367345717318, epsilon = 1e-14);
        assert_relative_eq!(reward, 0.9594089616707296, epsilon = 1e-14);
    }

    #[test]
    fn angle_wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(0.25 + 4.0 * PI), 0.25, epsilon = 1e-12);
        assert!(wrap_angle(-1e-300) <= PI && wrap_angle(-1e-300) > -PI);
    }

    #[test]
    fn energy_stays_bounded_without_torque() {
        // E = theta_dot^2 / 2 + k cos(theta) is conserved by the continuous
        // dynamics; the symplectic step keeps the error at O(dt) amplitude
        // with no secular drift.
        let params = PendulumParams::default();
        let k = params.gravity_gain();
        let energy = |s: &PendulumState| 0.5 * s.theta_dot * s.theta_dot + k * s.theta.cos();
        let mut s = PendulumState { theta: 2.0, theta_dot: 0.0 };
        let e0 = energy(&s);
        let mut worst_step = 0.0_f64;
        let mut worst_total = 0.0_f64;
        for _ in 0..1000 {
            let (next, _, _) = pendulum_step(&s, 0.0, &params).unwrap();
            worst_step = worst_step.max((energy(&next) - energy(&s)).abs());
            worst_total = worst_total.max((energy(&next) - e0).abs());
            s = next;
        }
        let dt = params.dt;
        assert!(worst_step < 2.0 * k * k * dt * dt, "per-step drift {worst_step}");
        assert!(worst_total < 1.0, "total drift {worst_total}");
    }

    #[test]
    fn reset_starts_above_horizontal() {
        let env = Pendulum::standard();
        for seed in 0..100 {
            let s = env.reset(seed);
            assert!(s.theta.abs() <= PI / 2.0);
            assert!(s.theta_dot.abs() <= 1.0);
        }
    }
}
