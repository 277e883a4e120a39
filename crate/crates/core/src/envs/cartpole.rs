use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_scalar_action, GenerativeModel, Transition};
use crate::error::{Error, Result};
use crate::partition::ActionSpace;

/// Classic cart-pole constants. The force is continuous in
/// `[-force_max, force_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartPoleParams {
    pub gravity: f64,
    /// Multiplier applied to `gravity`; 1 for the standard task.
    pub gravity_factor: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force_max: f64,
    pub tau: f64,
    pub theta_limit: f64,
    pub x_limit: f64,
    pub episode_length: usize,
    /// Start states are uniform in `[-init_range, init_range]^4`.
    pub init_range: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            gravity_factor: 1.0,
            mass_cart: 1.0,
            mass_pole: 0.1,
            half_length: 0.5,
            force_max: 10.0,
            tau: 0.02,
            theta_limit: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            x_limit: 2.4,
            episode_length: 150,
            init_range: 0.05,
        }
    }
}

impl CartPoleParams {
    pub fn effective_gravity(&self) -> f64 {
        self.gravity * self.gravity_factor
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.x_dot.is_finite() && self.theta.is_finite() && self.theta_dot.is_finite()
    }
}

fn out_of_bounds(s: &CartPoleState, params: &CartPoleParams) -> bool {
    s.theta.abs() > params.theta_limit || s.x.abs() > params.x_limit
}

/// One semi-implicit Euler step. Reward is 1 for every step taken from a
/// live state and 0 once the pole has fallen or the cart left the track.
pub fn cartpole_step(state: &CartPoleState, force: f64, params: &CartPoleParams) -> Result<(CartPoleState, f64, bool)> {
    let force = check_scalar_action(&[force], params.force_max)?;
    if !state.is_finite() {
        return Err(Error::NonFiniteState);
    }
    if out_of_bounds(state, params) {
        return Ok((*state, 0.0, true));
    }

    let g = params.effective_gravity();
    let total_mass = params.mass_cart + params.mass_pole;
    let pole_ml = params.mass_pole * params.half_length;
    let (sin, cos) = state.theta.sin_cos();

    let temp = (force + pole_ml * state.theta_dot * state.theta_dot * sin) / total_mass;
    let theta_acc =
        (g * sin - cos * temp) / (params.half_length * (4.0 / 3.0 - params.mass_pole * cos * cos / total_mass));
    let x_acc = temp - pole_ml * theta_acc * cos / total_mass;

    let x_dot = state.x_dot + params.tau * x_acc;
    let theta_dot = state.theta_dot + params.tau * theta_acc;
    let next = CartPoleState {
        x: state.x + params.tau * x_dot,
        x_dot,
        theta: state.theta + params.tau * theta_dot,
        theta_dot,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok((next, 1.0, out_of_bounds(&next, params)))
}

#[derive(Clone, Debug)]
pub struct CartPole {
    params: CartPoleParams,
    space: ActionSpace,
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Result<Self> {
        if !(params.gravity_factor > 0.0 && params.tau > 0.0 && params.force_max > 0.0) {
            return Err(Error::InvalidConfig(
                "cart-pole gravity factor, timestep and force bound must be positive".into(),
            ));
        }
        let space = ActionSpace::interval(-params.force_max, params.force_max)?;
        Ok(Self { params, space })
    }

    pub fn standard() -> Self {
        Self::new(CartPoleParams::default()).expect("default parameters are valid")
    }

    /// Cart-pole with gravity scaled by `factor`.
    pub fn increased_gravity(factor: f64) -> Result<Self> {
        Self::new(CartPoleParams { gravity_factor: factor, ..CartPoleParams::default() })
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }
}

impl GenerativeModel for CartPole {
    type State = CartPoleState;

    fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    fn episode_length(&self) -> usize {
        self.params.episode_length
    }

    fn reset(&self, seed: u64) -> CartPoleState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.params.init_range;
        let mut draw = || rng.random_range(-r..=r);
        CartPoleState { x: draw(), x_dot: draw(), theta: draw(), theta_dot: draw() }
    }

    fn step(&self, state: &CartPoleState, action: &[f64]) -> Result<Transition<CartPoleState>> {
        let force = check_scalar_action(action, self.params.force_max)?;
        let (state, reward, terminal) = cartpole_step(state, force, &self.params)?;
        Ok(Transition { state, reward, terminal })
    }
}
