//! Deterministic continuous-action control tasks behind a generative-model
//! interface. Rewards are normalized to `[0, 1]`.

mod cartpole;
mod pendulum;

pub use cartpole::{cartpole_step, CartPole, CartPoleParams, CartPoleState};
pub use pendulum::{pendulum_step, wrap_angle, Pendulum, PendulumParams, PendulumState};

use crate::error::{Error, Result};
use crate::partition::ActionSpace;

/// Outcome of one simulator step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub reward: f64,
    pub terminal: bool,
}

/// Simulator with reset and step, sufficient for sample-based planning.
pub trait GenerativeModel {
    type State: Clone + std::fmt::Debug;

    fn action_space(&self) -> &ActionSpace;

    /// Number of real steps in an episode.
    fn episode_length(&self) -> usize;

    /// Initial state drawn from the task's start distribution.
    fn reset(&self, seed: u64) -> Self::State;

    fn step(&self, state: &Self::State, action: &[f64]) -> Result<Transition<Self::State>>;
}

pub(crate) fn check_scalar_action(action: &[f64], bound: f64) -> Result<f64> {
    match action {
        [a] if a.abs() <= bound => Ok(*a),
        _ => Err(Error::ActionOutOfRange { action: action.to_vec(), low: -bound, high: bound }),
    }
}
