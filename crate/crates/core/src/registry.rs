//! Name-keyed registries of bandit strategies and control tasks, so runners
//! can pick algorithms and environments from configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bandit::{BanditConfig, DepthLimit};
use crate::envs::{CartPole, CartPoleParams, GenerativeModel, Pendulum, PendulumParams};
use crate::error::{Error, Result};
use crate::partition::SamplingMode;
use crate::planner::{run_episode, EpisodeResult, PlannerConfig, SearchTree};

/// Gravity multiplier used by the `cartpole-ig` task unless overridden.
pub const DEFAULT_GRAVITY_FACTOR: f64 = 10.0;

/// Ordered map from name to entry. Lookups of unknown names report every
/// registered name.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Arc<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: BTreeMap::new() }
    }

    /// Adds or replaces the entry under `name`.
    pub fn register(&mut self, name: impl Into<String>, entry: Arc<T>) -> &mut Self {
        self.entries.insert(name.into(), entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: self.kind,
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

/// A bandit variant. Variants share the update rules and differ in how deep
/// the partition tree may grow for a given horizon.
pub trait BanditStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn depth_limit(&self, horizon: u64) -> DepthLimit;

    fn config(&self, nu1: f64, rho: f64, horizon: u64, sampling: SamplingMode, seed: u64) -> BanditConfig {
        BanditConfig { nu1, rho, depth_limit: self.depth_limit(horizon), horizon, sampling, seed }
    }
}

pub struct LimitedDepth;

impl BanditStrategy for LimitedDepth {
    fn name(&self) -> &'static str {
        "ldhoo"
    }

    fn description(&self) -> &'static str {
        "depth-limited HOO with cap ceil(ln n)"
    }

    fn depth_limit(&self, horizon: u64) -> DepthLimit {
        DepthLimit::for_horizon(horizon)
    }
}

pub struct UnlimitedDepth;

impl BanditStrategy for UnlimitedDepth {
    fn name(&self) -> &'static str {
        "hoo"
    }

    fn description(&self) -> &'static str {
        "HOO without a depth cap"
    }

    fn depth_limit(&self, _horizon: u64) -> DepthLimit {
        DepthLimit::Unlimited
    }
}

pub fn bandit_registry() -> Registry<dyn BanditStrategy> {
    let mut reg: Registry<dyn BanditStrategy> = Registry::new("algorithm");
    for strategy in [Arc::new(LimitedDepth) as Arc<dyn BanditStrategy>, Arc::new(UnlimitedDepth)] {
        reg.register(strategy.name(), strategy);
    }
    reg
}

/// Wall-clock cost of planning one action.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanTiming {
    pub action: Vec<f64>,
    pub elapsed_ns: u64,
    pub tree_nodes: usize,
}

/// A control task that can be planned over without knowing its state type.
pub trait ControlTask: Send + Sync {
    fn name(&self) -> &str;

    fn action_dim(&self) -> usize;

    fn episode_length(&self) -> usize;

    fn run_episode(&self, config: &PlannerConfig, reset_seed: u64) -> Result<EpisodeResult>;

    /// Plans a single action from `reset(reset_seed)`.
    fn time_plan(&self, config: &PlannerConfig, reset_seed: u64) -> Result<PlanTiming>;
}

/// Adapter exposing any [`GenerativeModel`] as a [`ControlTask`].
pub struct Task<M> {
    name: String,
    model: M,
}

impl<M> Task<M> {
    pub fn new(name: impl Into<String>, model: M) -> Self {
        Self { name: name.into(), model }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M> ControlTask for Task<M>
where
    M: GenerativeModel + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn action_dim(&self) -> usize {
        self.model.action_space().dim()
    }

    fn episode_length(&self) -> usize {
        self.model.episode_length()
    }

    fn run_episode(&self, config: &PlannerConfig, reset_seed: u64) -> Result<EpisodeResult> {
        run_episode(&self.model, config, reset_seed)
    }

    fn time_plan(&self, config: &PlannerConfig, reset_seed: u64) -> Result<PlanTiming> {
        let state = self.model.reset(reset_seed);
        let started = std::time::Instant::now();
        let mut tree = SearchTree::new(&self.model, state, config.clone())?;
        let action = tree.plan()?;
        let elapsed_ns = started.elapsed().as_nanos() as u64;
        Ok(PlanTiming { action, elapsed_ns, tree_nodes: tree.node_count() })
    }
}

/// Parameter overrides applied when a task is built.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaskOverrides {
    pub gravity_factor: Option<f64>,
    pub episode_length: Option<usize>,
}

pub type TaskFactory = dyn Fn(&TaskOverrides) -> Result<Box<dyn ControlTask>> + Send + Sync;

pub fn task_registry() -> Registry<TaskFactory> {
    let mut reg: Registry<TaskFactory> = Registry::new("environment");
    reg.register(
        "cartpole",
        Arc::new(|o: &TaskOverrides| {
            let mut params =
                CartPoleParams { gravity_factor: o.gravity_factor.unwrap_or(1.0), ..CartPoleParams::default() };
            if let Some(len) = o.episode_length {
                params.episode_length = len;
            }
            Ok(Box::new(Task::new("cartpole", CartPole::new(params)?)) as Box<dyn ControlTask>)
        }),
    );
    reg.register(
        "cartpole-ig",
        Arc::new(|o: &TaskOverrides| {
            let mut params = CartPoleParams {
                gravity_factor: o.gravity_factor.unwrap_or(DEFAULT_GRAVITY_FACTOR),
                ..CartPoleParams::default()
            };
            if let Some(len) = o.episode_length {
                params.episode_length = len;
            }
            Ok(Box::new(Task::new("cartpole-ig", CartPole::new(params)?)) as Box<dyn ControlTask>)
        }),
    );
    reg.register(
        "pendulum",
        Arc::new(|o: &TaskOverrides| {
            let mut params = PendulumParams::default();
            if let Some(len) = o.episode_length {
                params.episode_length = len;
            }
            Ok(Box::new(Task::new("pendulum", Pendulum::new(params)?)) as Box<dyn ControlTask>)
        }),
    );
    reg
}

/// Builds the task registered under `name`.
pub fn build_task(name: &str, overrides: &TaskOverrides) -> Result<Box<dyn ControlTask>> {
    task_registry().get(name)?(overrides)
}
