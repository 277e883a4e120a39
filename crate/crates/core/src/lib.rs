//! Hierarchical optimistic optimization over continuous action spaces.
//!
//! - [`partition`]: binary hierarchical partition of a box of actions.
//! - [`bandit`]: [`LdHoo`], a HOO bandit with an optional depth cap.
//! - [`objectives`]: noisy synthetic objectives and pseudo-regret.
//! - [`envs`]: deterministic control tasks with normalized rewards.
//! - [`planner`]: tree search with one bandit per state node.
//! - [`registry`]: name-keyed strategies and tasks for runners.

pub mod bandit;
pub mod envs;
pub mod error;
pub mod objectives;
pub mod partition;
pub mod planner;
pub mod registry;
pub mod seed;

pub use bandit::{default_depth, BanditConfig, DepthLimit, LdHoo, Selection, TraceRow};
pub use error::{Error, Result};
pub use objectives::NoisyObjective;
pub use partition::{ActionSpace, Cell, CellId, PartitionTree, SamplingMode};
pub use planner::{plan_action, run_episode, EpisodeResult, PlannerConfig, SearchTree};
