//! Monte Carlo tree search where every state node chooses its action with
//! its own [`LdHoo`] bandit.
//!
//! One planner iteration descends from the root: the node's bandit picks an
//! action, the model is stepped, and the walk continues into the child keyed
//! by `(selected cell, sampled action)`. A missing child is created and
//! valued by one uniform-random rollout. The discounted return seen from
//! each node on the path is fed back to that node's bandit after dividing by
//! the largest return possible from that depth, so bandit rewards stay in
//! `[0, 1]`. After `iterations` descents the root bandit's recommendation
//! is the planned action.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bandit::{action_columns, BanditConfig, DepthLimit, LdHoo};
use crate::envs::GenerativeModel;
use crate::error::{Error, Result};
use crate::partition::{CellId, SamplingMode};
use crate::seed::mix_seed;

/// Slack allowed when checking a return against its bound.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Descents from the root per planned action.
    pub iterations: u64,
    /// Maximum number of actions looked ahead, `D`.
    pub lookahead: usize,
    pub gamma: f64,
    pub nu1: f64,
    pub rho: f64,
    pub depth_limit: DepthLimit,
    pub sampling: SamplingMode,
    pub seed: u64,
}

impl PlannerConfig {
    /// `nu1 = 4`, `rho = 0.25`, `D = 50`, `gamma = 0.99` and the `⌈ln n⌉`
    /// depth schedule.
    pub fn new(iterations: u64) -> Self {
        Self {
            iterations,
            lookahead: 50,
            gamma: 0.99,
            nu1: 4.0,
            rho: 0.25,
            depth_limit: DepthLimit::for_horizon(iterations),
            sampling: SamplingMode::Center,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lookahead(mut self, lookahead: usize) -> Self {
        self.lookahead = lookahead;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.lookahead == 0 {
            return Err(Error::InvalidConfig("lookahead must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        self.bandit_config(self.seed).validate()
    }

    /// Configuration of the bandit living in one search node.
    pub fn bandit_config(&self, seed: u64) -> BanditConfig {
        BanditConfig {
            nu1: self.nu1,
            rho: self.rho,
            depth_limit: self.depth_limit,
            horizon: self.iterations,
            sampling: self.sampling,
            seed,
        }
    }

    /// Largest discounted return collectable from a node at `depth`:
    /// `sum_{k < D - depth} gamma^k` for per-step rewards in `[0, 1]`.
    pub fn return_bound(&self, depth: usize) -> f64 {
        let steps = self.lookahead.saturating_sub(depth);
        let mut bound = 0.0;
        let mut discount = 1.0;
        for _ in 0..steps {
            bound += discount;
            discount *= self.gamma;
        }
        bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct ChildKey {
    cell: CellId,
    action: Vec<u64>,
}

impl ChildKey {
    fn new(cell: CellId, action: &[f64]) -> Self {
        Self { cell, action: action.iter().map(|a| a.to_bits()).collect() }
    }
}

#[derive(Debug)]
struct SearchNode<S> {
    state: S,
    depth: usize,
    bandit: LdHoo,
    children: HashMap<ChildKey, usize>,
}

/// Search tree rooted at one real state.
#[derive(Debug)]
pub struct SearchTree<'m, M: GenerativeModel> {
    model: &'m M,
    config: PlannerConfig,
    nodes: Vec<SearchNode<M::State>>,
    rng: ChaCha8Rng,
}

impl<'m, M: GenerativeModel> SearchTree<'m, M> {
    pub fn new(model: &'m M, root_state: M::State, config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        let root = SearchNode {
            state: root_state,
            depth: 0,
            bandit: LdHoo::new(model.action_space().clone(), config.bandit_config(config.seed))?,
            children: HashMap::new(),
        };
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0x005E_ED0F_7E55)),
            config,
            nodes: vec![root],
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn root_bandit(&self) -> &LdHoo {
        &self.nodes[0].bandit
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Rounds played by each node's bandit, with the node depth.
    pub fn node_rounds(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.nodes.iter().map(|n| (n.depth, n.bandit.rounds()))
    }

    /// One descent from the root. Returns the discounted return observed
    /// from the root, before rescaling.
    pub fn simulate(&mut self) -> Result<f64> {
        let lookahead = self.config.lookahead;
        let mut path: Vec<(usize, f64)> = Vec::new();
        let mut idx = 0;

        let tail = loop {
            let next_index = self.nodes.len();
            let node = &mut self.nodes[idx];
            let selection = node.bandit.select()?;
            let transition = self.model.step(&node.state, &selection.action)?;
            let child_depth = node.depth + 1;
            path.push((idx, transition.reward));

            if transition.terminal || child_depth >= lookahead {
                break 0.0;
            }
            let key = ChildKey::new(selection.cell, &selection.action);
            if let Some(&child) = node.children.get(&key) {
                idx = child;
                continue;
            }

            node.children.insert(key, next_index);
            let future = rollout(self.model, &transition.state, child_depth, &self.config, &mut self.rng)?;
            let bandit_seed = self.rng.next_u64();
            self.nodes.push(SearchNode {
                state: transition.state,
                depth: child_depth,
                bandit: LdHoo::new(self.model.action_space().clone(), self.config.bandit_config(bandit_seed))?,
                children: HashMap::new(),
            });
            break future;
        };

        let mut value = tail;
        for &(idx, reward) in path.iter().rev() {
            value = reward + self.config.gamma * value;
            let node = &mut self.nodes[idx];
            let bound = self.config.return_bound(node.depth);
            if !(value >= 0.0 && value <= bound * (1.0 + BOUND_SLACK)) {
                return Err(Error::ReturnOutOfBounds { value, bound, depth: node.depth });
            }
            node.bandit.observe((value / bound).min(1.0))?;
        }
        Ok(value)
    }

    /// Runs the remaining iterations and returns the root recommendation.
    pub fn plan(&mut self) -> Result<Vec<f64>> {
        while self.root_bandit().rounds() < self.config.iterations {
            self.simulate()?;
        }
        self.nodes[0].bandit.recommend()
    }
}

/// Plays uniformly random actions from `state` (at tree depth `depth`) until
/// a terminal transition or the lookahead is reached. Returns the discounted
/// reward sum.
pub fn rollout<M: GenerativeModel>(
    model: &M,
    state: &M::State,
    depth: usize,
    config: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut total = 0.0;
    let mut discount = 1.0;
    let mut state = state.clone();
    for _ in depth..config.lookahead {
        let action = model.action_space().sample_uniform(rng);
        let transition = model.step(&state, &action)?;
        total += discount * transition.reward;
        discount *= config.gamma;
        if transition.terminal {
            break;
        }
        state = transition.state;
    }
    Ok(total)
}

/// Builds a fresh tree at `root_state`, runs `config.iterations` descents and
/// returns the root bandit's recommended action.
pub fn plan_action<M: GenerativeModel>(model: &M, root_state: M::State, config: &PlannerConfig) -> Result<Vec<f64>> {
    SearchTree::new(model, root_state, config.clone())?.plan()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStep {
    pub step: usize,
    pub action: Vec<f64>,
    pub reward: f64,
    pub cumulative_reward: f64,
    pub plan_time_ns: u64,
    pub tree_nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub total_reward: f64,
    pub steps: Vec<EpisodeStep>,
    pub terminated: bool,
}

impl EpisodeResult {
    pub fn mean_plan_time_ns(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.plan_time_ns as f64).sum::<f64>() / self.steps.len() as f64
    }

    pub fn mean_tree_nodes(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.tree_nodes as f64).sum::<f64>() / self.steps.len() as f64
    }
}

/// Plays one episode from `model.reset(reset_seed)`, planning every action
/// with a fresh tree. Decision `k` uses planner seed `mix(config.seed, k)`.
pub fn run_episode<M: GenerativeModel>(model: &M, config: &PlannerConfig, reset_seed: u64) -> Result<EpisodeResult> {
    config.validate()?;
    let mut state = model.reset(reset_seed);
    let mut steps = Vec::with_capacity(model.episode_length());
    let mut total = 0.0;
    let mut terminated = false;

    for step in 0..model.episode_length() {
        let decision = PlannerConfig { seed: mix_seed(config.seed, step as u64), ..config.clone() };
        let started = Instant::now();
        let mut tree = SearchTree::new(model, state.clone(), decision)?;
        let action = tree.plan()?;
        let plan_time_ns = started.elapsed().as_nanos() as u64;

        let transition = model.step(&state, &action)?;
        total += transition.reward;
        steps.push(EpisodeStep {
            step: step + 1,
            action,
            reward: transition.reward,
            cumulative_reward: total,
            plan_time_ns,
            tree_nodes: tree.node_count(),
        });
        if transition.terminal {
            terminated = true;
            break;
        }
        state = transition.state;
    }

    Ok(EpisodeResult { total_reward: total, steps, terminated })
}

/// Writes an episode log with header
/// `step,action...,reward,cumulative_reward,plan_time_ns`.
pub fn write_episode_csv<W: Write>(out: W, dim: usize, episode: &EpisodeResult, include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend(action_columns(dim));
    header.extend(["reward", "cumulative_reward", "plan_time_ns"].map(String::from));
    w.write_record(&header)?;
    for s in &episode.steps {
        let mut record = vec![s.step.to_string()];
        record.extend(s.action.iter().map(f64::to_string));
        record.push(s.reward.to_string());
        record.push(s.cumulative_reward.to_string());
        record.push(if include_timing { s.plan_time_ns } else { 0 }.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Transition;
    use crate::partition::ActionSpace;
    use approx::assert_relative_eq;

    /// State is the step index; reward depends only on it.
    struct Chain {
        rewards: Vec<f64>,
        space: ActionSpace,
        terminal_at: Option<usize>,
    }

    impl Chain {
        fn new(rewards: Vec<f64>) -> Self {
            Self { rewards, space: ActionSpace::interval(-1.0, 1.0).unwrap(), terminal_at: None }
        }
    }

    impl GenerativeModel for Chain {
        type State = usize;

        fn action_space(&self) -> &ActionSpace {
            &self.space
        }

        fn episode_length(&self) -> usize {
            self.rewards.len()
        }

        fn reset(&self, _seed: u64) -> usize {
            0
        }

        fn step(&self, state: &usize, _action: &[f64]) -> Result<Transition<usize>> {
            let reward = self.rewards.get(*state).copied().unwrap_or(1.0);
            Ok(Transition { state: state + 1, reward, terminal: self.terminal_at == Some(state + 1) })
        }
    }

    fn config(iterations: u64, lookahead: usize, gamma: f64) -> PlannerConfig {
        PlannerConfig::new(iterations).with_lookahead(lookahead).with_gamma(gamma)
    }

    #[test]
    fn immediate_terminal_returns_its_reward() {
        let mut chain = Chain::new(vec![1.0]);
        chain.terminal_at = Some(1);
        let mut tree = SearchTree::new(&chain, 0, config(5, 10, 0.9)).unwrap();
        assert_eq!(tree.simulate().unwrap(), 1.0);
        assert_eq!(tree.node_count(), 1);
    }

    #[test]
    fn unit_lookahead_returns_immediate_reward() {
        let chain = Chain::new(vec![0.5; 4]);
        let mut tree = SearchTree::new(&chain, 0, config(10, 1, 0.9)).unwrap();
        for _ in 0..10 {
            assert_eq!(tree.simulate().unwrap(), 0.5);
        }
        assert_eq!(tree.node_count(), 1);
    }

    #[test]
    fn chain_return_is_the_discounted_sum() {
        let rewards = vec![0.9, 0.1, 0.4, 1.0, 0.0, 0.7];
        let gamma = 0.8;
        let chain = Chain::new(rewards.clone());
        let mut tree = SearchTree::new(&chain, 0, config(20, rewards.len(), gamma)).unwrap();
        let direct: f64 = rewards.iter().enumerate().map(|(k, r)| gamma.powi(k as i32) * r).sum();
        for _ in 0..20 {
            assert_relative_eq!(tree.simulate().unwrap(), direct, epsilon = 1e-12);
        }
        assert!(tree.max_depth() < rewards.len());
    }

    #[test]
    fn rollout_examples() {
        let chain = Chain::new(vec![1.0; 100]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = config(1, 10, 0.5);
        assert_eq!(rollout(&chain, &0, 10, &cfg, &mut rng).unwrap(), 0.0);
        assert_eq!(rollout(&chain, &0, 0, &config(1, 7, 1.0), &mut rng).unwrap(), 7.0);
        assert_relative_eq!(rollout(&chain, &0, 0, &cfg, &mut rng).unwrap(), 1.998046875, epsilon = 1e-15);
    }

    #[test]
    fn return_bounds() {
        let cfg = config(1, 3, 0.5);
        assert_eq!(cfg.return_bound(0), 1.75);
        assert_eq!(cfg.return_bound(2), 1.0);
        assert_eq!(cfg.return_bound(3), 0.0);
    }

    #[test]
    fn single_iteration_plans_from_the_root_cell() {
        let chain = Chain::new(vec![0.3; 10]);
        let action = plan_action(&chain, 0, &config(1, 5, 0.9)).unwrap();
        assert_eq!(action, vec![0.0]);
    }

    #[test]
    fn root_rounds_and_depth_after_planning() {
        let chain = Chain::new(vec![0.3; 10]);
        let mut tree = SearchTree::new(&chain, 0, config(40, 6, 0.9)).unwrap();
        let action = tree.plan().unwrap();
        assert!(chain.space.contains(&action));
        assert_eq!(tree.root_bandit().rounds(), 40);
        assert!(tree.max_depth() < 6);
    }

    #[test]
    fn out_of_range_reward_is_an_accounting_error() {
        let chain = Chain::new(vec![1.5]);
        let mut tree = SearchTree::new(&chain, 0, config(5, 1, 0.9)).unwrap();
        assert!(matches!(tree.simulate(), Err(Error::ReturnOutOfBounds { .. })));
    }

    #[test]
    fn episode_accounting_and_csv() {
        let mut chain = Chain::new(vec![1.0; 8]);
        chain.terminal_at = Some(5);
        let ep = run_episode(&chain, &config(4, 3, 0.9), 0).unwrap();
        assert!(ep.terminated);
        assert_eq!(ep.total_reward, 5.0);
        assert_eq!(ep.steps.len(), 5);

        let mut out = Vec::new();
        write_episode_csv(&mut out, 1, &ep, false).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("step,action,reward,cumulative_reward,plan_time_ns"));
        let last = text.lines().nth(5).unwrap();
        assert!(last.starts_with("5,") && last.ends_with(",1,5,0"), "{last}");
    }
}
