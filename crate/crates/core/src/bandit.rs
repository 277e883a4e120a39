//! Hierarchical optimistic optimization with an optional depth cap.
//!
//! [`LdHoo`] keeps a [`PartitionTree`] of the action space. Each round it
//! recomputes every cell's b-value bottom-up, walks from the root towards the
//! child with the larger b-value until it reaches a leaf, plays a point of
//! that leaf, credits the reward to the leaf and all of its ancestors, and
//! expands the leaf unless it already sits at the depth cap. With
//! [`DepthLimit::Unlimited`] this is plain HOO.
//!
//! The round can be driven in one call with [`LdHoo::step`], or split into
//! [`LdHoo::select`] and [`LdHoo::observe`] when the reward is produced by
//! code that needs to know which cell was chosen (the planner does this).

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::{ActionSpace, CellId, PartitionTree, SamplingMode, MAX_DEPTH};

/// Maximum depth of the partition tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DepthLimit {
    Limited(u32),
    /// No cap other than [`MAX_DEPTH`].
    Unlimited,
}

impl DepthLimit {
    /// `⌈ln n⌉`, the default cap for a horizon of `n` rounds.
    pub fn for_horizon(horizon: u64) -> Self {
        DepthLimit::Limited(default_depth(horizon))
    }

    pub fn allows_children_of(self, depth: u32) -> bool {
        let cap = match self {
            DepthLimit::Limited(h) => h.min(MAX_DEPTH),
            DepthLimit::Unlimited => MAX_DEPTH,
        };
        depth < cap
    }

    pub fn cap(self) -> Option<u32> {
        match self {
            DepthLimit::Limited(h) => Some(h),
            DepthLimit::Unlimited => None,
        }
    }
}

/// Natural-log depth schedule `⌈ln n⌉` (0 for `n <= 1`).
pub fn default_depth(horizon: u64) -> u32 {
    if horizon <= 1 {
        0
    } else {
        (horizon as f64).ln().ceil() as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BanditConfig {
    /// Scale of the cell-diameter bound `nu1 * rho^h`.
    pub nu1: f64,
    pub rho: f64,
    pub depth_limit: DepthLimit,
    /// Number of rounds the bandit may play.
    pub horizon: u64,
    pub sampling: SamplingMode,
    pub seed: u64,
}

impl BanditConfig {
    /// Depth-limited configuration with the `⌈ln n⌉` schedule.
    pub fn ld_hoo(nu1: f64, rho: f64, horizon: u64) -> Self {
        Self {
            nu1,
            rho,
            depth_limit: DepthLimit::for_horizon(horizon),
            horizon,
            sampling: SamplingMode::Center,
            seed: 0,
        }
    }

    /// Unlimited-depth baseline.
    pub fn hoo(nu1: f64, rho: f64, horizon: u64) -> Self {
        Self { depth_limit: DepthLimit::Unlimited, ..Self::ld_hoo(nu1, rho, horizon) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sampling(mut self, sampling: SamplingMode) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_depth_limit(mut self, depth_limit: DepthLimit) -> Self {
        self.depth_limit = depth_limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu1 > 0.0 && self.nu1.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu1 must be positive, got {}", self.nu1)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidConfig(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Upper confidence bound on the mean payoff of a cell at round `t`.
///
/// `+inf` for an unvisited cell, otherwise
/// `mean + sqrt(2 ln t / visits) + nu1 * rho^depth`.
pub fn u_value(visits: u64, reward_sum: f64, depth: u32, t: u64, nu1: f64, rho: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = visits as f64;
    reward_sum / n + (2.0 * (t as f64).ln() / n).sqrt() + nu1 * rho.powi(depth as i32)
}

/// Traversal score of a cell given its own u-value and, for internal cells,
/// the b-values of both children.
pub fn b_value(visits: u64, u: f64, children: Option<(f64, f64)>) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    match children {
        None => u,
        Some((left, right)) => u.min(left.max(right)),
    }
}

/// One played round.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub cell: CellId,
    pub action: Vec<f64>,
    pub reward: f64,
    /// Tree size after any expansion in this round.
    pub node_count: usize,
    /// Time since the bandit was created.
    pub elapsed_ns: u64,
}

impl TraceRow {
    /// Equality of everything except the wall-clock column.
    pub fn same_play(&self, other: &TraceRow) -> bool {
        self.t == other.t
            && self.cell == other.cell
            && self.action == other.action
            && self.reward.to_bits() == other.reward.to_bits()
            && self.node_count == other.node_count
    }
}

/// A round that has chosen its action and is waiting for the reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub cell: CellId,
    pub action: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Pending {
    leaf: usize,
    action: Vec<f64>,
}

/// Bandit state: partition tree, round counter, trace and random source.
#[derive(Clone, Debug)]
pub struct LdHoo {
    config: BanditConfig,
    tree: PartitionTree,
    rounds: u64,
    trace: Vec<TraceRow>,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    started: Instant,
}

impl LdHoo {
    pub fn new(space: ActionSpace, config: BanditConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            tree: PartitionTree::new(space),
            rounds: 0,
            trace: Vec::new(),
            pending: None,
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &BanditConfig {
        &self.config
    }

    pub fn tree(&self) -> &PartitionTree {
        &self.tree
    }

    /// Completed rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn node_count(&self) -> usize {
        self.tree.len()
    }

    /// Recomputes u- and b-values of every cell for the upcoming round.
    ///
    /// Children live after their parents in the arena, so one reverse sweep
    /// is a post-order evaluation.
    pub fn refresh_b_values(&mut self) {
        let t = self.rounds + 1;
        let BanditConfig { nu1, rho, .. } = self.config;
        let cells = self.tree.cells_mut();
        for idx in (0..cells.len()).rev() {
            let cell = &cells[idx];
            let u = u_value(cell.visits, cell.reward_sum, cell.id.depth, t, nu1, rho);
            let kids = cell.children.map(|[l, r]| (cells[l].b_value, cells[r].b_value));
            let b = b_value(cell.visits, u, kids);
            cells[idx].u_value = u;
            cells[idx].b_value = b;
        }
    }

    /// Optimistic root-to-leaf walk over the current b-values. Ties go to
    /// the lower-index child.
    pub fn traverse(&self) -> Vec<usize> {
        let cells = self.tree.cells();
        let mut path = vec![0];
        let mut idx = 0;
        while let Some([l, r]) = cells[idx].children {
            let next = if cells[l].b_value >= cells[r].b_value { l } else { r };
            debug_assert!(
                cells[idx].b_value <= cells[next].b_value,
                "b-value of {} exceeds that of its selected child {}",
                cells[idx].id,
                cells[next].id
            );
            path.push(next);
            idx = next;
        }
        path
    }

    pub fn select_leaf(&self) -> usize {
        *self.traverse().last().expect("path always holds the root")
    }

    /// Starts a round: refreshes b-values, picks a leaf and samples a point
    /// in it. The round completes with [`LdHoo::observe`].
    pub fn select(&mut self) -> Result<Selection> {
        if self.pending.is_some() {
            return Err(Error::RoundPending);
        }
        if self.rounds >= self.config.horizon {
            return Err(Error::HorizonExhausted(self.config.horizon));
        }
        self.refresh_b_values();
        let leaf = self.select_leaf();
        let cell = self.tree.cell(leaf);
        let action = cell.sample_in(self.config.sampling, &mut self.rng);
        let selection = Selection { cell: cell.id, action: action.clone() };
        self.pending = Some(Pending { leaf, action });
        Ok(selection)
    }

    /// Completes the pending round with `reward`, which must lie in `[0, 1]`.
    pub fn observe(&mut self, reward: f64) -> Result<()> {
        let pending = self.pending.take().ok_or(Error::NoPendingRound)?;
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfRange(reward));
        }
        let leaf = pending.leaf;

        let mut cur = Some(leaf);
        let cells = self.tree.cells_mut();
        while let Some(idx) = cur {
            cells[idx].visits += 1;
            cells[idx].reward_sum += reward;
            cur = cells[idx].parent;
        }

        let cell_id = self.tree.cell(leaf).id;
        if self.config.depth_limit.allows_children_of(cell_id.depth) {
            self.tree.expand(leaf)?;
        }

        self.rounds += 1;
        self.trace.push(TraceRow {
            t: self.rounds,
            cell: cell_id,
            action: pending.action,
            reward,
            node_count: self.tree.len(),
            elapsed_ns: self.started.elapsed().as_nanos() as u64,
        });
        Ok(())
    }

    /// Plays one full round against `reward_fn`.
    pub fn step<F>(&mut self, mut reward_fn: F) -> Result<(Vec<f64>, f64)>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let selection = self.select()?;
        let reward = reward_fn(&selection.action);
        self.observe(reward)?;
        Ok((selection.action, reward))
    }

    /// Cell with the highest empirical mean; ties go to the deeper cell,
    /// then to the lower index.
    pub fn best_cell(&self) -> Option<usize> {
        let cells = self.tree.cells();
        let mut best: Option<(usize, f64)> = None;
        for (idx, cell) in cells.iter().enumerate() {
            let Some(mean) = cell.mean() else { continue };
            let better = match best {
                None => true,
                Some((b, bm)) => {
                    let other = &cells[b].id;
                    mean > bm
                        || (mean == bm
                            && (cell.id.depth > other.depth
                                || (cell.id.depth == other.depth && cell.id.index < other.index)))
                }
            };
            if better {
                best = Some((idx, mean));
            }
        }
        best.map(|(idx, _)| idx)
    }

    /// Final action: a point of [`LdHoo::best_cell`] drawn per the sampling mode.
    pub fn recommend(&mut self) -> Result<Vec<f64>> {
        let idx = self.best_cell().ok_or(Error::NoVisitedCell)?;
        Ok(self.tree.cell(idx).sample_in(self.config.sampling, &mut self.rng))
    }

    /// Plays `config.horizon` rounds and returns the state with its
    /// recommendation.
    pub fn run<F>(space: ActionSpace, config: BanditConfig, mut reward_fn: F) -> Result<(Self, Vec<f64>)>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut bandit = Self::new(space, config)?;
        for _ in 0..bandit.config.horizon {
            bandit.step(&mut reward_fn)?;
        }
        let action = bandit.recommend()?;
        Ok((bandit, action))
    }
}

/// Writes a trace as CSV with header
/// `t,h,i,action...,reward,cumulative_reward,node_count,elapsed_ns`.
///
/// With `include_timing == false` the `elapsed_ns` column is written as 0,
/// which makes the output a pure function of the seeds.
pub fn write_trace_csv<W: Write>(out: W, dim: usize, trace: &[TraceRow], include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "h".into(), "i".into()];
    header.extend(action_columns(dim));
    header.extend(["reward", "cumulative_reward", "node_count", "elapsed_ns"].map(String::from));
    w.write_record(&header)?;

    let mut cumulative = 0.0;
    for row in trace {
        cumulative += row.reward;
        let mut record = vec![row.t.to_string(), row.cell.depth.to_string(), row.cell.index.to_string()];
        record.extend(row.action.iter().map(f64::to_string));
        record.push(row.reward.to_string());
        record.push(cumulative.to_string());
        record.push(row.node_count.to_string());
        record.push(if include_timing { row.elapsed_ns } else { 0 }.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// `action` for one-dimensional spaces, `action_0, action_1, ...` otherwise.
pub fn action_columns(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["action".into()]
    } else {
        (0..dim).map(|p| format!("action_{p}")).collect()
    }
}
