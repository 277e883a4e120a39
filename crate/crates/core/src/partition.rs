//! Hierarchical binary partition of a hyperrectangular action space.
//!
//! Cells are addressed by `(depth, index)`. The children of `(h, i)` are
//! `(h + 1, 2i)` (lower half) and `(h + 1, 2i + 1)` (upper half). A cell is
//! split at the midpoint of its longest side, the lowest dimension winning
//! ties, so after `k * P` splits of a `P`-dimensional cube every side has
//! been halved `k` times.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Deepest level a cell may occupy. Index arithmetic is done in `u128`, and
/// `f64` coordinates stop resolving distinct midpoints long before this.
pub const MAX_DEPTH: u32 = 127;

/// Closed box `[lower_p, upper_p]` in every dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidSpace(format!("{} lower bounds but {} upper bounds", lower.len(), upper.len())));
        }
        for (p, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpace(format!("dimension {p}: need finite lower < upper, got [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(&lo, &hi)| rng.random_range(lo..=hi)).collect()
    }
}

/// `(depth, index)` coordinates of a cell, `0 <= index < 2^depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub depth: u32,
    pub index: u128,
}

impl CellId {
    pub const ROOT: CellId = CellId { depth: 0, index: 0 };

    pub fn children(self) -> (CellId, CellId) {
        let depth = self.depth + 1;
        (CellId { depth, index: 2 * self.index }, CellId { depth, index: 2 * self.index + 1 })
    }

    pub fn parent(self) -> Option<CellId> {
        (self.depth > 0).then(|| CellId { depth: self.depth - 1, index: self.index / 2 })
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.depth, self.index)
    }
}

/// How a point is drawn from a cell when the bandit plays it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    #[default]
    Center,
    Uniform,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Self::Center),
            "uniform" => Ok(Self::Uniform),
            other => {
                Err(Error::Unknown { kind: "sampling mode", name: other.to_string(), known: "center, uniform".into() })
            }
        }
    }
}

/// One node of the partition tree together with its bandit statistics.
#[derive(Clone, Debug)]
pub struct Cell {
    pub id: CellId,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub visits: u64,
    pub reward_sum: f64,
    pub u_value: f64,
    pub b_value: f64,
    pub(crate) parent: Option<usize>,
    pub(crate) children: Option<[usize; 2]>,
}

impl Cell {
    pub fn root(space: &ActionSpace) -> Self {
        Self::with_bounds(CellId::ROOT, space.lower.clone(), space.upper.clone(), None)
    }

    fn with_bounds(id: CellId, lower: Vec<f64>, upper: Vec<f64>, parent: Option<usize>) -> Self {
        Self {
            id,
            lower,
            upper,
            visits: 0,
            reward_sum: 0.0,
            u_value: f64::INFINITY,
            b_value: f64::INFINITY,
            parent,
            children: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn children(&self) -> Option<[usize; 2]> {
        self.children
    }

    pub fn parent(&self) -> Option<usize> {
        self.parent
    }

    /// Empirical mean reward, `None` before the first visit.
    pub fn mean(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.reward_sum / self.visits as f64)
    }

    pub fn side(&self, p: usize) -> f64 {
        self.upper[p] - self.lower[p]
    }

    /// Dimension with the longest side, lowest index on ties.
    pub fn split_dimension(&self) -> usize {
        let mut best = 0;
        for p in 1..self.lower.len() {
            if self.side(p) > self.side(best) {
                best = p;
            }
        }
        best
    }

    /// Halves the cell along [`Cell::split_dimension`]. The lower half gets
    /// the even index.
    pub fn split(&self) -> Result<(Cell, Cell)> {
        if self.children.is_some() {
            return Err(Error::AlreadySplit(self.id));
        }
        if self.id.depth >= MAX_DEPTH {
            return Err(Error::DepthOverflow(self.id));
        }
        let p = self.split_dimension();
        let mid = 0.5 * (self.lower[p] + self.upper[p]);
        let (left_id, right_id) = self.id.children();

        let mut left_upper = self.upper.clone();
        left_upper[p] = mid;
        let mut right_lower = self.lower.clone();
        right_lower[p] = mid;

        Ok((
            Cell::with_bounds(left_id, self.lower.clone(), left_upper, None),
            Cell::with_bounds(right_id, right_lower, self.upper.clone(), None),
        ))
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn sample_in<R: Rng + ?Sized>(&self, mode: SamplingMode, rng: &mut R) -> Vec<f64> {
        match mode {
            SamplingMode::Center => self.center(),
            SamplingMode::Uniform => {
                self.lower.iter().zip(&self.upper).map(|(&lo, &hi)| rng.random_range(lo..=hi)).collect()
            }
        }
    }

    /// Closed-box membership.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Half-open membership `[lo, hi)`, closed on faces that lie on the upper
    /// boundary of `space`. Leaves of a tree partition `space` exactly under
    /// this rule.
    pub fn owns(&self, x: &[f64], space: &ActionSpace) -> bool {
        x.iter().enumerate().all(|(p, &v)| {
            let hi = self.upper[p];
            self.lower[p] <= v && (v < hi || (v == hi && hi == space.upper[p]))
        })
    }
}

/// Arena-backed binary partition tree. Index 0 is the root and children are
/// always stored after their parent, so a reverse scan of the arena visits
/// every cell after all of its descendants.
#[derive(Clone, Debug)]
pub struct PartitionTree {
    space: ActionSpace,
    cells: Vec<Cell>,
}

impl PartitionTree {
    pub fn new(space: ActionSpace) -> Self {
        let root = Cell::root(&space);
        Self { space, cells: vec![root] }
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [Cell] {
        &mut self.cells
    }

    pub fn cell(&self, idx: usize) -> &Cell {
        &self.cells[idx]
    }

    pub fn root(&self) -> &Cell {
        &self.cells[0]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_depth(&self) -> u32 {
        self.cells.iter().map(|c| c.id.depth).max().unwrap_or(0)
    }

    /// Adds both children of `idx`, returning their arena indices.
    pub fn expand(&mut self, idx: usize) -> Result<[usize; 2]> {
        let (mut left, mut right) = self.cells[idx].split()?;
        left.parent = Some(idx);
        right.parent = Some(idx);
        let base = self.cells.len();
        self.cells.push(left);
        self.cells.push(right);
        let kids = [base, base + 1];
        self.cells[idx].children = Some(kids);
        Ok(kids)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_leaf())
    }

    /// Arena indices from the root down to `idx`, inclusive.
    pub fn path_to(&self, idx: usize) -> Vec<usize> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.cells[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// The unique leaf owning `x` under half-open membership.
    pub fn leaf_containing(&self, x: &[f64]) -> Option<usize> {
        if !self.space.contains(x) {
            return None;
        }
        let mut idx = 0;
        while let Some([l, r]) = self.cells[idx].children {
            idx = if self.cells[l].owns(x, &self.space) { l } else { r };
        }
        Some(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cell(lower: &[f64], upper: &[f64]) -> Cell {
        Cell::with_bounds(CellId::ROOT, lower.to_vec(), upper.to_vec(), None)
    }

    #[test]
    fn space_validation() {
        assert!(ActionSpace::new(vec![], vec![]).is_err());
        assert!(ActionSpace::new(vec![0.0], vec![0.0]).is_err());
        assert!(ActionSpace::new(vec![1.0], vec![0.0]).is_err());
        assert!(ActionSpace::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(ActionSpace::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert_eq!(ActionSpace::unit(3).unwrap().dim(), 3);
    }

    #[test]
    fn split_unit_interval() {
        let root = Cell::root(&ActionSpace::unit(1).unwrap());
        let (l, r) = root.split().unwrap();
        assert_eq!((l.lower[0], l.upper[0]), (0.0, 0.5));
        assert_eq!((r.lower[0], r.upper[0]), (0.5, 1.0));
        assert_eq!(l.id, CellId { depth: 1, index: 0 });
        assert_eq!(r.id, CellId { depth: 1, index: 1 });
    }

    #[test]
    fn split_longest_side() {
        let c = cell(&[0.0, 0.0], &[1.0, 0.5]);
        let (l, r) = c.split().unwrap();
        assert_eq!(l.lower, vec![0.0, 0.0]);
        assert_eq!(l.upper, vec![0.5, 0.5]);
        assert_eq!(r.lower, vec![0.5, 0.0]);
        assert_eq!(r.upper, vec![1.0, 0.5]);

        // square: dimension 0 wins the tie
        assert_eq!(cell(&[0.0, 0.0], &[1.0, 1.0]).split_dimension(), 0);
        assert_eq!(cell(&[0.0, 0.0], &[0.5, 1.0]).split_dimension(), 1);
    }

    #[test]
    fn repeated_halving_width() {
        let mut tree = PartitionTree::new(ActionSpace::unit(1).unwrap());
        let mut idx = 0;
        for _ in 0..3 {
            idx = tree.expand(idx).unwrap()[0];
        }
        assert_eq!(tree.cell(idx).side(0), 0.125);
        assert_eq!(tree.cell(idx).id, CellId { depth: 3, index: 0 });
    }

    #[test]
    fn split_twice_is_an_error() {
        let mut tree = PartitionTree::new(ActionSpace::unit(1).unwrap());
        tree.expand(0).unwrap();
        assert_eq!(tree.expand(0), Err(Error::AlreadySplit(CellId::ROOT)));
    }

    #[test]
    fn centers() {
        assert_eq!(cell(&[0.0], &[1.0]).center(), vec![0.5]);
        assert_eq!(cell(&[0.25], &[0.5]).center(), vec![0.375]);
        assert_eq!(cell(&[-2.0, 0.0], &[2.0, 8.0]).center(), vec![0.0, 4.0]);
    }

    #[test]
    fn sampling_stays_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(cell(&[0.0], &[1.0]).sample_in(SamplingMode::Center, &mut rng), vec![0.5]);
        let half = cell(&[0.5], &[1.0]);
        let narrow = cell(&[0.49999], &[0.5]);
        for _ in 0..1000 {
            let x = half.sample_in(SamplingMode::Uniform, &mut rng)[0];
            assert!((0.5..=1.0).contains(&x));
            let y = narrow.sample_in(SamplingMode::Uniform, &mut rng)[0];
            assert!((0.49999..=0.5).contains(&y));
        }
    }

    #[test]
    fn index_arithmetic() {
        let id = CellId { depth: 4, index: 11 };
        let (l, r) = id.children();
        assert_eq!(l, CellId { depth: 5, index: 22 });
        assert_eq!(r, CellId { depth: 5, index: 23 });
        assert_eq!(l.parent(), Some(id));
        assert_eq!(r.parent(), Some(id));
        assert_eq!(CellId::ROOT.parent(), None);
    }

    #[test]
    fn upper_face_belongs_to_a_leaf() {
        let mut tree = PartitionTree::new(ActionSpace::unit(1).unwrap());
        let [_, r] = tree.expand(0).unwrap();
        assert_eq!(tree.leaf_containing(&[1.0]), Some(r));
        assert_eq!(tree.leaf_containing(&[0.5]), Some(r));
        assert_eq!(tree.leaf_containing(&[1.5]), None);
    }

    #[test]
    fn uniform_rounds_halve_every_side() {
        let dim = 3;
        let mut tree = PartitionTree::new(ActionSpace::unit(dim).unwrap());
        let rounds = 2;
        for _ in 0..rounds * dim {
            let leaves: Vec<usize> = (0..tree.len()).filter(|&i| tree.cell(i).is_leaf()).collect();
            for idx in leaves {
                tree.expand(idx).unwrap();
            }
        }
        for leaf in tree.leaves() {
            let longest = (0..dim).map(|p| leaf.side(p)).fold(0.0, f64::max);
            assert_eq!(longest, 0.25);
        }
    }
}
