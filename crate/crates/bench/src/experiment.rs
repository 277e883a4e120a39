use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ldhoo::registry::{bandit_registry, task_registry};
use ldhoo::{DepthLimit, SamplingMode};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Columns of every results CSV, in order.
pub const RECORD_COLUMNS: [&str; 10] =
    ["experiment", "algo", "subject", "n", "h_max", "trial", "seed", "value", "node_count", "wall_time_ns"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Final pseudo-regret on the noisy objective.
    BanditRegret,
    /// Node count and runtime of the bandit.
    BanditComplexity,
    /// Undiscounted normalized return of a planned episode.
    EpisodeReturn,
    /// Time to plan a single action.
    PlanTiming,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::BanditRegret => "bandit-regret",
            ExperimentKind::BanditComplexity => "bandit-complexity",
            ExperimentKind::EpisodeReturn => "episode-return",
            ExperimentKind::PlanTiming => "plan-timing",
        }
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, ExperimentKind::BanditRegret | ExperimentKind::BanditComplexity)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        [
            ExperimentKind::BanditRegret,
            ExperimentKind::BanditComplexity,
            ExperimentKind::EpisodeReturn,
            ExperimentKind::PlanTiming,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| BenchError::InvalidSpec(format!("unknown experiment kind `{s}`")))
    }
}

/// Everything needed to reproduce one batch of runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub algos: Vec<String>,
    /// Objective id for bandit runs, environment name for control runs.
    pub subject: String,
    /// Bandit horizons or planner iterations per action.
    pub horizons: Vec<u64>,
    pub trials: u64,
    pub base_seed: u64,
    pub nu1: f64,
    pub rho: f64,
    pub sampling: SamplingMode,
    /// Reward noise of the bandit objective.
    pub sigma: f64,
    pub gamma: f64,
    pub lookahead: usize,
    pub gravity_factor: Option<f64>,
    pub episode_length: Option<usize>,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// When false every timing column is written as 0.
    pub record_timing: bool,
}

pub const SINE_OBJECTIVE: &str = "sine-product";

impl ExperimentSpec {
    pub fn bandit() -> Self {
        Self {
            kind: ExperimentKind::BanditRegret,
            algos: vec!["ldhoo".into(), "hoo".into()],
            subject: SINE_OBJECTIVE.into(),
            horizons: vec![10, 50, 100, 500, 1000],
            trials: 10,
            base_seed: 0,
            nu1: 1.0,
            rho: 0.25,
            sampling: SamplingMode::Center,
            sigma: 0.05,
            gamma: 0.99,
            lookahead: 50,
            gravity_factor: None,
            episode_length: None,
            threads: 0,
            record_timing: true,
        }
    }

    pub fn control(env: &str) -> Self {
        Self {
            kind: ExperimentKind::EpisodeReturn,
            algos: vec!["ldhoo".into()],
            subject: env.into(),
            horizons: vec![100],
            nu1: 4.0,
            ..Self::bandit()
        }
    }

    pub fn timing(env: &str) -> Self {
        Self { kind: ExperimentKind::PlanTiming, horizons: vec![100, 400, 1000], threads: 1, ..Self::control(env) }
    }

    /// Seed of trial `k`; shared by every algorithm at the same `(n, k)`.
    pub fn trial_seed(&self, trial: u64) -> u64 {
        self.base_seed.wrapping_add(trial)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(BenchError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(BenchError::InvalidSpec("horizons must be a nonempty list of positive integers".into()));
        }
        if self.algos.is_empty() {
            return Err(BenchError::InvalidSpec("at least one algorithm is required".into()));
        }
        let bandits = bandit_registry();
        for algo in &self.algos {
            bandits.get(algo)?;
        }
        if self.kind.is_bandit() {
            if self.subject != SINE_OBJECTIVE {
                return Err(BenchError::InvalidSpec(format!(
                    "unknown objective `{}` (known: {SINE_OBJECTIVE})",
                    self.subject
                )));
            }
        } else {
            task_registry().get(&self.subject)?;
        }
        Ok(())
    }
}

/// One row of a results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: ExperimentKind,
    pub algo: String,
    pub subject: String,
    pub n: u64,
    /// Depth cap as a number, or `unlimited`.
    pub h_max: String,
    pub trial: u64,
    pub seed: u64,
    /// Pseudo-regret, episode return, or seconds per planned action.
    pub value: f64,
    pub node_count: f64,
    pub wall_time_ns: u64,
}

pub fn depth_label(limit: DepthLimit) -> String {
    match limit {
        DepthLimit::Limited(h) => h.to_string(),
        DepthLimit::Unlimited => "unlimited".into(),
    }
}

pub fn write_records<W: Write>(out: W, records: &[ExperimentRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(RECORD_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_to(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_records(file, records).map_err(|e| BenchError::csv(path, e))
}

/// Parses a results CSV, rejecting any header that differs from
/// [`RECORD_COLUMNS`].
pub fn read_records<R: Read>(input: R, path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(|e| BenchError::csv(path, e))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != RECORD_COLUMNS {
        return Err(BenchError::Schema {
            path: path.to_path_buf(),
            missing: RECORD_COLUMNS.iter().filter(|c| !found.contains(c)).map(|c| c.to_string()).collect(),
            unexpected: found.iter().filter(|c| !RECORD_COLUMNS.contains(c)).map(|c| c.to_string()).collect(),
        });
    }
    reader.deserialize().collect::<Result<Vec<ExperimentRecord>, _>>().map_err(|e| BenchError::csv(path, e))
}

pub fn read_records_from(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_records(file, path)
}
