//! Experiment runners. Trials fan out over a thread pool; results come back
//! in `(algo, n, trial)` order whatever order they finish in.

use std::sync::Arc;
use std::time::Instant;

use ldhoo::planner::EpisodeResult;
use ldhoo::registry::{bandit_registry, build_task, BanditStrategy, ControlTask, TaskOverrides};
use ldhoo::seed::mix_seed;
use ldhoo::{LdHoo, NoisyObjective, PlannerConfig, TraceRow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::experiment::{depth_label, ExperimentKind, ExperimentRecord, ExperimentSpec};

/// Stream id separating the objective's noise from the bandit's own draws.
const NOISE_STREAM: u64 = 1;

fn run_jobs<J, T, F>(threads: usize, jobs: &[J], f: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}

struct Job {
    strategy: Arc<dyn BanditStrategy>,
    n: u64,
    trial: u64,
}

fn jobs(spec: &ExperimentSpec) -> Result<Vec<Job>> {
    let registry = bandit_registry();
    let mut jobs = Vec::new();
    for algo in &spec.algos {
        let strategy = registry.get(algo)?;
        for &n in &spec.horizons {
            for trial in 0..spec.trials {
                jobs.push(Job { strategy: Arc::clone(&strategy), n, trial });
            }
        }
    }
    Ok(jobs)
}

/// A finished bandit run with its full trace and regret curve.
#[derive(Clone, Debug)]
pub struct BanditOutcome {
    pub record: ExperimentRecord,
    pub trace: Vec<TraceRow>,
    pub regret: Vec<f64>,
}

/// Runs every `(algo, n, trial)` on the noisy sine-product objective.
pub fn run_bandit_suite_detailed(spec: &ExperimentSpec) -> Result<Vec<BanditOutcome>> {
    spec.validate()?;
    let objective = NoisyObjective::sine_product(spec.sigma)?;
    run_jobs(spec.threads, &jobs(spec)?, |job| {
        let seed = spec.trial_seed(job.trial);
        let config = job.strategy.config(spec.nu1, spec.rho, job.n, spec.sampling, seed);
        let depth_limit = config.depth_limit;
        let mut noise = ChaCha8Rng::seed_from_u64(mix_seed(seed, NOISE_STREAM));

        let started = Instant::now();
        let (bandit, _) = LdHoo::run(objective.space(), config, |x| objective.sample_reward(x[0], &mut noise))?;
        let elapsed = started.elapsed();

        let regret = objective.pseudo_regret(bandit.trace());
        let wall_time_ns = if spec.record_timing { elapsed.as_nanos() as u64 } else { 0 };
        let value = match spec.kind {
            ExperimentKind::BanditComplexity => wall_time_ns as f64 * 1e-9,
            _ => *regret.last().expect("horizon is at least 1"),
        };
        Ok(BanditOutcome {
            record: ExperimentRecord {
                experiment: spec.kind,
                algo: job.strategy.name().into(),
                subject: spec.subject.clone(),
                n: job.n,
                h_max: depth_label(depth_limit),
                trial: job.trial,
                seed,
                value,
                node_count: bandit.node_count() as f64,
                wall_time_ns,
            },
            trace: bandit.trace().to_vec(),
            regret,
        })
    })
}

pub fn run_bandit_suite(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    Ok(run_bandit_suite_detailed(spec)?.into_iter().map(|o| o.record).collect())
}

fn planner_config(spec: &ExperimentSpec, strategy: &dyn BanditStrategy, n: u64, seed: u64) -> PlannerConfig {
    PlannerConfig {
        iterations: n,
        lookahead: spec.lookahead,
        gamma: spec.gamma,
        nu1: spec.nu1,
        rho: spec.rho,
        depth_limit: strategy.depth_limit(n),
        sampling: spec.sampling,
        seed,
    }
}

fn task(spec: &ExperimentSpec) -> Result<Box<dyn ControlTask>> {
    let overrides = TaskOverrides { gravity_factor: spec.gravity_factor, episode_length: spec.episode_length };
    Ok(build_task(&spec.subject, &overrides)?)
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub record: ExperimentRecord,
    pub episode: EpisodeResult,
}

/// Plays one episode per `(algo, n, trial)`. Trial `k` starts from
/// `reset(base_seed + k)` for every algorithm.
pub fn run_control_suite_detailed(spec: &ExperimentSpec) -> Result<Vec<EpisodeOutcome>> {
    spec.validate()?;
    let task = task(spec)?;
    run_jobs(spec.threads, &jobs(spec)?, |job| {
        let seed = spec.trial_seed(job.trial);
        let config = planner_config(spec, job.strategy.as_ref(), job.n, seed);
        let episode = task.run_episode(&config, seed)?;
        let plan_ns: u64 = episode.steps.iter().map(|s| s.plan_time_ns).sum();
        Ok(EpisodeOutcome {
            record: ExperimentRecord {
                experiment: ExperimentKind::EpisodeReturn,
                algo: job.strategy.name().into(),
                subject: spec.subject.clone(),
                n: job.n,
                h_max: depth_label(config.depth_limit),
                trial: job.trial,
                seed,
                value: episode.total_reward,
                node_count: episode.mean_tree_nodes(),
                wall_time_ns: if spec.record_timing { plan_ns } else { 0 },
            },
            episode,
        })
    })
}

pub fn run_control_suite(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    Ok(run_control_suite_detailed(spec)?.into_iter().map(|o| o.record).collect())
}

/// Times the planning of a single action from each trial's start state.
pub fn run_timing_suite(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    let task = task(spec)?;
    run_jobs(spec.threads, &jobs(spec)?, |job| {
        let seed = spec.trial_seed(job.trial);
        let config = planner_config(spec, job.strategy.as_ref(), job.n, seed);
        let timing = task.time_plan(&config, seed)?;
        let wall_time_ns = if spec.record_timing { timing.elapsed_ns } else { 0 };
        Ok(ExperimentRecord {
            experiment: ExperimentKind::PlanTiming,
            algo: job.strategy.name().into(),
            subject: spec.subject.clone(),
            n: job.n,
            h_max: depth_label(config.depth_limit),
            trial: job.trial,
            seed,
            value: wall_time_ns as f64 * 1e-9,
            node_count: timing.tree_nodes as f64,
            wall_time_ns,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_trial_one_horizon_gives_a_row_per_algorithm() {
        let spec = ExperimentSpec { horizons: vec![10], trials: 1, ..ExperimentSpec::bandit() };
        let rows = run_bandit_suite(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].algo, "ldhoo");
        assert_eq!(rows[0].h_max, "3");
        assert_eq!(rows[1].algo, "hoo");
        assert_eq!(rows[1].h_max, "unlimited");
    }

    #[test]
    fn rows_follow_algo_n_trial_order() {
        let spec = ExperimentSpec { horizons: vec![20, 10], trials: 3, threads: 4, ..ExperimentSpec::bandit() };
        let rows = run_bandit_suite(&spec).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        let keys: Vec<_> = rows.iter().map(|r| (r.algo.as_str(), r.n, r.trial)).collect();
        let mut expected = Vec::new();
        for algo in ["ldhoo", "hoo"] {
            for n in [20, 10] {
                for t in 0..3 {
                    expected.push((algo, n, t));
                }
            }
        }
        assert_eq!(keys, expected);
    }

    #[test]
    fn hoo_grows_two_nodes_per_round() {
        let spec = ExperimentSpec {
            algos: vec!["hoo".into()],
            horizons: vec![50, 200],
            trials: 1,
            ..ExperimentSpec::bandit()
        };
        let rows = run_bandit_suite(&spec).unwrap();
        assert_eq!(rows[0].node_count, 101.0);
        assert_eq!(rows[1].node_count, 401.0);
    }

    #[test]
    fn short_control_and_timing_runs() {
        let spec = ExperimentSpec {
            horizons: vec![10],
            trials: 2,
            episode_length: Some(5),
            lookahead: 5,
            ..ExperimentSpec::control("cartpole")
        };
        let rows = run_control_suite(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.value == 5.0));

        let timing =
            ExperimentSpec { horizons: vec![10, 20], trials: 1, lookahead: 5, ..ExperimentSpec::timing("pendulum") };
        let rows = run_timing_suite(&timing).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.experiment == ExperimentKind::PlanTiming && r.value > 0.0));
    }
}
