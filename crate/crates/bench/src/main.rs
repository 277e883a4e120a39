use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use ldhoo::bandit::write_trace_csv;
use ldhoo::planner::write_episode_csv;
use ldhoo::registry::{bandit_registry, task_registry};
use ldhoo::SamplingMode;
use ldhoo_bench::config::expand_args;
use ldhoo_bench::experiment::{write_records, write_records_to, ExperimentKind, ExperimentRecord, ExperimentSpec};
use ldhoo_bench::suite::{run_bandit_suite_detailed, run_control_suite_detailed, run_timing_suite};
use ldhoo_bench::summary::{summarize, summarize_files, write_summary_csv, write_summary_files, SummaryRow};

#[derive(Parser)]
#[command(name = "bench", version, about = "Bandit and planning experiments", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regret, node count and runtime of the bandits on the noisy sine objective.
    Bandit(BanditArgs),
    /// Planned episodes on a control task.
    Control(ControlArgs),
    /// Time to plan a single action for several iteration budgets.
    Timing(TimingArgs),
    /// Aggregate results CSVs into mean/std per group.
    Summarize(SummarizeArgs),
    /// Registered algorithms and environments.
    List,
}

#[derive(Args)]
struct Common {
    /// Independent trials per (algorithm, n).
    #[arg(long, default_value_t = 10)]
    trials: u64,
    /// Base seed; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    nu1: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    /// Point played inside the selected cell: center or uniform.
    #[arg(long, default_value = "center")]
    sampling: SamplingMode,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write 0 in every timing column so output depends only on seeds.
    #[arg(long)]
    no_timing: bool,
    /// Results CSV; a `.summary.json` is written next to it. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file whose keys override flags of the same name.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BanditArgs {
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "ldhoo,hoo")]
    algo: Vec<String>,
    /// Horizons.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "10,50,100,500,1000")]
    n: Vec<u64>,
    /// Standard deviation of the reward noise.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Record `value` as final pseudo-regret (regret) or runtime in seconds (complexity).
    #[arg(long, default_value = "regret")]
    metric: String,
    /// Directory receiving one trace CSV per run.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PlannerArgs {
    #[arg(long, default_value = "cartpole")]
    env: String,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "ldhoo")]
    algo: Vec<String>,
    #[arg(long, default_value_t = 0.99)]
    gamma: f64,
    /// Lookahead in actions.
    #[arg(long, default_value_t = 50)]
    depth: usize,
    /// Gravity multiplier for the cart-pole tasks.
    #[arg(long)]
    gravity_factor: Option<f64>,
    /// Override of the number of real steps per episode.
    #[arg(long)]
    episode_length: Option<usize>,
}

#[derive(Args)]
struct ControlArgs {
    /// Planner iterations per action.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "100")]
    iters: Vec<u64>,
    /// Directory receiving one episode log CSV per run.
    #[arg(long)]
    episode_log: Option<PathBuf>,
    #[command(flatten)]
    planner: PlannerArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TimingArgs {
    /// Planner iterations per action.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "100,400,1000")]
    n: Vec<u64>,
    #[command(flatten)]
    planner: PlannerArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Summary CSV. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Long-format CSV with one row per (group, metric).
    #[arg(long)]
    long: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn apply_common(spec: &mut ExperimentSpec, common: &Common) {
    spec.trials = common.trials;
    spec.base_seed = common.seed;
    if let Some(nu1) = common.nu1 {
        spec.nu1 = nu1;
    }
    spec.rho = common.rho;
    spec.sampling = common.sampling;
    if let Some(threads) = common.threads {
        spec.threads = threads;
    }
    spec.record_timing = !common.no_timing;
}

fn apply_planner(spec: &mut ExperimentSpec, planner: &PlannerArgs) {
    spec.algos = planner.algo.clone();
    spec.gamma = planner.gamma;
    spec.lookahead = planner.depth;
    spec.gravity_factor = planner.gravity_factor;
    spec.episode_length = planner.episode_length;
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn emit(records: &[ExperimentRecord], out: Option<&Path>) -> Result<()> {
    let summary = summarize(records);
    match out {
        Some(path) => {
            write_records_to(path, records)?;
            let json = path.with_extension("summary.json");
            let file = fs::File::create(&json).with_context(|| format!("creating {}", json.display()))?;
            serde_json::to_writer_pretty(file, &summary)?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => write_records(io::stdout().lock(), records)?,
    }
    print_table(&summary);
    Ok(())
}

fn print_table(rows: &[SummaryRow]) {
    for r in rows {
        eprintln!(
            "{:<15} {:<6} {:<12} n={:<5} H={:<9} value {:>10.4} ± {:<9.4} nodes {:>9.1} time {:.6}s",
            r.experiment.as_str(),
            r.algo,
            r.subject,
            r.n,
            r.h_max,
            r.value_mean,
            r.value_std,
            r.node_count_mean,
            r.wall_time_mean_s
        );
    }
}

fn run_bandit(args: BanditArgs) -> Result<()> {
    let mut spec = ExperimentSpec::bandit();
    apply_common(&mut spec, &args.common);
    spec.algos = args.algo;
    spec.horizons = args.n;
    spec.sigma = args.sigma;
    spec.kind = match args.metric.as_str() {
        "regret" => ExperimentKind::BanditRegret,
        "complexity" => ExperimentKind::BanditComplexity,
        other => anyhow::bail!("unknown metric `{other}` (known: regret, complexity)"),
    };

    let outcomes = run_bandit_suite_detailed(&spec)?;
    if let Some(dir) = &args.trace_dir {
        ensure_dir(dir)?;
        for o in &outcomes {
            let r = &o.record;
            let path = dir.join(format!("trace_{}_n{}_trial{}.csv", r.algo, r.n, r.trial));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trace_csv(file, 1, &o.trace, spec.record_timing).with_context(|| path.display().to_string())?;
        }
    }
    let records: Vec<_> = outcomes.into_iter().map(|o| o.record).collect();
    emit(&records, args.common.out.as_deref())
}

fn run_control(args: ControlArgs) -> Result<()> {
    let mut spec = ExperimentSpec::control(&args.planner.env);
    apply_common(&mut spec, &args.common);
    apply_planner(&mut spec, &args.planner);
    spec.horizons = args.iters;

    let outcomes = run_control_suite_detailed(&spec)?;
    if let Some(dir) = &args.episode_log {
        ensure_dir(dir)?;
        for o in &outcomes {
            let r = &o.record;
            let path = dir.join(format!("episode_{}_{}_n{}_trial{}.csv", r.subject, r.algo, r.n, r.trial));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_episode_csv(file, 1, &o.episode, spec.record_timing).with_context(|| path.display().to_string())?;
        }
    }
    let records: Vec<_> = outcomes.into_iter().map(|o| o.record).collect();
    emit(&records, args.common.out.as_deref())
}

fn run_timing(args: TimingArgs) -> Result<()> {
    let mut spec = ExperimentSpec::timing(&args.planner.env);
    apply_common(&mut spec, &args.common);
    apply_planner(&mut spec, &args.planner);
    spec.horizons = args.n;
    let records = run_timing_suite(&spec)?;
    emit(&records, args.common.out.as_deref())
}

fn run_summarize(args: SummarizeArgs) -> Result<()> {
    let rows = summarize_files(&args.files)?;
    match &args.out {
        Some(path) => write_summary_files(path, args.json.as_deref(), args.long.as_deref(), &rows)?,
        None => {
            write_summary_csv(io::stdout().lock(), &rows)?;
            if args.json.is_some() || args.long.is_some() {
                anyhow::bail!("--json and --long require --out");
            }
        }
    }
    Ok(())
}

fn list() -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "algorithms:")?;
    let bandits = bandit_registry();
    for name in bandits.names() {
        writeln!(out, "  {name:<8} {}", bandits.get(name)?.description())?;
    }
    writeln!(out, "environments:")?;
    for name in task_registry().names() {
        writeln!(out, "  {name}")?;
    }
    Ok(())
}

fn run() -> Result<()> {
    let args = expand_args(std::env::args().collect())?;
    match Cli::parse_from(args).command {
        Command::Bandit(a) => run_bandit(a),
        Command::Control(a) => run_control(a),
        Command::Timing(a) => run_timing(a),
        Command::Summarize(a) => run_summarize(a),
        Command::List => list(),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
