use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::aggregate::{aggregate_dirs, to_csv, to_table};
use super::graphs::export_graphs;
use super::manifest::RunManifest;
use super::run::{checkpoint_env, evaluate_checkpoint, threshold_sweep, train_manifest, Budget};
use crate::baselines::{AgentPolicy, Algorithm};
use crate::envs::Task;
use crate::error::{Error, Result};
use crate::policy::Checkpoint;
use crate::training::TrainConfig;

/// Environment variable naming the default root for run directories.
pub const OUT_ROOT_VAR: &str = "CDC_OUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "cdc", version, about = "Connectivity-driven communication for cooperative multi-agent RL")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one or more seeds; one directory per seed.
    Train(TrainArgs),
    /// Evaluate a checkpoint greedily and report mean ± std per metric.
    Eval(EvalArgs),
    /// Roll one evaluation episode and write the communication graphs as JSON.
    ExportGraphs(ExportArgs),
    /// Pool per-episode evaluations across run directories.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// navigation, formation, line or dynamic-pack.
    #[arg(long)]
    pub task: Option<String>,
    /// cdc, independent-ddpg, average-obs, nearest-neighbour-obs or cdc-ff-critic.
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub agents: Option<usize>,
    /// Defaults to the budget's per-task episode count.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Comma-separated seeds, e.g. 1,2001,4001,6001,8001.
    #[arg(long = "seed", visible_alias = "seeds", value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// full (full-length budgets) or desk.
    #[arg(long, default_value = "full")]
    pub budget: String,
    /// Output directory; defaults to $CDC_OUT_ROOT/<algo>-<task>-n<agents>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Start from a saved manifest; flags and overrides take precedence.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Seeds trained concurrently; 0 runs all at once.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Train once per threshold and write a comparison table.
    #[arg(long, value_delimiter = ',')]
    pub delta_sweep: Vec<f64>,
    /// Training settings as key=value.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Execute with a different number of agents than in training.
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory for the summary and per-episode CSV files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Must match the checkpoint's task when given.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output JSON file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Run directories, or parents holding them.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

fn next_to(checkpoint: &Path, name: String) -> PathBuf {
    checkpoint.parent().unwrap_or(Path::new(".")).join(name)
}

/// Resolves the flags, manifest and overrides into a manifest.
pub fn train_manifest_from(args: &TrainArgs) -> Result<RunManifest> {
    let base = args.manifest.as_deref().map(RunManifest::load).transpose()?;
    let task: Task = match (&args.task, &base) {
        (Some(t), _) => t.parse()?,
        (None, Some(m)) => m.task,
        (None, None) => return Err(Error::Usage("--task is required (navigation, formation, line, dynamic-pack)".into())),
    };
    let n_agents = args
        .agents
        .or(base.as_ref().map(|m| m.n_agents))
        .ok_or_else(|| Error::Usage("--agents is required".into()))?;
    let algorithm: Algorithm = match (&args.algo, &base) {
        (Some(a), _) => a.parse()?,
        (None, Some(m)) => m.algorithm,
        (None, None) => Algorithm::Cdc,
    };
    let budget: Budget = args.budget.parse()?;
    let mut config = match &base {
        Some(m) => m.config.clone(),
        None => TrainConfig {
            episodes: budget.episodes(task, n_agents),
            ..TrainConfig::default()
        },
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected KEY=VALUE, got `{kv}`")))?;
        config.set(k, v)?;
    }
    if let Some(e) = args.episodes {
        config.episodes = e;
    }
    let seeds = if !args.seeds.is_empty() {
        args.seeds.clone()
    } else {
        base.as_ref().map_or_else(|| vec![config.seed], |m| m.seeds.clone())
    };
    let out = args.out.clone().unwrap_or_else(|| match &base {
        Some(m) if args.task.is_none() && args.agents.is_none() => m.out_dir.clone(),
        _ => out_root().join(format!("{algorithm}-{task}-n{n_agents}")),
    });
    let manifest = RunManifest::new(task, n_agents, algorithm, config, seeds, out);
    manifest.validate()?;
    Ok(manifest)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let manifest = train_manifest_from(&args)?;
            let jobs = if args.jobs == 0 { manifest.seeds.len() } else { args.jobs };
            if !args.delta_sweep.is_empty() {
                let rows = threshold_sweep(&manifest, &args.delta_sweep, jobs)?;
                print!("{}", to_table(&rows));
                println!("wrote {}", manifest.out_dir.join("threshold_sweep.csv").display());
                return Ok(());
            }
            for r in train_manifest(&manifest, jobs)? {
                let last = r.outcome.episodes.last().map_or(f64::NAN, |m| m.reward);
                println!(
                    "seed {}: {} episodes, last reward {last:.3}, best eval {}, {:.1}s -> {}",
                    r.seed,
                    r.outcome.episodes.len(),
                    r.outcome.best_eval_reward.map_or("n/a".into(), |b| format!("{b:.3}")),
                    r.wall_seconds,
                    r.dir.display()
                );
            }
        }
        Command::Eval(args) => {
            let report = evaluate_checkpoint(&args.checkpoint, args.agents, args.episodes, args.seed)?;
            let dir = args
                .out
                .unwrap_or_else(|| next_to(&args.checkpoint, format!("eval-n{}", report.n_agents)));
            report.save(&dir)?;
            print!("{}", report.table());
            println!("wrote {}", dir.display());
        }
        Command::ExportGraphs(args) => {
            let ck = Checkpoint::load(&args.checkpoint)?;
            let env = checkpoint_env(&ck, args.agents)?;
            if let Some(t) = &args.task {
                let t: Task = t.parse()?;
                if t != env.task {
                    return Err(Error::Usage(format!("checkpoint was trained on {}, not {t}", env.task)));
                }
            }
            let policy = AgentPolicy::from_checkpoint(&ck)?;
            let algorithm = ck.meta("algorithm")?;
            let actor = policy
                .as_cdc()
                .ok_or_else(|| Error::Usage(format!("{algorithm} has no communication graph to export")))?;
            let export = export_graphs(actor, &env, args.seed)?;
            let path = args
                .out
                .unwrap_or_else(|| next_to(&args.checkpoint, format!("graphs-n{}-seed{}.json", env.n_agents, args.seed)));
            export.save(&path)?;
            println!(
                "{} steps, centrality {:?} -> {}",
                export.steps.len(),
                export.centrality.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                path.display()
            );
        }
        Command::Aggregate(args) => {
            let rows = aggregate_dirs(&args.dirs)?;
            match args.out {
                Some(path) => {
                    std::fs::write(&path, to_csv(&rows))?;
                    print!("{}", to_table(&rows));
                    println!("wrote {}", path.display());
                }
                None => print!("{}", to_csv(&rows)),
            }
        }
    }
    Ok(())
}
