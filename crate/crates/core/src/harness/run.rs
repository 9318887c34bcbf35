use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::aggregate::{aggregate_dirs, to_csv, AggregateRow};
use super::manifest::RunManifest;
use crate::baselines::{AgentPolicy, Algorithm, AnyCritic};
use crate::envs::{EnvConfig, EpisodeMetrics, Task};
use crate::error::{Error, Result};
use crate::policy::Checkpoint;
use crate::training::{evaluate, write_eval_rows, MetricSummary, TrainConfig, TrainOutcome, Trainer};

const INIT_STREAM: u64 = 0x2545_f491_4f6c_dd1d;

/// Episode budgets: the full-length ones, or a desk-scale fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Full,
    Desk,
}

/// Episodes per run under the desk budget, for every task and size.
pub const DESK_EPISODES: usize = 2000;

impl Budget {
    pub fn episodes(self, task: Task, n_agents: usize) -> usize {
        match self {
            Budget::Full => task.full_episodes(n_agents),
            Budget::Desk => DESK_EPISODES.min(task.full_episodes(n_agents)),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Budget::Full),
            "desk" => Ok(Budget::Desk),
            _ => Err(Error::Usage(format!("unknown budget `{s}` (expected full or desk)"))),
        }
    }
}

/// Result of one seed of a batch.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub dir: PathBuf,
    pub outcome: TrainOutcome,
    pub wall_seconds: f64,
}

/// Trains one seed of `algorithm`; with `dir`, writes logs, checkpoints and a manifest there.
pub fn train_seed(
    algorithm: Algorithm,
    task: Task,
    n_agents: usize,
    cfg: &TrainConfig,
    dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let env = EnvConfig::new(task, n_agents);
    let width = env.observation_width();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_STREAM);
    let actor = AgentPolicy::build(algorithm, width, n_agents, cfg.heat()?, &mut rng);
    let critic = AnyCritic::build(algorithm, width, n_agents, &mut rng);
    let mut trainer = Trainer::new(env, cfg.clone(), actor, critic)?;
    trainer.run(algorithm.name(), dir)
}

/// Runs every seed of `manifest`, at most `jobs` at a time, each in its own
/// directory. The batch manifest is written to the output root first.
pub fn train_manifest(manifest: &RunManifest, jobs: usize) -> Result<Vec<SeedRun>> {
    manifest.validate()?;
    std::fs::create_dir_all(&manifest.out_dir)?;
    manifest.save(&manifest.out_dir)?;
    let start = Instant::now();
    let jobs = jobs.max(1);
    let mut runs = Vec::with_capacity(manifest.seeds.len());
    for chunk in manifest.seeds.chunks(jobs) {
        let results: Vec<Result<SeedRun>> = thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| scope.spawn(move || run_one(manifest, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numeric("training thread panicked".into()))))
                .collect()
        });
        for r in results {
            runs.push(r?);
        }
    }
    let mut done = manifest.clone();
    done.wall_seconds = Some(start.elapsed().as_secs_f64());
    done.save(&manifest.out_dir)?;
    Ok(runs)
}

fn run_one(manifest: &RunManifest, seed: u64) -> Result<SeedRun> {
    let single = manifest.for_seed(seed);
    single.save(&single.out_dir)?;
    let start = Instant::now();
    let outcome = train_seed(manifest.algorithm, manifest.task, manifest.n_agents, &single.config, Some(&single.out_dir))?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut finished = single.clone();
    finished.wall_seconds = Some(wall_seconds);
    finished.save(&single.out_dir)?;
    log::info!(
        "{} {} n={} seed {seed}: {} episodes, {} updates, {wall_seconds:.1}s",
        manifest.algorithm,
        manifest.task,
        manifest.n_agents,
        outcome.episodes.len(),
        outcome.updates
    );
    Ok(SeedRun {
        seed,
        dir: single.out_dir,
        outcome,
        wall_seconds,
    })
}

/// Evaluation of a stored checkpoint.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub algorithm: String,
    pub task: Task,
    pub n_agents: usize,
    pub runs: Vec<EpisodeMetrics>,
    pub summary: MetricSummary,
}

impl EvalReport {
    /// Human-readable `metric  mean ± std` table.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{} on {} with {} agents, {} episodes\n",
            self.algorithm, self.task, self.n_agents, self.summary.episodes
        );
        for m in crate::training::METRICS {
            let st = self.summary.get(m).expect("known metric");
            s.push_str(&format!("{m:<11} {:>10.4} ± {:.4}\n", st.mean, st.std));
        }
        s
    }

    /// Writes `eval_summary.csv` and `eval_episodes.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("eval_summary.csv"), self.summary.to_csv())?;
        write_eval_rows(&dir.join("eval_episodes.csv"), self.n_agents, &self.runs)
    }
}

/// Restores the task, agent count and episode length a checkpoint was trained with.
pub fn checkpoint_env(ck: &Checkpoint, agents: Option<usize>) -> Result<EnvConfig> {
    let task: Task = ck.meta("task")?.parse()?;
    let trained: usize = ck
        .meta("agents")?
        .parse()
        .map_err(|_| Error::Parameter("checkpoint has a bad agent count".into()))?;
    let mut env = EnvConfig::new(task, agents.unwrap_or(trained));
    if let Some(t) = ck.meta("episode_length").ok().and_then(|v| v.parse().ok()) {
        env.episode_length = t;
    }
    Ok(env)
}

/// Greedy rollouts of the actor stored at `path`, optionally with a different agent count.
pub fn evaluate_checkpoint(path: &Path, agents: Option<usize>, episodes: usize, seed: u64) -> Result<EvalReport> {
    let ck = Checkpoint::load(path)?;
    let actor = AgentPolicy::from_checkpoint(&ck)?;
    let env = checkpoint_env(&ck, agents)?;
    let runs = evaluate(&actor, &env, episodes, seed)?;
    Ok(EvalReport {
        algorithm: ck.meta("algorithm")?.to_string(),
        task: env.task,
        n_agents: env.n_agents,
        summary: MetricSummary::of(&runs),
        runs,
    })
}

/// Thresholds compared by the threshold study.
pub const SWEEP_DELTAS: [f64; 5] = [0.01, 0.025, 0.05, 0.075, 0.1];

/// Trains every seed of `base` once per threshold under `base.out_dir/delta-<δ>`,
/// then pools the final evaluations into one row per threshold and writes
/// `threshold_sweep.csv` to the root.
pub fn threshold_sweep(base: &RunManifest, deltas: &[f64], jobs: usize) -> Result<Vec<AggregateRow>> {
    if deltas.is_empty() {
        return Err(Error::Usage("threshold sweep needs at least one delta".into()));
    }
    let mut dirs = Vec::new();
    for &delta in deltas {
        let mut m = base.clone();
        m.config.delta = delta;
        m.out_dir = base.out_dir.join(format!("delta-{delta}"));
        dirs.extend(train_manifest(&m, jobs)?.into_iter().map(|r| r.dir));
    }
    let rows = aggregate_dirs(&dirs)?;
    std::fs::write(base.out_dir.join("threshold_sweep.csv"), to_csv(&rows))?;
    Ok(rows)
}
