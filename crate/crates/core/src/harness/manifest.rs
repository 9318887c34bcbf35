use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::baselines::Algorithm;
use crate::envs::Task;
use crate::error::{Error, Result};
use crate::training::{TrainConfig, CSV_SCHEMA};

/// File name of the manifest inside every output directory.
pub const MANIFEST_FILE: &str = "manifest.txt";

/// How the "best model" is chosen; stored verbatim in every manifest.
pub const BEST_MODEL_RULE: &str = "highest periodic-evaluation mean reward";

/// Everything needed to reproduce a batch of runs, as flat `key=value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub task: Task,
    pub n_agents: usize,
    pub algorithm: Algorithm,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub version: String,
    pub csv_schema: u32,
    pub wall_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(task: Task, n_agents: usize, algorithm: Algorithm, mut config: TrainConfig, seeds: Vec<u64>, out_dir: PathBuf) -> Self {
        if let Some(&first) = seeds.first() {
            config.seed = first;
        }
        Self {
            task,
            n_agents,
            algorithm,
            config,
            seeds,
            out_dir,
            version: env!("CARGO_PKG_VERSION").to_string(),
            csv_schema: CSV_SCHEMA,
            wall_seconds: None,
        }
    }

    /// Directory holding the outputs of one seed.
    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("seed-{seed}"))
    }

    /// Training config for one seed.
    pub fn seed_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.config.clone()
        }
    }

    /// Copy describing a single seed of this batch.
    pub fn for_seed(&self, seed: u64) -> Self {
        Self {
            seeds: vec![seed],
            out_dir: self.seed_dir(seed),
            config: self.seed_config(seed),
            wall_seconds: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Usage("at least one seed is required".into()));
        }
        if self.n_agents == 0 {
            return Err(Error::Usage("--agents must be positive".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Usage(format!("repeated seed in {:?}", self.seeds)));
        }
        self.config.validate()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# cdc run manifest\n");
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "algorithm={}", self.algorithm);
        let _ = writeln!(s, "task={}", self.task);
        let _ = writeln!(s, "agents={}", self.n_agents);
        let _ = writeln!(s, "seeds={}", seeds.join(","));
        let _ = writeln!(s, "out={}", self.out_dir.display());
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "csv_schema={}", self.csv_schema);
        let _ = writeln!(
            s,
            "best_model={BEST_MODEL_RULE}, {} episodes every {}",
            self.config.eval_episodes, self.config.eval_every
        );
        for (k, v) in self.config.entries() {
            if k != "seed" {
                let _ = writeln!(s, "{k}={v}");
            }
        }
        if let Some(w) = self.wall_seconds {
            let _ = writeln!(s, "wall_seconds={w}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut task = None;
        let mut agents = None;
        let mut algorithm = Algorithm::Cdc;
        let mut seeds = None;
        let mut out = PathBuf::from(".");
        let mut version = String::new();
        let mut csv_schema = CSV_SCHEMA;
        let mut wall_seconds = None;
        let mut config = TrainConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("manifest line {}: expected key=value, got `{line}`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |what: &str| Error::Usage(format!("manifest line {}: bad {what} `{v}`", i + 1));
            match k {
                "task" => task = Some(v.parse::<Task>()?),
                "agents" => agents = Some(v.parse::<usize>().map_err(|_| bad("agent count"))?),
                "algorithm" => algorithm = v.parse()?,
                "seeds" => seeds = Some(parse_seeds(v)?),
                "out" => out = PathBuf::from(v),
                "version" => version = v.to_string(),
                "csv_schema" => csv_schema = v.parse().map_err(|_| bad("schema version"))?,
                "wall_seconds" => wall_seconds = Some(v.parse().map_err(|_| bad("duration"))?),
                "best_model" => {}
                _ => config.set(k, v)?,
            }
        }
        let seeds = seeds.unwrap_or_else(|| vec![config.seed]);
        if let Some(&first) = seeds.first() {
            config.seed = first;
        }
        Ok(Self {
            task: task.ok_or_else(|| Error::Usage("manifest lacks `task`".into()))?,
            n_agents: agents.ok_or_else(|| Error::Usage("manifest lacks `agents`".into()))?,
            algorithm,
            config,
            seeds,
            out_dir: out,
            version,
            csv_schema,
            wall_seconds,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(MANIFEST_FILE), self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&path)?;
        Self::parse(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// Comma-separated seed list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Usage(format!("bad seed `{t}`"))))
        .collect()
}
