use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::manifest::{RunManifest, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::training::{EvalRow, Stat, CSV_SCHEMA, METRICS};

/// Per-episode evaluation file of a finished run.
pub const EVAL_FILE: &str = "eval_episodes.csv";

/// Column order of [`EVAL_FILE`].
pub const EVAL_COLUMNS: [&str; 9] = [
    "episode",
    "agents",
    "reward",
    "distance",
    "collisions",
    "time",
    "success",
    "caught",
    "farthest",
];

/// One results-table group: runs sharing algorithm, task, size and threshold.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct GroupKey {
    pub task: String,
    pub agents: usize,
    pub algorithm: String,
    pub delta: f64,
}

/// Pooled statistics of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub key: GroupKey,
    pub runs: usize,
    /// Episodes pooled into every cell of this row.
    pub values: usize,
    /// One entry per name in [`METRICS`].
    pub stats: Vec<Stat>,
}

impl AggregateRow {
    pub fn get(&self, metric: &str) -> Option<Stat> {
        METRICS.iter().position(|&m| m == metric).map(|i| self.stats[i])
    }
}

/// Evaluation rows of one run directory.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub key: GroupKey,
    pub rows: Vec<EvalRow>,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads one run directory, checking the CSV layout and the manifest's schema version.
pub fn read_run(dir: &Path) -> Result<RunRecord> {
    let file = dir.join(EVAL_FILE);
    let manifest = dir.join(MANIFEST_FILE);
    let mut key = GroupKey {
        task: "unknown".into(),
        agents: 0,
        algorithm: "unknown".into(),
        delta: f64::NAN,
    };
    if manifest.exists() {
        let m = RunManifest::load(&manifest)?;
        if m.csv_schema != CSV_SCHEMA {
            return Err(format_err(
                &manifest,
                format!("CSV schema {} does not match {CSV_SCHEMA}", m.csv_schema),
            ));
        }
        key = GroupKey {
            task: m.task.to_string(),
            agents: m.n_agents,
            algorithm: m.algorithm.to_string(),
            delta: m.config.delta,
        };
    }
    let mut reader = csv::Reader::from_path(&file).map_err(|e| format_err(&file, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format_err(&file, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != EVAL_COLUMNS {
        return Err(format_err(&file, format!("unexpected columns {header:?}, expected {EVAL_COLUMNS:?}")));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<EvalRow>, _>>()
        .map_err(|e| format_err(&file, e.to_string()))?;
    if rows.is_empty() {
        return Err(format_err(&file, "no evaluation episodes"));
    }
    // evaluation with another agent count overrides the trained size
    if rows.iter().all(|r| r.agents == rows[0].agents) {
        key.agents = rows[0].agents;
    }
    Ok(RunRecord {
        dir: dir.to_path_buf(),
        key,
        rows,
    })
}

/// Expands each input into run directories: itself if it holds an evaluation
/// file, otherwise its subdirectories that do.
pub fn find_runs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.join(EVAL_FILE).exists() {
            out.push(p.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| d.join(EVAL_FILE).exists())
            .collect();
        if found.is_empty() {
            return Err(format_err(p, format!("no {EVAL_FILE} here or in its subdirectories")));
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

/// Pools every episode of every run in a group.
pub fn pool(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut groups: Vec<(GroupKey, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let same = |k: &GroupKey| {
            k.task == r.key.task
                && k.agents == r.key.agents
                && k.algorithm == r.key.algorithm
                && (k.delta == r.key.delta || (k.delta.is_nan() && r.key.delta.is_nan()))
        };
        match groups.iter_mut().find(|(k, _)| same(k)) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.key.clone(), vec![r])),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    groups
        .into_iter()
        .map(|(key, runs)| {
            let all: Vec<&EvalRow> = runs.iter().flat_map(|r| r.rows.iter()).collect();
            let stats = METRICS
                .iter()
                .map(|m| {
                    let values: Vec<f64> = all.iter().map(|r| r.metric(m).expect("known metric")).collect();
                    Stat::of(&values)
                })
                .collect();
            AggregateRow {
                key,
                runs: runs.len(),
                values: all.len(),
                stats,
            }
        })
        .collect()
}

pub fn aggregate_dirs(inputs: &[PathBuf]) -> Result<Vec<AggregateRow>> {
    let records = find_runs(inputs)?
        .iter()
        .map(|d| read_run(d))
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(&records))
}

/// Results-table layout: one row per group, `mean` and `std` columns per metric.
pub fn to_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from("algorithm,task,agents,delta,runs,values");
    for m in METRICS {
        let _ = write!(s, ",{m}_mean,{m}_std");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            r.key.algorithm, r.key.task, r.key.agents, r.key.delta, r.runs, r.values
        );
        for st in &r.stats {
            let _ = write!(s, ",{},{}", st.mean, st.std);
        }
        s.push('\n');
    }
    s
}

/// Aligned `mean ± std` text table for the terminal.
pub fn to_table(rows: &[AggregateRow]) -> String {
    let mut s = format!("{:<22} {:<13} {:>3} {:>6} {:>5}", "algorithm", "task", "n", "delta", "N");
    for m in METRICS {
        let _ = write!(s, " {m:>19}");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{:<22} {:<13} {:>3} {:>6} {:>5}",
            r.key.algorithm, r.key.task, r.key.agents, r.key.delta, r.values
        );
        for st in &r.stats {
            let _ = write!(s, " {:>9.3} ± {:<7.3}", st.mean, st.std);
        }
        s.push('\n');
    }
    s
}
