//! Command-line plumbing: run manifests, seed fan-out, checkpoint evaluation,
//! communication-graph export and cross-seed aggregation.

pub mod aggregate;
pub mod cli;
pub mod graphs;
pub mod manifest;
pub mod run;

pub use aggregate::{aggregate_dirs, find_runs, pool, read_run, AggregateRow, GroupKey, RunRecord, EVAL_COLUMNS, EVAL_FILE};
pub use cli::{Cli, Command, OUT_ROOT_VAR};
pub use graphs::{export_graphs, CommGraphExport, Edge, StepGraph};
pub use manifest::{parse_seeds, RunManifest, BEST_MODEL_RULE, MANIFEST_FILE};
pub use run::{
    checkpoint_env, evaluate_checkpoint, threshold_sweep, train_manifest, train_seed, Budget, EvalReport, SeedRun,
    DESK_EPISODES, SWEEP_DELTAS,
};

#[cfg(test)]
mod tests;
