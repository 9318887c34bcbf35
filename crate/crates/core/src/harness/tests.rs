use std::path::{Path, PathBuf};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cli::train_manifest_from;
use super::*;
use crate::baselines::{AgentPolicy, Algorithm, BaselineKind};
use crate::envs::{EnvConfig, EpisodeMetrics, Task};
use crate::error::Error;
use crate::policy::CdcActor;
use crate::training::{write_eval_rows, EpisodeRow, TrainConfig, CSV_SCHEMA};

const QUICK: [&str; 5] = [
    "batch_size=32",
    "update_every=25",
    "eval_every=5",
    "eval_episodes=2",
    "final_eval_episodes=5",
];

fn train_args(extra: &[&str]) -> cli::TrainArgs {
    let mut argv = vec!["cdc", "train"];
    argv.extend_from_slice(extra);
    match Cli::try_parse_from(argv).unwrap().command {
        Command::Train(a) => a,
        other => panic!("parsed {other:?}"),
    }
}

fn metrics_rows(dir: &Path) -> Vec<EpisodeRow> {
    csv::Reader::from_path(dir.join("metrics.csv"))
        .unwrap()
        .deserialize()
        .map(|r| r.unwrap())
        .collect()
}

fn without_clock(rows: Vec<EpisodeRow>) -> Vec<EpisodeRow> {
    rows.into_iter().map(|r| EpisodeRow { wall_seconds: 0.0, ..r }).collect()
}

#[test]
fn manifest_round_trips() {
    let mut cfg = TrainConfig::default();
    cfg.delta = 0.025;
    cfg.episode_length = Some(30);
    let mut m = RunManifest::new(
        Task::DynamicPack,
        4,
        Algorithm::Baseline(BaselineKind::NearestNeighbourObs),
        cfg,
        vec![1, 2001],
        PathBuf::from("/tmp/x y"),
    );
    m.config.seed = 1;
    m.wall_seconds = Some(12.5);
    let back = RunManifest::parse(&m.to_text()).unwrap();
    assert_eq!(back, m);
    assert!(m.to_text().contains(BEST_MODEL_RULE));
    assert!(RunManifest::parse("task=line\nagents=3\nnonsense").is_err());
    assert!(RunManifest::parse("agents=3").is_err());
    assert!(matches!(RunManifest::parse("task=line\nagents=3\ncolour=red"), Err(Error::Usage(_))));
    assert_eq!(parse_seeds("1, 2001,").unwrap(), vec![1, 2001]);
    assert!(parse_seeds("1,x").is_err());
}

#[test]
fn seed_manifest_narrows_the_batch() {
    let m = RunManifest::new(Task::Line, 3, Algorithm::Cdc, TrainConfig::default(), vec![1, 2001], "out".into());
    let s = m.for_seed(2001);
    assert_eq!(s.seeds, vec![2001]);
    assert_eq!(s.config.seed, 2001);
    assert_eq!(s.out_dir, Path::new("out").join("seed-2001"));
    let mut dup = m.clone();
    dup.seeds = vec![5, 5];
    assert!(dup.validate().is_err());
}

#[test]
fn omitted_episodes_use_the_full_budget() {
    let m = train_manifest_from(&train_args(&["--task", "formation", "--agents", "4", "--out", "o"])).unwrap();
    assert_eq!(m.config.episodes, 50_000);
    assert_eq!(m.algorithm, Algorithm::Cdc);
    assert_eq!(m.seeds, vec![1]);
    let big = train_manifest_from(&train_args(&["--task", "line", "--agents", "8", "--out", "o"])).unwrap();
    assert_eq!(big.config.episodes, 30_000);
    let desk = train_manifest_from(&train_args(&["--task", "navigation", "--agents", "3", "--budget", "desk", "--out", "o"])).unwrap();
    assert_eq!(desk.config.episodes, DESK_EPISODES);
    assert_eq!(Budget::Full.episodes(Task::Navigation, 3), 100_000);
}

#[test]
fn flags_and_overrides_resolve() {
    let m = train_manifest_from(&train_args(&[
        "--task",
        "dynamic-pack",
        "--agents",
        "4",
        "--algo",
        "average-obs",
        "--seed",
        "1,2001",
        "--episodes",
        "7",
        "--out",
        "o",
        "delta=0.075",
        "episodes=3",
    ]))
    .unwrap();
    assert_eq!(m.seeds, vec![1, 2001]);
    assert_eq!(m.config.episodes, 7);
    assert_eq!(m.config.delta, 0.075);
    assert_eq!(m.algorithm, Algorithm::Baseline(BaselineKind::AverageObs));
    assert_eq!(train_args(&["--seeds", "4001"]).seeds, vec![4001]);

    let err = train_manifest_from(&train_args(&["--task", "pursuit", "--agents", "3"])).unwrap_err();
    assert!(matches!(&err, Error::Usage(s) if s.contains("dynamic-pack")), "{err}");
    let err = train_manifest_from(&train_args(&["--task", "line", "--agents", "3", "--algo", "maac"])).unwrap_err();
    assert!(matches!(&err, Error::Usage(s) if s.contains("cdc-ff-critic")), "{err}");
    assert!(train_manifest_from(&train_args(&["--agents", "3"])).is_err());
    assert!(train_manifest_from(&train_args(&["--task", "line", "--agents", "3", "gamma"])).is_err());
}

#[test]
fn output_root_comes_from_the_environment() {
    let root = tempfile::tempdir().unwrap();
    std::env::set_var(OUT_ROOT_VAR, root.path());
    let m = train_manifest_from(&train_args(&["--task", "line", "--agents", "3", "--algo", "independent-ddpg"])).unwrap();
    std::env::remove_var(OUT_ROOT_VAR);
    assert_eq!(m.out_dir, root.path().join("independent-ddpg-line-n3"));
}

#[test]
fn train_writes_one_directory_per_seed() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let mut argv = vec!["--task", "formation", "--agents", "4", "--episodes", "10", "--seed", "1,2001", "--out", dir];
    argv.extend(QUICK);
    let m = train_manifest_from(&train_args(&argv)).unwrap();
    let runs = train_manifest(&m, 2).unwrap();
    assert_eq!(runs.len(), 2);
    for (run, seed) in runs.iter().zip([1, 2001]) {
        assert_eq!(run.dir, out.path().join(format!("seed-{seed}")));
        assert_eq!(metrics_rows(&run.dir).len(), 10);
        for f in ["manifest.txt", "checkpoint_best.txt", "checkpoint_last.txt", "eval_log.csv", "eval_episodes.csv"] {
            assert!(run.dir.join(f).exists(), "{f}");
        }
        let sm = RunManifest::load(&run.dir).unwrap();
        assert_eq!(sm.seeds, vec![seed]);
        assert!(sm.wall_seconds.is_some());
    }
    let root = RunManifest::load(out.path()).unwrap();
    assert_eq!(root.seeds, vec![1, 2001]);
    assert_ne!(metrics_rows(&runs[0].dir), metrics_rows(&runs[1].dir));
}

#[test]
fn rerunning_a_manifest_reproduces_the_logs() {
    let out = tempfile::tempdir().unwrap();
    let first = out.path().join("first");
    let mut argv = vec!["--task", "line", "--agents", "3", "--episodes", "6", "--seed", "4001"];
    let first_s = first.to_str().unwrap().to_string();
    argv.extend(["--out", first_s.as_str()]);
    argv.extend(QUICK);
    let m = train_manifest_from(&train_args(&argv)).unwrap();
    train_manifest(&m, 1).unwrap();

    let second = out.path().join("second");
    let mpath = first.join(MANIFEST_FILE);
    let replay = train_manifest_from(&train_args(&[
        "--manifest",
        mpath.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]))
    .unwrap();
    assert_eq!(replay.config, m.config);
    train_manifest(&replay, 1).unwrap();
    let a = first.join("seed-4001");
    let b = second.join("seed-4001");
    assert_eq!(without_clock(metrics_rows(&a)), without_clock(metrics_rows(&b)));
    assert_eq!(
        std::fs::read_to_string(a.join("checkpoint_last.txt")).unwrap(),
        std::fs::read_to_string(b.join("checkpoint_last.txt")).unwrap()
    );
}

fn quick_pack_checkpoint(dir: &Path) -> PathBuf {
    let cfg = TrainConfig {
        episodes: 3,
        batch_size: 32,
        update_every: 25,
        eval_every: 3,
        eval_episodes: 1,
        final_eval_episodes: 0,
        ..TrainConfig::default()
    };
    train_seed(Algorithm::Cdc, Task::DynamicPack, 4, &cfg, Some(dir)).unwrap();
    dir.join("checkpoint_best.txt")
}

#[test]
fn eval_reports_every_metric_at_other_agent_counts() {
    match Cli::try_parse_from(["cdc", "eval", "--checkpoint", "c.txt"]).unwrap().command {
        Command::Eval(a) => assert_eq!(a.episodes, 100),
        other => panic!("{other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let ck = quick_pack_checkpoint(dir.path());
    let report = evaluate_checkpoint(&ck, Some(6), 3, 1).unwrap();
    assert_eq!((report.n_agents, report.task, report.runs.len()), (6, Task::DynamicPack, 3));
    assert!(report.summary.farthest.mean > 0.0);
    let table = report.table();
    for m in crate::training::METRICS {
        assert!(table.contains(m), "{m}");
    }
    let out = dir.path().join("eval");
    report.save(&out).unwrap();
    let rec = read_run(&out).unwrap();
    assert_eq!(rec.rows.len(), 3);
    assert!(rec.rows.iter().all(|r| r.agents == 6));
    assert!(matches!(
        evaluate_checkpoint(&dir.path().join("missing.txt"), None, 1, 1),
        Err(Error::Io(_))
    ));
}

#[test]
fn graph_export_covers_pairs_and_averages() {
    let env = EnvConfig::new(Task::Formation, 4);
    let actor = CdcActor::new(env.observation_width(), TrainConfig::default().heat().unwrap(), &mut ChaCha8Rng::seed_from_u64(3));
    let ex = export_graphs(&actor, &env, 7).unwrap();
    assert_eq!(ex.steps.len(), env.episode_length);
    for s in &ex.steps {
        assert_eq!(s.edges.len(), 10);
        assert!(s.edges.iter().all(|e| e.u <= e.v));
        assert!(s.edges.iter().all(|e| (e.u == e.v) == (e.strength == 0.0)));
    }
    // average from the per-step upper-triangle edges
    for u in 0..4 {
        for v in u..4 {
            let mean = ex
                .steps
                .iter()
                .map(|s| s.edges.iter().find(|e| e.u == u && e.v == v).unwrap().heat)
                .sum::<f64>()
                / ex.steps.len() as f64;
            assert!((ex.averaged[u][v] - mean).abs() < 1e-12);
            assert!((ex.averaged[v][u] - mean).abs() < 1e-12);
        }
    }
    assert!((ex.centrality.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    ex.validate().unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    ex.save(&path).unwrap();
    assert_eq!(CommGraphExport::load(&path).unwrap(), ex);
    let again = export_graphs(&actor, &env, 7).unwrap();
    assert_eq!(again, ex);
}

fn synthetic_runs(root: &Path, seeds: &[u64], episodes: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<EpisodeMetrics>> {
    let mut all = Vec::new();
    for &seed in seeds {
        let m = RunManifest::new(Task::Formation, 4, Algorithm::Cdc, TrainConfig { seed, ..TrainConfig::default() }, vec![seed], root.join(format!("seed-{seed}")));
        m.save(&m.out_dir).unwrap();
        let runs: Vec<EpisodeMetrics> = (0..episodes)
            .map(|_| EpisodeMetrics {
                reward: rng.gen_range(-30.0..0.0),
                distance: rng.gen_range(0.0..2.0),
                collisions: rng.gen_range(0..5),
                time: rng.gen_range(1..=50),
                success: rng.gen_bool(0.4),
                caught: 0,
                farthest: rng.gen_range(0.0..1.0),
            })
            .collect();
        write_eval_rows(&m.out_dir.join(EVAL_FILE), 4, &runs).unwrap();
        all.push(runs);
    }
    all
}

#[test]
fn aggregation_pools_five_seeds_into_five_hundred_values() {
    let root = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let runs = synthetic_runs(root.path(), &crate::training::DEFAULT_SEEDS, 100, &mut rng);
    let rows = aggregate_dirs(&[root.path().to_path_buf()]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].runs, rows[0].values), (5, 500));
    assert!(rows[0].stats.iter().all(|s| s.count == 500));

    // Welford oracle over the pooled rewards
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for r in runs.iter().flatten() {
        n += 1.0;
        let d = r.reward - mean;
        mean += d / n;
        m2 += d * (r.reward - mean);
    }
    let st = rows[0].get("reward").unwrap();
    assert!((st.mean - mean).abs() < 1e-12);
    assert!((st.std - (m2 / n).sqrt()).abs() < 1e-12);

    let csv = aggregate::to_csv(&rows);
    assert!(csv.starts_with("algorithm,task,agents,delta,runs,values,reward_mean,reward_std"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn single_run_aggregates_to_its_own_moments() {
    let root = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let runs = synthetic_runs(root.path(), &[1], 40, &mut rng);
    let rows = aggregate_dirs(&[root.path().join("seed-1")]).unwrap();
    let own = crate::training::MetricSummary::of(&runs[0]);
    for m in crate::training::METRICS {
        let (a, b) = (rows[0].get(m).unwrap(), own.get(m).unwrap());
        assert!((a.mean - b.mean).abs() < 1e-12 && (a.std - b.std).abs() < 1e-12, "{m}");
    }
}

#[test]
fn aggregation_rejects_schema_mismatch() {
    let root = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    synthetic_runs(root.path(), &[1, 2001], 5, &mut rng);
    let bad = root.path().join("seed-2001").join(EVAL_FILE);
    std::fs::write(&bad, "episode,reward\n1,0.5\n").unwrap();
    match aggregate_dirs(&[root.path().to_path_buf()]) {
        Err(Error::Format { path, .. }) => assert_eq!(PathBuf::from(path), bad),
        other => panic!("{other:?}"),
    }

    let root2 = tempfile::tempdir().unwrap();
    synthetic_runs(root2.path(), &[1], 5, &mut rng);
    let mpath = root2.path().join("seed-1").join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&mpath)
        .unwrap()
        .replace(&format!("csv_schema={CSV_SCHEMA}"), "csv_schema=99");
    std::fs::write(&mpath, text).unwrap();
    match aggregate_dirs(&[root2.path().to_path_buf()]) {
        Err(Error::Format { path, .. }) => assert_eq!(PathBuf::from(path), mpath),
        other => panic!("{other:?}"),
    }
    assert!(aggregate_dirs(&[root2.path().join("nothing")]).is_err());
}

#[test]
fn groups_split_by_threshold() {
    let root = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for delta in [0.05, 0.1] {
        let sub = root.path().join(format!("delta-{delta}"));
        synthetic_runs(&sub, &[1, 2001], 10, &mut rng);
        for seed in [1, 2001] {
            let p = sub.join(format!("seed-{seed}"));
            let mut m = RunManifest::load(&p).unwrap();
            m.config.delta = delta;
            m.save(&p).unwrap();
        }
    }
    let dirs = find_runs(&[root.path().join("delta-0.05"), root.path().join("delta-0.1")]).unwrap();
    assert_eq!(dirs.len(), 4);
    let rows = aggregate_dirs(&dirs).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows.iter().map(|r| r.key.delta).collect::<Vec<_>>(), vec![0.05, 0.1]);
    assert!(rows.iter().all(|r| r.values == 20));
}

#[test]
fn export_is_limited_to_graph_policies() {
    let env = EnvConfig::new(Task::Line, 3);
    let heat = TrainConfig::default().heat().unwrap();
    let pooled = AgentPolicy::build(
        Algorithm::Baseline(BaselineKind::AverageObs),
        env.observation_width(),
        3,
        heat,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    assert!(pooled.as_cdc().is_none());
    let ff = AgentPolicy::build(
        Algorithm::Baseline(BaselineKind::CdcFeedForwardCritic),
        env.observation_width(),
        3,
        heat,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    assert!(ff.as_cdc().is_some());
}
