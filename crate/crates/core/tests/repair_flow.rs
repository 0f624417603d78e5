use std::collections::BTreeMap;

use fairfix::model_zoo::{default_config, default_space, ParamValue};
use fairfix::prune_db::{
    build_entry, condense, top_pipelines, BuildConfig, BuildProvenance, Database, DatabaseEntry, DbError, ParamRange,
};
use fairfix::repair::{cost, repair, RepairConfig, RepairError};
use fairfix::smbo::{self, Budget, Evaluation, FixedBeta, TrialLog, TrialRecord, TrialStatus};
use fairfix::synthetic::{generate, SyntheticConfig};
use fairfix::tabular::{load_csv, Dataset};
use fairfix::{seed, AlgorithmKind, ComponentKind, Executor, MetricKind, PipelineConfig, Schema};

fn fixture(seed: u64) -> Dataset {
    generate(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

fn provenance() -> BuildProvenance {
    BuildProvenance {
        runs: 2,
        trials: Some(40),
        seconds: None,
        top_k: 5,
        top_m: 3,
        dev: 1.0,
        seed: 9,
    }
}

#[test]
fn suggestions_stay_in_domain() {
    let exec = Executor::sequential();
    let mut rng = seed::rng(17);
    for algorithm in AlgorithmKind::ALL {
        let space = default_space(algorithm);
        let records: Vec<TrialRecord> = (0..12)
            .map(|i| {
                let config = space.sample(&mut rng);
                TrialRecord {
                    index: i,
                    config,
                    proposal: smbo::Proposal::Random,
                    status: TrialStatus::Ok,
                    accuracy: Some(0.5 + 0.03 * i as f64),
                    bias: Some(0.02 * (i % 5) as f64),
                    cost: None,
                    beta: 0.3,
                    wall_ms: 0.0,
                    error: None,
                }
            })
            .collect();
        let log = TrialLog::from_records(records, 0);
        for _ in 0..2_000 {
            let (cfg, _) = smbo::suggest(&log, &space, 0.3, &mut rng, &exec);
            assert!(space.contains(&cfg), "{cfg:?}");
        }
    }
}

#[test]
fn perfectly_fair_model_is_not_repaired() {
    // the feature reveals the label, so every true positive is found in both groups
    let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 2) as f64]).collect();
    let y: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
    let z: Vec<u8> = (0..200).map(|i| ((i / 2) % 2) as u8).collect();
    let ds = Dataset::from_numeric_rows(vec!["x".into()], &rows, y, z).unwrap();
    let cfg = RepairConfig::new(MetricKind::Eod, 10, 0);
    match repair(&ds, AlgorithmKind::DecisionTree, &cfg, None) {
        Err(RepairError::AlreadyFair { accuracy, bias }) => {
            assert_eq!(bias, 0.0);
            assert_eq!(accuracy, 1.0);
        }
        other => panic!("expected AlreadyFair, got {other:?}"),
    }
}

#[test]
fn zero_budget_is_rejected() {
    let mut cfg = RepairConfig::new(MetricKind::Spd, 0, 0);
    cfg.budget = Budget::trials(0);
    assert!(matches!(
        repair(&fixture(0), AlgorithmKind::DecisionTree, &cfg, None),
        Err(RepairError::BudgetExhaustedNoTrials)
    ));
}

#[test]
fn repair_run_is_consistent() {
    let ds = fixture(3);
    let cfg = RepairConfig::new(MetricKind::Spd, 60, 3);
    let r = repair(&ds, AlgorithmKind::DecisionTree, &cfg, None).unwrap();
    assert_eq!(r.log.len(), 60);
    assert_eq!(r.log.records()[0].config, default_config(AlgorithmKind::DecisionTree));

    // trial 0 is the original model, measured on the same validation split as the baseline
    let first = &r.log.records()[0];
    assert_eq!(first.accuracy, Some(r.original.acc));
    assert_eq!(first.bias, Some(r.original.bias));
    assert_eq!(r.beta.a1, r.original.acc);

    // the returned trial minimises cost at the final weight
    let beta = r.beta.beta;
    let min = r
        .log
        .ok_records()
        .map(|t| t.cost_at(beta).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(r.best.cost_at(beta).unwrap(), min);
    assert_eq!(cost(beta, r.repaired.bias, r.repaired.acc), min);

    // weight trace: rises until the single step back, then frozen
    let betas: Vec<f64> = r.beta_trace.iter().map(|(_, b)| *b).collect();
    assert_eq!(betas.len(), 60);
    let drops = betas.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(drops <= 1);
    if let Some(at) = betas.windows(2).position(|w| w[1] < w[0]) {
        assert!(betas[at + 1..].iter().all(|&b| b == betas[at + 1]));
    }
    assert!(betas.iter().all(|&b| b >= r.lower_bound.value));

    // retraining the chosen config reproduces its validation metrics
    assert_eq!(r.model.config, r.best.config);
}

#[test]
fn same_seed_same_report() {
    let ds = fixture(4);
    let cfg = RepairConfig::new(MetricKind::Aod, 40, 11);
    let a = repair(&ds, AlgorithmKind::Knn, &cfg, None).unwrap();
    let b = repair(&ds, AlgorithmKind::Knn, &cfg, None).unwrap();
    assert_eq!(a.log.digest(), b.log.digest());
    assert_eq!(
        serde_json::to_string(&a.report()).unwrap(),
        serde_json::to_string(&b.report()).unwrap()
    );
}

#[test]
fn single_run_entry_contains_best_config() {
    let ds = fixture(5);
    let cfg = BuildConfig {
        runs: 1,
        top_k: 1,
        top_m: 3,
        dev: 1.0,
        repair: RepairConfig::new(MetricKind::Spd, 30, 5),
    };
    let (picked, _) = top_pipelines(&ds, AlgorithmKind::DecisionTree, &cfg, &Executor::sequential()).unwrap();
    assert_eq!(picked.len(), 1);
    let entry = build_entry(
        &ds,
        "synthetic",
        "group",
        AlgorithmKind::DecisionTree,
        &cfg,
        &Executor::sequential(),
    )
    .unwrap();
    assert_eq!(entry.components, vec![picked[0].component]);
    for (name, value) in &picked[0].params {
        match (&entry.params[name], value) {
            (ParamRange::Numeric { lo, hi }, ParamValue::Int(v)) => assert!(*lo <= *v as f64 && *v as f64 <= *hi),
            (ParamRange::Numeric { lo, hi }, ParamValue::Real(v)) => assert!(lo <= v && v <= hi),
            (ParamRange::Categorical { values }, ParamValue::Cat(v)) => assert!(values.contains(v)),
            other => panic!("mismatched range {other:?}"),
        }
    }
    assert!(entry.space().contains(&picked[0]));
    assert_eq!((entry.p, entry.f), (2000, 2));
}

#[test]
fn scaling_components_win_for_knn_on_mixed_scales() {
    // x1 carries the label on a unit scale; x2 is noise a thousand times larger
    let mut rng = seed::rng(1);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut z = Vec::new();
    for i in 0..600 {
        use rand::Rng;
        let g = (i % 2) as u8;
        let x1: f64 = rng.gen_range(-1.0..1.0) + 0.3 * f64::from(g);
        rows.push(vec![x1, rng.gen_range(0.0..1000.0)]);
        y.push(u8::from(x1 > 0.2));
        z.push(g);
    }
    let ds = Dataset::from_numeric_rows(vec!["x1".into(), "x2".into()], &rows, y, z).unwrap();
    let cfg = BuildConfig {
        runs: 2,
        top_k: 5,
        top_m: 3,
        dev: 1.0,
        repair: RepairConfig::new(MetricKind::Spd, 40, 2),
    };
    let (picked, _) = top_pipelines(&ds, AlgorithmKind::Knn, &cfg, &Executor::sequential()).unwrap();
    assert_eq!(picked.len(), 10);
    let (components, _) = condense(&picked, AlgorithmKind::Knn, 3, 1.0);
    assert!(components.contains(&ComponentKind::Standardize), "{components:?}");
}

#[test]
fn german_credit_aggregates_one_hundred_pipelines() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let schema = Schema::from_path(format!("{root}/german.schema.json")).unwrap();
    let ds = load_csv(format!("{root}/german.csv"), &schema).unwrap();
    let mut repair_cfg = RepairConfig::new(MetricKind::Spd, 15, 0);
    repair_cfg.repetitions = 5;
    let cfg = BuildConfig {
        runs: 10,
        top_k: 10,
        top_m: 3,
        dev: 1.0,
        repair: repair_cfg,
    };
    let (picked, l) = top_pipelines(&ds, AlgorithmKind::DecisionTree, &cfg, &Executor::sequential()).unwrap();
    assert_eq!(picked.len(), 100);
    assert!((0.0..1.0).contains(&l));
}

#[test]
fn database_files_round_trip_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let empty = Database::new(provenance());
    let path = dir.path().join("empty.json");
    empty.save(&path).unwrap();
    assert_eq!(Database::load(&path).unwrap(), empty);

    let mut db = Database::new(provenance());
    for (i, algorithm) in [
        AlgorithmKind::LogisticRegression,
        AlgorithmKind::Knn,
        AlgorithmKind::GradientBoosting,
    ]
    .into_iter()
    .enumerate()
    {
        let mut params = BTreeMap::new();
        let space = default_space(algorithm);
        let first = &space.params[0].name;
        params.insert(
            first.clone(),
            ParamRange::Numeric {
                lo: 0.1 + i as f64 / 3.0,
                hi: 1.0 / 3.0 + 7.0,
            },
        );
        db.entries.push(DatabaseEntry {
            dataset: format!("set{i}"),
            p: 1000 + i,
            f: 10 + i,
            protected: "sex".into(),
            lower_bound: 1.0 / (3.0 + i as f64),
            algorithm,
            components: vec![ComponentKind::MinMax, ComponentKind::None],
            params,
        });
    }
    let path = dir.path().join("three.json");
    db.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let loaded = Database::load(&path).unwrap();
    assert_eq!(loaded, db);
    assert_eq!(loaded.to_json().as_bytes(), bytes.as_slice());

    let corrupted = String::from_utf8(bytes)
        .unwrap()
        .replace("fairfix-db/1", "fairfix-db/9");
    assert!(matches!(
        Database::from_json(&corrupted),
        Err(DbError::UnknownVersion(_))
    ));
}

#[test]
fn wall_clock_budget_bounds_repair() {
    let ds = fixture(6);
    let mut cfg = RepairConfig::new(MetricKind::Spd, 0, 6);
    cfg.budget = Budget {
        trials: None,
        seconds: Some(0.5),
    };
    cfg.repetitions = 5;
    let r = repair(&ds, AlgorithmKind::DecisionTree, &cfg, None).unwrap();
    assert!(!r.log.is_empty());
}

#[test]
fn objective_errors_become_failed_trials() {
    let space = default_space(AlgorithmKind::DecisionTree);
    let objective = |c: &PipelineConfig, _: usize| {
        if c.cat("criterion").unwrap() == "entropy" {
            Err("rejected".to_string())
        } else {
            Ok(Evaluation {
                accuracy: 0.5 + c.int("max_depth").unwrap() as f64 / 100.0,
                bias: 0.1,
            })
        }
    };
    let log = smbo::run(
        &objective,
        &space,
        &default_config(AlgorithmKind::DecisionTree),
        Budget::trials(40),
        1,
        &mut FixedBeta(0.2),
        &Executor::sequential(),
    )
    .unwrap();
    assert!(log.records().iter().any(|r| r.status == TrialStatus::Failed));
    assert_eq!(smbo::best(&log, 0.2).unwrap().config.cat("criterion").unwrap(), "gini");
}
