mod common;

use alliance_core::compare::compare_partitions;
use alliance_core::config::Algorithm;
use alliance_core::experiment::run_experiment;
use alliance_core::optimize::{evaluate_partition, greedy_partition};
use alliance_core::{AlliancePartition, Error, ErrorKind, ExperimentConfig, Realization};

const TOY: &str = r#"
name = "toy"
beta = 0.7
gamma = 0.3
algorithms = ["greedy", "greedy-sampled", "enumerate", "miqp-tiny"]

[generator]
n_airports = 20
n_segment_records = 2000
n_carriers = 6
seed = 3

[sampling]
n_walks = 50
walk_length = 2
n_segment_samples = 50
seed = 21

[evaluation]
n_realizations = 4
"#;

fn read(dir: &std::path::Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn bundle_contents_and_rerun() {
    let cfg = ExperimentConfig::from_toml(TOY).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = run_experiment(&cfg, &a, false).unwrap();
    let rb = run_experiment(&cfg, &b, false).unwrap();
    assert_eq!(ra.manifest, rb.manifest);
    assert_eq!(ra.manifest.status, "ok");
    assert_eq!(ra.manifest.completed_stages.last().map(String::as_str), Some("report"));

    for f in &ra.manifest.files {
        assert_eq!(std::fs::read(a.join(&f.name)).unwrap(), std::fs::read(b.join(&f.name)).unwrap());
        if f.name.ends_with(".csv") {
            let first = read(&a, &f.name).lines().next().unwrap().to_string();
            assert!(first.contains(&ra.config_hash), "{}", f.name);
            assert!(first.contains(&ra.graph_hash), "{}", f.name);
        }
    }
    let names: Vec<&str> = ra.manifest.files.iter().map(|f| f.name.as_str()).collect();
    for expected in [
        "graph_summary.json",
        "schedule.csv",
        "realization.bin",
        "partition_synthetic-baseline.csv",
        "partition_greedy.csv",
        "trace_greedy.csv",
        "landscape.csv",
        "solution_miqp-tiny.json",
        "evaluations.csv",
        "hhi_greedy.csv",
        "mpc_greedy.csv",
        "breakdown_greedy.json",
        "comparison.csv",
        "summary.json",
    ] {
        assert!(names.contains(&expected), "missing {expected}");
    }

    let cmp = read(&a, "comparison.csv");
    let header = cmp.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "method,hhi_mean,hhi_std,mpc_mean,mpc_std,objective_mean,objective_std");
    let rows = read(&a, "evaluations.csv");
    // baseline + 4 partition-producing algorithms, 4 realizations each
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5 * 4);

    let trace = read(&a, "trace_greedy.csv");
    let body: Vec<&str> = trace.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "iteration,p,q,objective,K");
    assert!(body[1].starts_with("0,,,"));

    let again = run_experiment(&cfg, &a, false).unwrap();
    assert!(again.realization_reused);
    assert_eq!(again.manifest, ra.manifest);
}

#[test]
fn evaluation_never_reuses_the_optimization_seed() {
    let cfg = ExperimentConfig::from_toml(TOY).unwrap();
    assert!(!cfg.evaluation_seeds().contains(&cfg.sampling.seed));
    let clash = TOY.replace("n_realizations = 4", "seeds = [5, 21]");
    assert!(matches!(ExperimentConfig::from_toml(&clash), Err(Error::SeedCollision(21))));

    let (g, r) = common::toy(0);
    let p = AlliancePartition::singletons(g.n_carriers());
    let err = evaluate_partition(&g, &p, &r, 0.7, 0.3, &[r.seed()]).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
}

#[test]
fn failing_stage_is_recorded() {
    let text = TOY
        .replace("n_carriers = 6", "n_carriers = 14")
        .replace(r#"algorithms = ["greedy", "greedy-sampled", "enumerate", "miqp-tiny"]"#, r#"algorithms = ["greedy", "enumerate"]"#);
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.algorithms, vec![Algorithm::Greedy, Algorithm::Enumerate]);
    let tmp = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, tmp.path(), false).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::SizeCap);
    assert!(err.to_string().contains("optimize:enumerate"));
    let manifest: serde_json::Value = serde_json::from_str(&read(tmp.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert_eq!(manifest["failed_stage"], "optimize:enumerate");
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f["name"] == "trace_greedy.csv"));
}

#[test]
fn summary_uses_sample_standard_deviation() {
    let (g, _) = common::toy(1);
    let p = AlliancePartition::all_in_one(g.n_carriers());
    let seeds: Vec<u64> = (100..110).collect();
    let cmp = compare_partitions(&g, &[("one".into(), p)], &common::toy_sampling(0), &seeds, &[0], 0.7, 0.3).unwrap();
    let values: Vec<f64> = cmp.rows.iter().map(|r| r.breakdown.objective).collect();
    assert_eq!(values.len(), 10);
    let mean = values.iter().sum::<f64>() / 10.0;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0;
    let s = cmp.method("one").unwrap();
    assert!((s.objective_mean - mean).abs() < 1e-12);
    assert!((s.objective_std - var.sqrt()).abs() < 1e-12);
    // everything in one alliance: every segment has h = 1
    assert_eq!(s.hhi_std, 0.0);
    assert_eq!(s.hhi_mean, 1.0);
}

#[test]
fn greedy_beats_its_starting_point_out_of_sample() {
    let (g, r) = common::toy(4);
    let t = greedy_partition(&g, &r, 0.7, 0.3).unwrap();
    assert!(t.completed_merges() > 0);
    let named = vec![
        ("singletons".to_string(), AlliancePartition::singletons(g.n_carriers())),
        ("greedy".to_string(), t.partition.clone()),
    ];
    let seeds: Vec<u64> = (9000..9010).collect();
    let cmp = compare_partitions(&g, &named, &common::toy_sampling(0), &seeds, &[r.seed()], 0.7, 0.3).unwrap();
    assert!(cmp.method("greedy").unwrap().objective_mean >= cmp.method("singletons").unwrap().objective_mean);
    let again = Realization::draw(&g, &common::toy_sampling(9000)).unwrap();
    let b0 = evaluate_partition(&g, &t.partition, &again, 0.7, 0.3, &[r.seed()]).unwrap();
    let b1 = evaluate_partition(&g, &t.partition, &again, 0.7, 0.3, &[r.seed()]).unwrap();
    assert_eq!(b0, b1);
}
