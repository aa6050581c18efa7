//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p alliance-core --test acceptance`; pass criterion
//! numbers as arguments to run a subset (`-- 3 7`).

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use alliance_core::experiment::run_experiment;
use alliance_core::generator::{generate_instance, GeneratorSpec};
use alliance_core::metrics::{
    carrier_frequencies, exact_breakdown, hhi_segment_estimate, hhi_segment_exact, mpc_estimate, objective,
};
use alliance_core::optimize::greedy::{agglomerate, GreedyOptions, MergeObjective, StopReason};
use alliance_core::optimize::lp::LpProblem;
use alliance_core::optimize::{
    build_miqp, enumerate_partitions, export_model, greedy_partition, parse_model, pwl_breakpoints, solve_tiny,
    MiqpParams,
};
use alliance_core::sampling::{sample_segments, sample_walk_tensors};
use alliance_core::{AirportId, AlliancePartition, ExperimentConfig, MultiAttributeGraph, Realization, SamplingConfig};
use common::rec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn objective_arithmetic() -> Outcome {
    let toy = objective(0.636, -2.426, 0.7, 0.3).map_err(|e| e.to_string())?;
    ensure((toy.objective - (-0.7 * 0.636 + 0.3 * -2.426)).abs() < 1e-15, || format!("toy objective {}", toy.objective))?;
    ensure((toy.objective - -1.173).abs() <= 5e-4, || format!("toy objective {} vs -1.173", toy.objective))?;
    let iata = objective(0.8073, -8.7856, 0.25, 0.75).map_err(|e| e.to_string())?;
    ensure((iata.objective - -6.791).abs() <= 5e-4, || format!("objective {} vs -6.791", iata.objective))?;
    let zero = objective(0.5, -3.0, 0.0, 0.0).map_err(|e| e.to_string())?;
    ensure(zero.objective == 0.0, || "beta = gamma = 0 should give 0".into())?;
    Ok(format!("{:.4} vs -1.173, {:.4} vs -6.791", toy.objective, iata.objective))
}

// ---------------------------------------------------------------- 2

/// Every merge gains 1; only the merge cap stops it.
struct Stub {
    n: usize,
    merges: usize,
}

impl MergeObjective for Stub {
    fn n_items(&self) -> usize {
        self.n
    }
    fn value(&self) -> f64 {
        self.merges as f64
    }
    fn merge_gain(&self, _: usize, _: usize) -> f64 {
        1.0
    }
    fn standalone(&self, _: usize) -> f64 {
        0.0
    }
    fn merge(&mut self, _: usize, _: usize) {
        self.merges += 1;
    }
}

fn greedy_bookkeeping() -> Outcome {
    let start = Instant::now();
    let mut stub = Stub { n: 580, merges: 0 };
    let opts = GreedyOptions {
        max_merges: Some(365),
        ..GreedyOptions::default()
    };
    let trace = agglomerate(&mut stub, &opts).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(trace.completed_merges() == 365, || format!("{} merges", trace.completed_merges()))?;
    ensure(trace.final_alliances() == 215, || format!("{} alliances", trace.final_alliances()))?;
    ensure(trace.partition.canonical().n_alliances() == 215, || "partition disagrees with trace".into())?;
    ensure(trace.stop == StopReason::MergeCap, || format!("stopped by {:?}", trace.stop))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    for seed in 0..5 {
        let (g, r) = common::toy(seed);
        let t = greedy_partition(&g, &r, 0.7, 0.3).map_err(|e| e.to_string())?;
        ensure(t.final_alliances() == g.n_carriers() - t.completed_merges(), || {
            format!("toy {seed}: bookkeeping off")
        })?;
    }
    Ok(format!("580 - 365 = {} alliances in {elapsed:.2?}", trace.final_alliances()))
}

// ---------------------------------------------------------------- 3

/// Runs one toy family. Returns (recoveries, largest exact gap, seeds whose
/// oracle is a single alliance).
fn oracle_family(asm: (f64, f64)) -> Result<(usize, f64, usize), String> {
    let mut matches = 0;
    let mut worst_gap: f64 = 0.0;
    let mut trivial = 0;
    for seed in 0..20 {
        let mut spec = GeneratorSpec::toy(seed);
        (spec.asm_min, spec.asm_max) = asm;
        let g = generate_instance(&spec).map_err(|e| e.to_string())?.graph;
        let n = g.n_carriers();
        let r = Realization::draw(&g, &common::toy_sampling(10_000 + seed)).map_err(|e| e.to_string())?;
        let oracle = enumerate_partitions(&g, 2, 0.7, 0.3, 10).map_err(|e| e.to_string())?;
        let best = oracle.best_breakdown.objective;
        if oracle.best.canonical().n_alliances() == 1 {
            trivial += 1;
        }

        let greedy = greedy_partition(&g, &r, 0.7, 0.3).map_err(|e| e.to_string())?;
        let greedy_exact = exact_breakdown(&g, &greedy.partition, 2, 0.7, 0.3).map_err(|e| e.to_string())?.objective;

        let params = MiqpParams {
            beta: 0.7,
            gamma: 0.3,
            n_alliances: n,
            epsilon: 1e-6,
            n_intervals: 540,
        };
        let model = build_miqp(&g, &r, &params).map_err(|e| e.to_string())?;
        let tiny = solve_tiny(&model, n.max(8), n).map_err(|e| e.to_string())?;
        let tiny_exact = exact_breakdown(&g, &tiny.partition(), 2, 0.7, 0.3).map_err(|e| e.to_string())?.objective;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let random = AlliancePartition::from_assignment(labels, n).map_err(|e| e.to_string())?;
        let random_exact = exact_breakdown(&g, &random, 2, 0.7, 0.3).map_err(|e| e.to_string())?.objective;

        ensure(best >= greedy_exact - 1e-12, || format!("toy {seed}: greedy {greedy_exact} above oracle {best}"))?;
        ensure(best >= tiny_exact - 1e-12, || format!("toy {seed}: tiny {tiny_exact} above oracle {best}"))?;
        ensure(best >= random_exact - 1e-12, || format!("toy {seed}: random {random_exact} above oracle {best}"))?;
        worst_gap = worst_gap.max(best - greedy_exact);
        if greedy.partition.same_blocks(&oracle.best) {
            matches += 1;
        }
    }
    Ok((matches, worst_gap, trivial))
}

fn oracle_dominance() -> Outcome {
    // ASM in [1, 10]: the oracle splits the carriers, as in the published toy.
    let (matches, gap, trivial) = oracle_family((1.0, 10.0))?;
    ensure(trivial < 20, || "every oracle is a single alliance".into())?;
    ensure(matches >= 1, || "greedy never recovered the oracle partition".into())?;
    // Default ASM range: wide weights make the grand alliance optimal.
    let (d_matches, d_gap, d_trivial) = oracle_family((1e3, 1e7))?;
    Ok(format!(
        "ASM 1-10: recovered {matches}/20, largest gap {gap:.4}, {} split oracles; \
         ASM 1e3-1e7: recovered {d_matches}/20, largest gap {d_gap:.4}, {d_trivial} grand-alliance oracles",
        20 - trivial
    ))
}

// ---------------------------------------------------------------- 4

fn estimator_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut records = Vec::new();
    let mut pairs = Vec::new();
    while pairs.len() < 50 {
        let (o, d) = (rng.gen_range(0..10), rng.gen_range(0..10));
        if o == d || pairs.contains(&(o, d)) {
            continue;
        }
        pairs.push((o, d));
        let n_carriers = rng.gen_range(2..=5);
        for _ in 0..n_carriers {
            let c = rng.gen_range(0..8);
            let w = 10f64.powf(rng.gen_range(3.0..7.0));
            records.push(rec(&format!("P{o}"), &format!("P{d}"), &format!("k{c}"), w));
        }
    }
    let g = MultiAttributeGraph::build(&records).map_err(|e| e.to_string())?;
    let labels: Vec<usize> = (0..g.n_carriers()).map(|_| rng.gen_range(0..3)).collect();
    let p = AlliancePartition::from_assignment(labels, 3).map_err(|e| e.to_string())?;
    let exact: Vec<f64> = g
        .segments()
        .iter()
        .map(|s| hhi_segment_exact(&g, &p, s.origin, s.destination).unwrap())
        .collect();

    let seeds = 20u64;
    let mut means = Vec::new();
    let mut within = 0;
    for n in [100, 1_000, 10_000] {
        let mut total = 0.0;
        for seed in 0..seeds {
            let set = sample_segments(&g, &SamplingConfig::new(1, 1, n, seed)).map_err(|e| e.to_string())?;
            for (i, h) in exact.iter().enumerate() {
                let err = (hhi_segment_estimate(set.segment(i), &p).unwrap() - h).abs();
                total += err;
                if n == 10_000 && err <= 0.02 {
                    within += 1;
                }
            }
        }
        means.push(total / (seeds as usize * exact.len()) as f64);
    }
    ensure(means[0] > means[1] && means[1] > means[2], || format!("mean errors {means:?}"))?;
    let frac = within as f64 / (seeds as usize * exact.len()) as f64;
    ensure(frac >= 0.95, || format!("only {:.1}% within 0.02 at 10^4", 100.0 * frac))?;
    Ok(format!(
        "mean |error| {:.4} > {:.4} > {:.4}; {:.1}% within 0.02 at 10^4",
        means[0],
        means[1],
        means[2],
        100.0 * frac
    ))
}

// ---------------------------------------------------------------- 5

/// Exact first and second moments of a walk's per-step carrier and
/// alliance frequencies, by enumerating every walk outcome.
struct Moments {
    mean: HashMap<(char, usize, usize), f64>,
    square: HashMap<(char, usize, usize), f64>,
}

fn enumerate_walks(g: &MultiAttributeGraph, labels: &[usize], walk_length: usize) -> Moments {
    let mut m = Moments {
        mean: HashMap::new(),
        square: HashMap::new(),
    };
    let n_carriers = g.n_carriers();
    let n_alliances = labels.iter().max().unwrap() + 1;
    fn walk(
        g: &MultiAttributeGraph,
        at: AirportId,
        prob: f64,
        counts: &mut Vec<usize>,
        steps: usize,
        left: usize,
        out: &mut Vec<(f64, Vec<usize>, usize)>,
    ) {
        let segs = g.out_segments(at);
        if left == 0 || segs.is_empty() {
            out.push((prob, counts.clone(), steps));
            return;
        }
        let total: f64 = segs.iter().map(|s| s.total).sum();
        for s in segs {
            for (c, w) in s.carriers.iter().zip(&s.weights) {
                counts[c.index()] += 1;
                walk(g, s.destination, prob * (s.total / total) * (w / s.total), counts, steps + 1, left - 1, out);
                counts[c.index()] -= 1;
            }
        }
    }
    for &root in g.walk_roots() {
        let mut outcomes = Vec::new();
        walk(g, root, 1.0, &mut vec![0; n_carriers], 0, walk_length, &mut outcomes);
        for (prob, counts, steps) in outcomes {
            let mut add = |key: (char, usize, usize), x: f64| {
                *m.mean.entry(key).or_default() += prob * x;
                *m.square.entry(key).or_default() += prob * x * x;
            };
            for c in 0..n_carriers {
                add(('c', c, root.index()), counts[c] as f64 / steps as f64);
            }
            for k in 0..n_alliances {
                let in_k: usize = (0..n_carriers).filter(|&c| labels[c] == k).map(|c| counts[c]).sum();
                add(('a', k, root.index()), in_k as f64 / steps as f64);
            }
        }
    }
    m
}

fn random_triangle(rng: &mut ChaCha8Rng) -> MultiAttributeGraph {
    let names = ["X", "Y", "Z"];
    loop {
        let mut records = Vec::new();
        for o in 0..3 {
            for d in 0..3 {
                if o == d || rng.gen_bool(0.25) {
                    continue;
                }
                for c in ["c0", "c1"] {
                    if rng.gen_bool(0.7) {
                        records.push(rec(names[o], names[d], c, rng.gen_range(1.0..10.0)));
                    }
                }
            }
        }
        if let Ok(g) = MultiAttributeGraph::build(&records) {
            if g.n_carriers() == 2 && g.n_airports() == 3 {
                return g;
            }
        }
    }
}

fn mpc_vs_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let n_walks = 100_000;
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for gi in 0..3 {
        let g = random_triangle(&mut rng);
        let t = sample_walk_tensors(&g, &SamplingConfig::new(n_walks, 2, 1, 900 + gi)).map_err(|e| e.to_string())?;
        let freq = carrier_frequencies(&t, 2);
        for labels in [vec![0, 1], vec![0, 0]] {
            let p = AlliancePartition::from_assignment(labels.clone(), 2).unwrap();
            let est = mpc_estimate(&t, &p).map_err(|e| e.to_string())?;
            let oracle = enumerate_walks(&g, &labels, 2);
            let n_roots = t.n_roots();
            for (i, root) in t.roots().iter().enumerate() {
                let mut check = |key: (char, usize, usize), value: f64| -> Result<(), String> {
                    let mean = oracle.mean.get(&key).copied().unwrap_or(0.0);
                    let var = (oracle.square.get(&key).copied().unwrap_or(0.0) - mean * mean).max(0.0);
                    let se = (var / n_walks as f64).sqrt();
                    cells += 1;
                    if se < 1e-12 {
                        // deterministic cell; only summation error remains
                        return ensure((value - mean).abs() < 1e-9, || format!("graph {gi} cell {key:?}: {value} vs {mean}"));
                    }
                    let z = (value - mean).abs() / se;
                    worst = worst.max(z);
                    ensure(z <= 3.0, || format!("graph {gi} cell {key:?}: {value} vs {mean}, {z:.2} SE"))
                };
                for c in 0..2 {
                    check(('c', c, root.index()), freq[c * n_roots + i])?;
                }
                for k in 0..2 {
                    check(('a', k, root.index()), est.p_alliance(k, i))?;
                }
            }
        }
    }
    Ok(format!("{cells} cells, largest deviation {worst:.2} SE"))
}

// ---------------------------------------------------------------- 6

fn pwl_fidelity() -> Outcome {
    let eps = 1e-6;
    let curve = pwl_breakpoints(eps, 540).map_err(|e| e.to_string())?;
    let last = curve.len() - 1;
    ensure(curve.breakpoints[0] == eps && curve.breakpoints[last] == 1.0, || "endpoints moved".into())?;
    ensure(curve.values[last] == 0.0, || "V_last != 0".into())?;
    for (i, v) in curve.breakpoints.iter().zip(&curve.values) {
        ensure(*v == i.ln(), || format!("V != log I at {i}"))?;
    }

    // the exported lambda encoding, read back from its text form
    let g = MultiAttributeGraph::build(&[rec("A", "B", "x", 2.0), rec("A", "B", "y", 1.0), rec("B", "A", "y", 3.0)])
        .map_err(|e| e.to_string())?;
    let r = Realization::draw(&g, &SamplingConfig::new(5, 2, 5, 1)).map_err(|e| e.to_string())?;
    let params = MiqpParams {
        beta: 0.7,
        gamma: 0.3,
        n_alliances: 2,
        epsilon: eps,
        n_intervals: 540,
    };
    let model = build_miqp(&g, &r, &params).map_err(|e| e.to_string())?;
    let lp = LpProblem::parse(&export_model(&model, "lp").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let rows = ["pwlz_0", "pwly_0", "pwll_0", "pwld_0"].map(|n| lp.row(n).expect("pwl rows").clone());
    for m in 0..curve.len() {
        let point: HashMap<String, f64> = [
            (format!("l_0_{m}"), 1.0),
            (format!("d_0_{}", m.min(last - 1)), 1.0),
            ("z_0".to_string(), curve.breakpoints[m]),
            ("y_0".to_string(), curve.eval(curve.breakpoints[m])),
        ]
        .into_iter()
        .collect();
        for row in &rows {
            ensure(row.expr.value(&point) == row.rhs, || format!("{} off at breakpoint {m}", row.name))?;
        }
    }

    // dense grid, then repeated zoom around the worst point
    let err = |z: f64| z.ln() - curve.eval(z);
    let mut best = (f64::NEG_INFINITY, eps);
    for w in curve.breakpoints.windows(2) {
        for j in 0..=200 {
            let z = w[0] + (w[1] - w[0]) * j as f64 / 200.0;
            let e = err(z);
            if e > best.0 {
                best = (e, z);
            }
        }
    }
    let mut half = (curve.breakpoints[1] - curve.breakpoints[0]) / 100.0;
    for _ in 0..60 {
        let (lo, hi) = ((best.1 - half).max(eps), (best.1 + half).min(1.0));
        for j in 0..=1000 {
            let z = lo + (hi - lo) * j as f64 / 1000.0;
            let e = err(z);
            if e > best.0 {
                best = (e, z);
            }
        }
        half /= 50.0;
        if half < 1e-18 {
            break;
        }
    }
    let (analytic, at) = curve.max_chord_error();
    ensure((best.0 - analytic).abs() <= 1e-9, || format!("grid {} vs analytic {analytic}", best.0))?;
    ensure(at <= curve.breakpoints[1], || format!("maximum at {at}, outside the first interval"))?;
    ensure(best.0 >= 0.0, || "negative maximum".into())?;
    Ok(format!(
        "max error {analytic:.9} at z = {at:.3e}; grid {:.9} (diff {:.1e})",
        best.0,
        (best.0 - analytic).abs()
    ))
}

// ---------------------------------------------------------------- 7

fn model_structure() -> Outcome {
    let mut checked = Vec::new();
    let cases: [(usize, usize, usize, usize); 6] = [
        (6, 60, 2, 1),
        (6, 60, 2, 2),
        (10, 300, 6, 3),
        (10, 300, 6, 6),
        (30, 2000, 20, 5),
        (600, 20_000, 580, 30),
    ];
    for (airports, records, carriers, k) in cases {
        let g = generate_instance(&GeneratorSpec::new(airports, records, carriers, 77)).map_err(|e| e.to_string())?.graph;
        let n = g.n_carriers();
        let k = k.min(n);
        let r = Realization::draw(&g, &SamplingConfig::new(5, 3, 5, 3)).map_err(|e| e.to_string())?;
        let params = MiqpParams {
            beta: 0.25,
            gamma: 0.75,
            n_alliances: k,
            epsilon: 1e-6,
            n_intervals: 540,
        };
        let model = build_miqp(&g, &r, &params).map_err(|e| e.to_string())?;
        let s = model.stats();
        ensure(s.assignment_binaries == n * k, || format!("({n}, {k}): {} binaries", s.assignment_binaries))?;
        ensure(s.assignment_rows == n, || format!("({n}, {k}): {} assignment rows", s.assignment_rows))?;
        let json = export_model(&model, "json").map_err(|e| e.to_string())?;
        let again = export_model(&parse_model(&json, "json").map_err(|e| e.to_string())?, "json").map_err(|e| e.to_string())?;
        ensure(json == again, || format!("({n}, {k}): JSON round trip differs"))?;
        if n == 580 {
            // published statistics for the full-size run: 1,080 binaries, 579 constraints
            ensure(s.assignment_binaries != 1080 && s.assignment_rows != 579, || {
                "counts unexpectedly match the published table".into()
            })?;
            checked.push(format!(
                "(580, 30) -> {} binaries, {} rows [known difference from published 1080 / 579]",
                s.assignment_binaries, s.assignment_rows
            ));
        } else {
            checked.push(format!("({n}, {k})"));
        }
    }
    Ok(checked.join(", "))
}

// ---------------------------------------------------------------- 8

fn hhi_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let graphs: Vec<MultiAttributeGraph> = (0..4).map(common::toy_graph).collect();
    let mut checked = 0;
    while checked < 1000 {
        let g = &graphs[rng.gen_range(0..graphs.len())];
        let n = g.n_carriers();
        let k = rng.gen_range(2..=n);
        let p = AlliancePartition::from_assignment((0..n).map(|_| rng.gen_range(0..k)).collect(), k).unwrap();
        let (a, b) = (rng.gen_range(0..k), rng.gen_range(0..k));
        if a == b {
            continue;
        }
        let s = &g.segments()[rng.gen_range(0..g.n_segments())];
        let before = hhi_segment_exact(g, &p, s.origin, s.destination).unwrap();
        let after = hhi_segment_exact(g, &p.merged(a, b).unwrap(), s.origin, s.destination).unwrap();
        ensure(after >= before - 1e-12, || format!("merge lowered h: {before} -> {after}"))?;
        checked += 1;
    }
    let mut segments = 0;
    for g in &graphs {
        let one = AlliancePartition::all_in_one(g.n_carriers());
        for s in g.segments() {
            let h = hhi_segment_exact(g, &one, s.origin, s.destination).unwrap();
            ensure(h == 1.0, || format!("all-in-one gives h = {h}"))?;
            segments += 1;
        }
    }
    Ok(format!("{checked} merges, {segments} all-in-one segments"))
}

// ---------------------------------------------------------------- 9

const TOY_CONFIG: &str = r#"
beta = 0.7
gamma = 0.3
algorithms = ["greedy", "greedy-sampled", "enumerate", "miqp-tiny"]

[generator]
n_airports = 20
n_segment_records = 2000
n_carriers = 6
seed = 9

[sampling]
n_walks = 50
walk_length = 2
n_segment_samples = 50
seed = 99

[evaluation]
n_realizations = 10
"#;

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::from_toml(TOY_CONFIG).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |threads: usize, dir: &str| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&cfg, &tmp.path().join(dir), false))
    };
    let a = run(1, "one").map_err(|e| e.to_string())?;
    let b = run(4, "four").map_err(|e| e.to_string())?;
    ensure(a.graph_hash == b.graph_hash, || "graph hashes differ".into())?;
    ensure(a.manifest.files == b.manifest.files, || "bundle files differ".into())?;
    ensure(a.comparison == b.comparison, || "breakdowns differ".into())?;
    let traces = |r: &alliance_core::experiment::ExperimentReport| {
        r.outputs.iter().filter_map(|o| o.trace.clone()).collect::<Vec<_>>()
    };
    ensure(traces(&a) == traces(&b), || "traces differ".into())?;
    let tensors = |dir: &str| std::fs::read(tmp.path().join(dir).join("realization.bin")).unwrap();
    ensure(tensors("one") == tensors("four"), || "tensors differ".into())?;
    Ok(format!("1 vs 4 threads: {} identical files", a.manifest.files.len()))
}

// ---------------------------------------------------------------- 10

fn scale() -> Outcome {
    let start = Instant::now();
    let inst = generate_instance(&GeneratorSpec::iata_scale(2024)).map_err(|e| e.to_string())?;
    let g = inst.graph;
    let generated = start.elapsed();
    ensure(g.n_airports() == 3680 && inst.records.len() == 160_732, || "instance size".into())?;
    let t0 = Instant::now();
    let r = Realization::draw(&g, &SamplingConfig::new(20, 3, 100, 7)).map_err(|e| e.to_string())?;
    let sampled = t0.elapsed();
    let t1 = Instant::now();
    let trace = greedy_partition(&g, &r, 0.25, 0.75).map_err(|e| e.to_string())?;
    let greedy = t1.elapsed();
    let total = sampled + greedy;
    ensure(total < Duration::from_secs(30 * 60), || format!("sampling + greedy took {total:?}"))?;
    Ok(format!(
        "{} carriers, {} segments; generate {generated:.1?}, sample {sampled:.1?}, greedy {greedy:.1?} ({} merges -> {} alliances) on {} thread(s)",
        g.n_carriers(),
        g.n_segments(),
        trace.completed_merges(),
        trace.final_alliances(),
        rayon::current_num_threads()
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "objective arithmetic", objective_arithmetic),
        (2, "greedy bookkeeping", greedy_bookkeeping),
        (3, "oracle dominance", oracle_dominance),
        (4, "HHI estimator convergence", estimator_convergence),
        (5, "MPC estimator vs enumeration", mpc_vs_enumeration),
        (6, "PWL fidelity", pwl_fidelity),
        (7, "model structure", model_structure),
        (8, "HHI merge monotonicity", hhi_monotonicity),
        (9, "determinism across thread counts", determinism),
        (10, "IATA-scale runtime", scale),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS [{secs:7.2}s] {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("criterion {n:>2} FAIL [{secs:7.2}s] {name}: {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
