//! End-to-end runs: load or generate, sample, optimize, evaluate, report.
//!
//! A run writes a bundle directory. File contents depend only on the config
//! and the data; nothing time dependent is recorded.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cache::load_or_sample;
use crate::compare::{compare_partitions, Comparison};
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::files::{self, render_table, sig6, write_json, write_text, Provenance};
use crate::generator::{generate_instance, synthetic_baseline};
use crate::graph::{symmetrize, CarrierId, GraphSummary, MultiAttributeGraph};
use crate::metrics::{hhi_estimate_all, mpc_estimate, ObjectiveBreakdown};
use crate::optimize::enumerate::{enumerate_partitions, EnumerationResult};
use crate::optimize::export::export_model;
use crate::optimize::greedy::{greedy_pair_sampling, greedy_partition, GreedyTrace};
use crate::optimize::miqp::{build_miqp, MiqpModel, MiqpParams};
use crate::optimize::tiny::{solve_tiny, TinySolution};
use crate::partition::AlliancePartition;
use crate::sampling::Realization;

pub const CACHE_FILE: &str = "realization.bin";

/// A loaded or generated network with its reference partition.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: MultiAttributeGraph,
    pub baseline_name: String,
    pub baseline: AlliancePartition,
    /// Set for generated instances.
    pub generated_records: Option<Vec<crate::graph::ScheduleRecord>>,
}

pub fn load_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    if let Some(input) = &cfg.input {
        let mut records = files::read_schedule(&input.schedule)?;
        if input.symmetrize {
            records = symmetrize(&records);
        }
        let graph = MultiAttributeGraph::build(&records)?;
        let (baseline_name, baseline) = match &input.alliances {
            Some(path) => ("existing".to_string(), files::read_partition(path, &graph)?),
            None => ("singletons".to_string(), AlliancePartition::singletons(graph.n_carriers())),
        };
        return Ok(Instance {
            graph,
            baseline_name,
            baseline,
            generated_records: None,
        });
    }
    let spec = cfg
        .generator
        .as_ref()
        .ok_or_else(|| Error::Config("no input or generator".into()))?;
    let inst = generate_instance(spec)?;
    let baseline = synthetic_baseline(inst.graph.n_carriers(), cfg.baseline_groups, spec.seed)?;
    Ok(Instance {
        graph: inst.graph,
        baseline_name: "synthetic-baseline".into(),
        baseline,
        generated_records: Some(inst.records),
    })
}

/// Output of one optimization algorithm.
#[derive(Clone, Debug, Default)]
pub struct AlgorithmOutput {
    pub name: String,
    pub partition: Option<AlliancePartition>,
    pub trace: Option<GreedyTrace>,
    pub enumeration: Option<EnumerationResult>,
    pub model: Option<MiqpModel>,
    pub tiny: Option<TinySolution>,
}

fn miqp_params(cfg: &ExperimentConfig) -> MiqpParams {
    MiqpParams {
        beta: cfg.beta,
        gamma: cfg.gamma,
        n_alliances: cfg.n_alliances,
        epsilon: cfg.epsilon,
        n_intervals: cfg.n_intervals,
    }
}

pub fn run_algorithm(
    cfg: &ExperimentConfig,
    g: &MultiAttributeGraph,
    realization: &Realization,
    algorithm: Algorithm,
) -> Result<AlgorithmOutput> {
    let mut out = AlgorithmOutput {
        name: algorithm.name().to_string(),
        ..AlgorithmOutput::default()
    };
    match algorithm {
        Algorithm::Greedy | Algorithm::GreedySampled => {
            let trace = if algorithm == Algorithm::Greedy {
                greedy_partition(g, realization, cfg.beta, cfg.gamma)?
            } else {
                greedy_pair_sampling(g, realization, cfg.beta, cfg.gamma, cfg.n_candidates, cfg.pair_sampling_seed())?
            };
            out.partition = Some(trace.partition.clone());
            out.trace = Some(trace);
        }
        Algorithm::Enumerate => {
            let res = enumerate_partitions(
                g,
                cfg.sampling.walk_length,
                cfg.beta,
                cfg.gamma,
                cfg.limits.enumerate_max_carriers,
            )?;
            out.partition = Some(res.best.clone());
            out.enumeration = Some(res);
        }
        Algorithm::MiqpBuild => {
            out.model = Some(build_miqp(g, realization, &miqp_params(cfg))?);
        }
        Algorithm::MiqpTiny => {
            let model = build_miqp(g, realization, &miqp_params(cfg))?;
            let sol = solve_tiny(&model, cfg.limits.tiny_max_carriers, cfg.limits.tiny_max_alliances)?;
            out.partition = Some(sol.partition());
            out.tiny = Some(sol);
            out.model = Some(model);
        }
    }
    Ok(out)
}

pub fn trace_csv(trace: &GreedyTrace, provenance: &Provenance) -> Result<String> {
    let first = vec![
        "0".to_string(),
        String::new(),
        String::new(),
        sig6(trace.initial_objective),
        trace.initial_alliances.to_string(),
    ];
    render_table(
        provenance,
        &[format!("stop={:?}", trace.stop)],
        &["iteration", "p", "q", "objective", "K"],
        std::iter::once(first).chain(trace.steps.iter().map(|s| {
            vec![
                s.iteration.to_string(),
                s.p.to_string(),
                s.q.to_string(),
                sig6(s.objective),
                s.alliances.to_string(),
            ]
        })),
    )
}

pub fn landscape_csv(res: &EnumerationResult, provenance: &Provenance) -> Result<String> {
    render_table(
        provenance,
        &[format!("best_partition_id={}", res.best_id)],
        &["partition_id", "hhi_mean", "mpc_term", "objective"],
        res.landscape.iter().map(|p| {
            vec![
                p.partition_id.to_string(),
                sig6(p.breakdown.hhi_mean),
                sig6(p.breakdown.mpc_term),
                sig6(p.breakdown.objective),
            ]
        }),
    )
}

pub fn hhi_csv(g: &MultiAttributeGraph, hhi: &[f64], provenance: &Provenance) -> Result<String> {
    render_table(
        provenance,
        &[],
        &["origin", "destination", "hhi"],
        g.segments().iter().zip(hhi).map(|(s, h)| {
            vec![
                g.airport_name(s.origin).to_string(),
                g.airport_name(s.destination).to_string(),
                sig6(*h),
            ]
        }),
    )
}

pub fn mpc_csv(g: &MultiAttributeGraph, mpc_log: &[f64], provenance: &Provenance) -> Result<String> {
    render_table(
        provenance,
        &[],
        &["carrier", "mpc_log"],
        mpc_log
            .iter()
            .enumerate()
            .map(|(c, w)| vec![g.carrier_name(CarrierId(c as u32)).to_string(), sig6(*w)]),
    )
}

/// Breakdown dump for one (method, realization).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakdownRecord {
    pub method: String,
    pub realization: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub breakdown: ObjectiveBreakdown,
}

/// Per-segment HHI, per-carrier log MPC and the breakdown of `p` on `r`.
pub fn write_metric_dumps(
    dir: &Path,
    g: &MultiAttributeGraph,
    method: &str,
    p: &AlliancePartition,
    r: &Realization,
    realization: usize,
    beta: f64,
    gamma: f64,
    provenance: &Provenance,
) -> Result<Vec<PathBuf>> {
    let hhi = hhi_estimate_all(g, &r.segments, p)?;
    let mpc = mpc_estimate(&r.tensors, p)?;
    let breakdown = crate::metrics::objective(crate::metrics::mean(&hhi), mpc.mpc_term(), beta, gamma)?;
    let paths = [
        dir.join(format!("hhi_{method}.csv")),
        dir.join(format!("mpc_{method}.csv")),
        dir.join(format!("breakdown_{method}.json")),
    ];
    write_text(&paths[0], &hhi_csv(g, &hhi, provenance)?)?;
    write_text(&paths[1], &mpc_csv(g, &mpc.w_carrier, provenance)?)?;
    write_json(
        &paths[2],
        &BreakdownRecord {
            method: method.to_string(),
            realization,
            seed: r.seed(),
            breakdown,
        },
    )?;
    Ok(paths.to_vec())
}

/// Writes the per-algorithm artifacts into `dir`.
pub fn write_algorithm_output(
    dir: &Path,
    g: &MultiAttributeGraph,
    out: &AlgorithmOutput,
    model_formats: &[String],
    provenance: &Provenance,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    if let Some(p) = &out.partition {
        put(format!("partition_{}.csv", out.name), files::render_partition(g, p, provenance)?)?;
    }
    if let Some(t) = &out.trace {
        put(format!("trace_{}.csv", out.name), trace_csv(t, provenance)?)?;
    }
    if let Some(e) = &out.enumeration {
        put("landscape.csv".into(), landscape_csv(e, provenance)?)?;
    }
    if let Some(m) = &out.model {
        for f in model_formats {
            put(format!("model_{}.{f}", out.name), export_model(m, f)?)?;
        }
    }
    if let Some(s) = &out.tiny {
        #[derive(Serialize)]
        struct TinyRecord<'a> {
            labels: &'a [usize],
            model_objective: f64,
            reported_objective: f64,
            explored: usize,
        }
        let rec = TinyRecord {
            labels: &s.labels,
            model_objective: s.objective(),
            reported_objective: s.evaluation.reported_objective(),
            explored: s.explored,
        };
        put(format!("solution_{}.json", out.name), serde_json::to_string_pretty(&rec)? + "\n")?;
    }
    Ok(written)
}

/// Scores named partitions on the config's evaluation seeds. Writes
/// `evaluations.csv` plus metric dumps from the first evaluation realization.
pub fn evaluate_named(
    out_dir: &Path,
    cfg: &ExperimentConfig,
    g: &MultiAttributeGraph,
    named: &[(String, AlliancePartition)],
    prov: &Provenance,
) -> Result<(Comparison, Vec<PathBuf>)> {
    let opt_seeds = cfg.optimization_seeds();
    let eval_seeds = cfg.evaluation_seeds();
    let cmp = compare_partitions(g, named, &cfg.sampling, &eval_seeds, &opt_seeds, cfg.beta, cfg.gamma)?;
    let path = out_dir.join("evaluations.csv");
    write_text(&path, &cmp.rows_csv(&prov.clone().with_seeds(&eval_seeds))?)?;
    let mut written = vec![path];
    let first = Realization::draw(g, &cfg.sampling.with_seed(eval_seeds[0]))?;
    let dump_prov = prov.clone().with_seeds(&eval_seeds[..1]);
    for (name, p) in named {
        written.extend(write_metric_dumps(
            out_dir, g, name, p, &first, 0, cfg.beta, cfg.gamma, &dump_prov,
        )?);
    }
    Ok((cmp, written))
}

/// `comparison.csv` and `summary.json`.
pub fn write_report(out_dir: &Path, comparison: &Comparison, prov: &Provenance) -> Result<Vec<PathBuf>> {
    let prov = prov.clone().with_seeds(&comparison.evaluation_seeds);
    let csv = out_dir.join("comparison.csv");
    write_text(&csv, &comparison.summary_csv(&prov)?)?;
    let json = out_dir.join("summary.json");
    write_json(&json, comparison)?;
    Ok(vec![csv, json])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub graph_hash: Option<String>,
    pub optimization_seeds: Vec<u64>,
    pub evaluation_seeds: Vec<u64>,
    pub status: String,
    pub completed_stages: Vec<String>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub graph_summary: GraphSummary,
    pub graph_hash: String,
    pub config_hash: String,
    pub realization_reused: bool,
    pub outputs: Vec<AlgorithmOutput>,
    pub comparison: Comparison,
    pub manifest: Manifest,
}

fn file_entry(dir: &Path, path: &Path) -> Result<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path.strip_prefix(dir).unwrap_or(path).to_string_lossy().replace('\\', "/");
    Ok(FileEntry {
        name,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

struct Run<'a> {
    dir: &'a Path,
    manifest: Manifest,
    written: Vec<PathBuf>,
}

impl Run<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Vec<PathBuf>) -> Result<T>) -> Result<T> {
        match f(&mut self.written) {
            Ok(v) => {
                self.manifest.completed_stages.push(name.to_string());
                Ok(v)
            }
            Err(e) => {
                self.manifest.status = "failed".into();
                self.manifest.failed_stage = Some(name.to_string());
                self.manifest.error = Some(e.to_string());
                let _ = self.finish();
                Err(e.in_stage(name))
            }
        }
    }

    fn finish(&mut self) -> Result<()> {
        let mut entries = self
            .written
            .iter()
            .map(|p| file_entry(self.dir, p))
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        entries.dedup();
        self.manifest.files = entries;
        write_json(&self.dir.join("manifest.json"), &self.manifest)
    }
}

/// Runs the full protocol and writes the bundle into `out_dir`. A cached
/// realization in the bundle is reused when it matches, unless
/// `force_resample` is set.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, force_resample: bool) -> Result<ExperimentReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config_hash = cfg.hash();
    let opt_seeds = cfg.optimization_seeds();
    let eval_seeds = cfg.evaluation_seeds();
    let mut run = Run {
        dir: out_dir,
        manifest: Manifest {
            name: cfg.label().to_string(),
            config_hash: config_hash.clone(),
            graph_hash: None,
            optimization_seeds: opt_seeds.clone(),
            evaluation_seeds: eval_seeds.clone(),
            status: "ok".into(),
            completed_stages: Vec::new(),
            failed_stage: None,
            error: None,
            files: Vec::new(),
        },
        written: Vec::new(),
    };

    let instance = run.stage("load", |written| {
        let inst = load_instance(cfg)?;
        let path = out_dir.join("graph_summary.json");
        write_json(&path, &inst.graph.summary())?;
        written.push(path);
        Ok(inst)
    })?;
    let g = &instance.graph;
    let graph_hash = g.content_hash();
    run.manifest.graph_hash = Some(graph_hash.clone());
    let prov = Provenance::new(graph_hash.clone()).with_config(config_hash.clone());

    run.stage("load", |written| {
        if let Some(records) = &instance.generated_records {
            let path = out_dir.join("schedule.csv");
            write_text(&path, &files::render_schedule(records, &prov)?)?;
            written.push(path);
        }
        let path = out_dir.join(format!("partition_{}.csv", instance.baseline_name));
        write_text(&path, &files::render_partition(g, &instance.baseline, &prov)?)?;
        written.push(path);
        Ok(())
    })?;

    let (realization, regenerated) = run.stage("sample", |written| {
        let path = out_dir.join(CACHE_FILE);
        let r = load_or_sample(&path, g, &cfg.sampling, force_resample)?;
        written.push(path);
        Ok(r)
    })?;

    let opt_prov = prov.clone().with_seeds(&opt_seeds);
    let mut outputs = Vec::new();
    for &alg in &cfg.algorithms {
        let out = run.stage(&format!("optimize:{}", alg.name()), |written| {
            let out = run_algorithm(cfg, g, &realization, alg)?;
            written.extend(write_algorithm_output(out_dir, g, &out, &cfg.model_formats, &opt_prov)?);
            Ok(out)
        })?;
        outputs.push(out);
    }
    drop(realization);

    let mut named = vec![(instance.baseline_name.clone(), instance.baseline.clone())];
    named.extend(
        outputs
            .iter()
            .filter_map(|o| o.partition.clone().map(|p| (o.name.clone(), p))),
    );
    let comparison = run.stage("evaluate", |written| {
        let (cmp, paths) = evaluate_named(out_dir, cfg, g, &named, &prov)?;
        written.extend(paths);
        Ok(cmp)
    })?;

    run.stage("report", |written| {
        written.extend(write_report(out_dir, &comparison, &prov)?);
        Ok(())
    })?;
    run.finish()?;

    Ok(ExperimentReport {
        out_dir: out_dir.to_path_buf(),
        graph_summary: g.summary(),
        graph_hash,
        config_hash,
        realization_reused: !regenerated,
        outputs,
        comparison,
        manifest: run.manifest,
    })
}

