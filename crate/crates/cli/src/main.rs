//! `alliance` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 size cap.
//! `ALLIANCE_THREADS` sets the worker thread count.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use alliance_core::cache::load_or_sample;
use alliance_core::config::Algorithm;
use alliance_core::experiment::{
    evaluate_named, load_instance, run_algorithm, run_experiment, write_algorithm_output, write_report, Instance,
    CACHE_FILE,
};
use alliance_core::files::{self, write_json, write_text, Provenance};
use alliance_core::optimize::{build_miqp, export_model, MiqpParams};
use alliance_core::{AlliancePartition, Error, ErrorKind, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "alliance", version, about = "Airline alliance partitioning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the sampling seed (the generator seed for `generate`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic schedule from the config's generator section.
    Generate(Common),
    /// Draw (or reuse) the sampling realization.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Resample even if a matching cache exists.
        #[arg(long)]
        force: bool,
    },
    /// Run the configured algorithms on the cached realization.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Replaces the config's algorithm list.
        #[arg(long = "algorithm")]
        algorithms: Vec<Algorithm>,
    },
    /// Score partitions on fresh evaluation realizations.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// `name=path` partition files; defaults to every partition_*.csv in the output directory.
        #[arg(long = "partition")]
        partitions: Vec<String>,
    },
    /// Like `evaluate`, plus the per-method mean and standard deviation table.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long = "partition")]
        partitions: Vec<String>,
    },
    /// Build the mixed-integer model and write it out.
    ExportModel {
        #[command(flatten)]
        common: Common,
        /// `json` or `lp`; repeatable. Defaults to the config's `model_formats`.
        #[arg(long = "format")]
        formats: Vec<String>,
    },
    /// Full pipeline: load, sample, optimize, evaluate, report.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        force: bool,
    },
}

struct Context {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Common {
    fn context(&self, generator_seed: bool) -> Result<Context> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            match (&mut cfg.generator, generator_seed) {
                (Some(spec), true) => spec.seed = seed,
                (None, true) => return Err(Error::Config("config has no [generator] section".into())),
                (_, false) => cfg.sampling.seed = seed,
            }
            cfg.validate()?;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Context { cfg, out })
    }
}

fn provenance(ctx: &Context, inst: &Instance) -> Provenance {
    Provenance::new(inst.graph.content_hash()).with_config(ctx.cfg.hash())
}

fn baseline_path(out: &Path, inst: &Instance) -> PathBuf {
    out.join(format!("partition_{}.csv", inst.baseline_name))
}

fn generate(ctx: &Context) -> Result<()> {
    if ctx.cfg.generator.is_none() {
        return Err(Error::Config("config has no [generator] section".into()));
    }
    let inst = load_instance(&ctx.cfg)?;
    let prov = provenance(ctx, &inst);
    let records = inst.generated_records.as_deref().unwrap_or_default();
    write_text(&ctx.out.join("schedule.csv"), &files::render_schedule(records, &prov)?)?;
    write_json(&ctx.out.join("graph_summary.json"), &inst.graph.summary())?;
    write_text(&baseline_path(&ctx.out, &inst), &files::render_partition(&inst.graph, &inst.baseline, &prov)?)?;
    let s = inst.graph.summary();
    println!(
        "generated {} airports, {} segments, {} carriers -> {}",
        s.airports,
        s.segments,
        s.carriers,
        ctx.out.display()
    );
    Ok(())
}

fn sample(ctx: &Context, force: bool) -> Result<()> {
    let inst = load_instance(&ctx.cfg)?;
    let path = ctx.out.join(CACHE_FILE);
    let (r, regenerated) = load_or_sample(&path, &inst.graph, &ctx.cfg.sampling, force)?;
    println!(
        "{} realization (seed {}) at {}",
        if regenerated { "sampled" } else { "reused" },
        r.seed(),
        path.display()
    );
    Ok(())
}

fn optimize(ctx: &Context, algorithms: &[Algorithm]) -> Result<()> {
    let inst = load_instance(&ctx.cfg)?;
    let (r, _) = load_or_sample(&ctx.out.join(CACHE_FILE), &inst.graph, &ctx.cfg.sampling, false)?;
    let prov = provenance(ctx, &inst).with_seeds(&ctx.cfg.optimization_seeds());
    let algorithms = if algorithms.is_empty() { &ctx.cfg.algorithms[..] } else { algorithms };
    write_text(&baseline_path(&ctx.out, &inst), &files::render_partition(&inst.graph, &inst.baseline, &prov)?)?;
    for &alg in algorithms {
        let out = run_algorithm(&ctx.cfg, &inst.graph, &r, alg)?;
        write_algorithm_output(&ctx.out, &inst.graph, &out, &ctx.cfg.model_formats, &prov)?;
        match (&out.trace, &out.enumeration, &out.tiny) {
            (Some(t), _, _) => println!(
                "{}: {} merges, objective {:.6} -> {:.6}, {} alliances",
                out.name,
                t.completed_merges(),
                t.initial_objective,
                t.final_objective(),
                t.final_alliances()
            ),
            (_, Some(e), _) => println!("{}: best objective {:.6}", out.name, e.best_breakdown.objective),
            (_, _, Some(s)) => println!("{}: model objective {:.6}", out.name, s.evaluation.reported_objective()),
            _ => println!("{}: done", out.name),
        }
    }
    Ok(())
}

fn named_partitions(ctx: &Context, inst: &Instance, given: &[String]) -> Result<Vec<(String, AlliancePartition)>> {
    let g = &inst.graph;
    if !given.is_empty() {
        return given
            .iter()
            .map(|arg| {
                let (name, path) = arg
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("expected name=path, got `{arg}`")))?;
                Ok((name.to_string(), files::read_partition(Path::new(path), g)?))
            })
            .collect();
    }
    let mut found = Vec::new();
    if let Ok(entries) = std::fs::read_dir(&ctx.out) {
        for entry in entries.flatten() {
            let file = entry.file_name().to_string_lossy().into_owned();
            if let Some(name) = file.strip_prefix("partition_").and_then(|f| f.strip_suffix(".csv")) {
                found.push((name.to_string(), entry.path()));
            }
        }
    }
    found.sort();
    if found.is_empty() {
        return Ok(vec![(inst.baseline_name.clone(), inst.baseline.clone())]);
    }
    found
        .into_iter()
        .map(|(name, path)| Ok((name, files::read_partition(&path, g)?)))
        .collect()
}

fn evaluate(ctx: &Context, given: &[String], report: bool) -> Result<()> {
    let inst = load_instance(&ctx.cfg)?;
    let named = named_partitions(ctx, &inst, given)?;
    let prov = provenance(ctx, &inst);
    let (cmp, _) = evaluate_named(&ctx.out, &ctx.cfg, &inst.graph, &named, &prov)?;
    if report {
        write_report(&ctx.out, &cmp, &prov)?;
    }
    for s in &cmp.summary {
        println!(
            "{:<20} objective {:.6} ± {:.6}  hhi {:.6}  mpc {:.6}",
            s.method, s.objective_mean, s.objective_std, s.hhi_mean, s.mpc_mean
        );
    }
    Ok(())
}

fn export(ctx: &Context, formats: &[String]) -> Result<()> {
    let inst = load_instance(&ctx.cfg)?;
    let (r, _) = load_or_sample(&ctx.out.join(CACHE_FILE), &inst.graph, &ctx.cfg.sampling, false)?;
    let cfg = &ctx.cfg;
    let model = build_miqp(
        &inst.graph,
        &r,
        &MiqpParams {
            beta: cfg.beta,
            gamma: cfg.gamma,
            n_alliances: cfg.n_alliances,
            epsilon: cfg.epsilon,
            n_intervals: cfg.n_intervals,
        },
    )?;
    let formats = if formats.is_empty() { &cfg.model_formats[..] } else { formats };
    for f in formats {
        let path = ctx.out.join(format!("model.{f}"));
        write_text(&path, &export_model(&model, f)?)?;
        println!("wrote {}", path.display());
    }
    let s = model.stats();
    println!(
        "{} assignment binaries, {} assignment rows, {} floor binaries",
        s.assignment_binaries, s.assignment_rows, s.floor_binaries
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => generate(&c.context(true)?),
        Command::Sample { common, force } => sample(&common.context(false)?, force),
        Command::Optimize { common, algorithms } => optimize(&common.context(false)?, &algorithms),
        Command::Evaluate { common, partitions } => evaluate(&common.context(false)?, &partitions, false),
        Command::Compare { common, partitions } => evaluate(&common.context(false)?, &partitions, true),
        Command::ExportModel { common, formats } => export(&common.context(false)?, &formats),
        Command::Run { common, force } => {
            let ctx = common.context(false)?;
            let report = run_experiment(&ctx.cfg, &ctx.out, force)?;
            for s in &report.comparison.summary {
                println!("{:<20} objective {:.6} ± {:.6}", s.method, s.objective_mean, s.objective_std);
            }
            println!("bundle written to {}", ctx.out.display());
            Ok(())
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("ALLIANCE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("ALLIANCE_THREADS=`{value}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::SizeCap => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
