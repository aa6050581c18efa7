//! Out-of-sample comparison of named partitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::{render_table, sig6, Provenance};
use crate::graph::MultiAttributeGraph;
use crate::metrics::ObjectiveBreakdown;
use crate::optimize::evaluate_partition;
use crate::partition::AlliancePartition;
use crate::sampling::{Realization, SamplingConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub method: String,
    pub realization: usize,
    pub seed: u64,
    pub breakdown: ObjectiveBreakdown,
}

/// Mean and sample standard deviation of each term across realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub n_realizations: usize,
    pub hhi_mean: f64,
    pub hhi_std: f64,
    pub mpc_mean: f64,
    pub mpc_std: f64,
    pub objective_mean: f64,
    pub objective_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub beta: f64,
    pub gamma: f64,
    pub evaluation_seeds: Vec<u64>,
    pub summary: Vec<MethodSummary>,
    pub rows: Vec<EvaluationRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check(g: &MultiAttributeGraph, partitions: &[(String, AlliancePartition)]) -> Result<()> {
    if partitions.is_empty() {
        return Err(Error::InvalidArgument("nothing to compare".into()));
    }
    for (name, p) in partitions {
        if p.n_carriers() != g.n_carriers() {
            return Err(Error::InvalidPartition(format!(
                "`{name}` covers {} carriers, graph has {}",
                p.n_carriers(),
                g.n_carriers()
            )));
        }
    }
    Ok(())
}

/// Scores every partition on one fresh realization per evaluation seed.
/// Realizations are drawn one at a time.
pub fn compare_partitions(
    g: &MultiAttributeGraph,
    partitions: &[(String, AlliancePartition)],
    sampling: &SamplingConfig,
    evaluation_seeds: &[u64],
    optimization_seeds: &[u64],
    beta: f64,
    gamma: f64,
) -> Result<Comparison> {
    check(g, partitions)?;
    if evaluation_seeds.is_empty() {
        return Err(Error::InvalidArgument("no evaluation seeds".into()));
    }
    let mut rows = Vec::new();
    for (r, &seed) in evaluation_seeds.iter().enumerate() {
        if optimization_seeds.contains(&seed) {
            return Err(Error::SeedCollision(seed));
        }
        let fresh = Realization::draw(g, &sampling.with_seed(seed))?;
        for (name, p) in partitions {
            rows.push(EvaluationRow {
                method: name.clone(),
                realization: r,
                seed,
                breakdown: evaluate_partition(g, p, &fresh, beta, gamma, optimization_seeds)?,
            });
        }
    }
    Ok(summarize(partitions, rows, evaluation_seeds, beta, gamma))
}

/// Same as [`compare_partitions`] on realizations drawn by the caller.
pub fn compare_on(
    g: &MultiAttributeGraph,
    partitions: &[(String, AlliancePartition)],
    realizations: &[Realization],
    optimization_seeds: &[u64],
    beta: f64,
    gamma: f64,
) -> Result<Comparison> {
    check(g, partitions)?;
    let mut rows = Vec::new();
    for (r, fresh) in realizations.iter().enumerate() {
        for (name, p) in partitions {
            rows.push(EvaluationRow {
                method: name.clone(),
                realization: r,
                seed: fresh.seed(),
                breakdown: evaluate_partition(g, p, fresh, beta, gamma, optimization_seeds)?,
            });
        }
    }
    let seeds: Vec<u64> = realizations.iter().map(Realization::seed).collect();
    Ok(summarize(partitions, rows, &seeds, beta, gamma))
}

fn summarize(
    partitions: &[(String, AlliancePartition)],
    rows: Vec<EvaluationRow>,
    seeds: &[u64],
    beta: f64,
    gamma: f64,
) -> Comparison {
    let summary = partitions
        .iter()
        .map(|(name, _)| {
            let mine: Vec<&ObjectiveBreakdown> =
                rows.iter().filter(|r| &r.method == name).map(|r| &r.breakdown).collect();
            let col = |f: fn(&ObjectiveBreakdown) -> f64| mean_std(&mine.iter().map(|b| f(b)).collect::<Vec<_>>());
            let (hhi_mean, hhi_std) = col(|b| b.hhi_mean);
            let (mpc_mean, mpc_std) = col(|b| b.mpc_term);
            let (objective_mean, objective_std) = col(|b| b.objective);
            MethodSummary {
                method: name.clone(),
                n_realizations: mine.len(),
                hhi_mean,
                hhi_std,
                mpc_mean,
                mpc_std,
                objective_mean,
                objective_std,
            }
        })
        .collect();
    Comparison {
        beta,
        gamma,
        evaluation_seeds: seeds.to_vec(),
        summary,
        rows,
    }
}

impl Comparison {
    pub fn summary_csv(&self, provenance: &Provenance) -> Result<String> {
        render_table(
            provenance,
            &[],
            &["method", "hhi_mean", "hhi_std", "mpc_mean", "mpc_std", "objective_mean", "objective_std"],
            self.summary.iter().map(|s| {
                vec![
                    s.method.clone(),
                    sig6(s.hhi_mean),
                    sig6(s.hhi_std),
                    sig6(s.mpc_mean),
                    sig6(s.mpc_std),
                    sig6(s.objective_mean),
                    sig6(s.objective_std),
                ]
            }),
        )
    }

    /// One row per (method, realization), ready for box plots.
    pub fn rows_csv(&self, provenance: &Provenance) -> Result<String> {
        render_table(
            provenance,
            &[],
            &["method", "realization", "seed", "hhi_mean", "mpc_term", "objective"],
            self.rows.iter().map(|r| {
                vec![
                    r.method.clone(),
                    r.realization.to_string(),
                    r.seed.to_string(),
                    sig6(r.breakdown.hhi_mean),
                    sig6(r.breakdown.mpc_term),
                    sig6(r.breakdown.objective),
                ]
            }),
        )
    }

    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == name)
    }
}
