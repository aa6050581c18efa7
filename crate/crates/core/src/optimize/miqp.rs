//! Mixed-integer quadratic model of the partitioning problem.
//!
//! The model is stored in minimization form:
//!
//! ```text
//! minimize   sum_terms coef * sum_k x[a,k] x[b,k]  +  y_coef * sum_t y[t]
//! subject to sum_k x[t,k] = 1                                 for each t
//!            z[t] = sum_o c[t,o] * sum_k x[t,k] x[o,k]        for each t
//!            y[t] = pwl(z[t])
//! ```
//!
//! `x[t,k]` is binary and the variable index is `t * K + k`. Quadratic
//! terms are kept in compact per-carrier-pair form; the sum over alliance
//! labels `k` is implied. Carriers whose self-term `c[t,t]` lies below the
//! floor get a "floored" row, `z[t] = max(expr, epsilon)`, encoded with one
//! extra indicator binary by the LP writer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiAttributeGraph;
use crate::metrics;
use crate::optimize::pairwise::PairwiseObjective;
use crate::optimize::pwl::{pwl_breakpoints, PwlCurve};
use crate::partition::AlliancePartition;
use crate::sampling::{Realization, NONE};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// `coef * sum_k x[a,k] * x[b,k]`, with `a <= b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub a: usize,
    pub b: usize,
    pub coef: f64,
}

/// Definition row of `z[carrier]`; `terms` are `(other, coef)` sorted by
/// `other` and include the carrier itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZRow {
    pub carrier: usize,
    pub floored: bool,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableBounds {
    pub y_lower: f64,
    pub y_upper: f64,
    pub z_lower: f64,
    pub z_upper: f64,
}

/// The sampled walks behind the z rows, kept so consumers can rebuild the
/// bilinear form from the raw indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkIndex {
    pub roots: Vec<u32>,
    pub n_walks: usize,
    pub walk_length: usize,
    /// Realized steps per walk.
    pub steps: Vec<u32>,
    /// Carrier per step, padded with `u32::MAX`.
    pub carriers: Vec<u32>,
    /// Sparse `(carrier, p_hat(carrier | root))` per root.
    pub penetration: Vec<Vec<(u32, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub beta: f64,
    pub gamma: f64,
    pub n_alliances: usize,
    pub epsilon: f64,
    pub n_intervals: usize,
    pub seed: u64,
    pub graph_hash: String,
    pub n_segments: usize,
    pub n_segment_samples: usize,
    /// External solver settings, recorded but not interpreted.
    pub solver_parameters: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiqpModel {
    pub format_version: u32,
    pub carriers: Vec<String>,
    pub n_alliances: usize,
    pub hhi_terms: Vec<PairTerm>,
    pub y_coef: f64,
    pub assignment_rows: Vec<Vec<usize>>,
    pub z_rows: Vec<ZRow>,
    pub pwl: Vec<PwlCurve>,
    pub bounds: VariableBounds,
    pub walks: WalkIndex,
    pub metadata: ModelMetadata,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub assignment_binaries: usize,
    pub floor_binaries: usize,
    pub continuous: usize,
    pub assignment_rows: usize,
    pub z_rows: usize,
    pub pwl_curves: usize,
    pub hhi_quadratic_nonzeros: usize,
    pub z_quadratic_nonzeros: usize,
    pub lambda_variables: usize,
    pub adjacency_binaries: usize,
}

/// Value of the model at a fixed assignment, continuous variables at their
/// optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelEvaluation {
    /// Minimization objective.
    pub objective: f64,
    pub hhi_part: f64,
    pub mpc_part: f64,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl ModelEvaluation {
    /// The maximization objective it corresponds to.
    pub fn reported_objective(&self) -> f64 {
        -self.objective
    }
}

/// Settings of the external solver run, kept with exported models.
pub fn reference_solver_parameters() -> BTreeMap<String, String> {
    [
        ("TimeLimit", "72000"),
        ("NodefileStart", "0.5"),
        ("SoftMemLimit", "54GB"),
        ("MIPGap", "0.001"),
        ("SolutionLimit", "inf"),
        ("Heuristics", "0.15"),
        ("MIPFocus", "1"),
        ("Cuts", "0"),
        ("Presolve", "0"),
        ("ScaleFlag", "1"),
        ("Method", "1"),
        ("FeasibilityTol", "1e-2"),
        ("IntFeasTol", "1e-3"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiqpParams {
    pub beta: f64,
    pub gamma: f64,
    pub n_alliances: usize,
    pub epsilon: f64,
    pub n_intervals: usize,
}

pub fn build_miqp(g: &MultiAttributeGraph, realization: &Realization, params: &MiqpParams) -> Result<MiqpModel> {
    let n = g.n_carriers();
    let k = params.n_alliances;
    if k < 1 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("K = {k} exceeds the {n} carriers")));
    }
    metrics::objective(0.0, 0.0, params.beta, params.gamma)?;
    let curve = pwl_breakpoints(params.epsilon, params.n_intervals)?;
    let pw = PairwiseObjective::from_realization(g, realization)?;

    let mut hhi_terms = Vec::new();
    for a in 0..n {
        for b in a..n {
            let h = pw.hhi(a, b);
            if h != 0.0 {
                let coef = if a == b { params.beta * h } else { 2.0 * params.beta * h };
                hhi_terms.push(PairTerm { a, b, coef });
            }
        }
    }
    let z_rows = (0..n)
        .map(|t| ZRow {
            carrier: t,
            floored: pw.mpc(t, t) < params.epsilon,
            terms: (0..n).map(|o| (o, pw.mpc(t, o))).filter(|&(_, c)| c != 0.0).collect(),
        })
        .collect();

    let tensors = &realization.tensors;
    let freq = metrics::carrier_frequencies(tensors, n);
    let n_roots = tensors.n_roots();
    let penetration = (0..n_roots)
        .map(|i| {
            (0..n)
                .filter(|&c| freq[c * n_roots + i] != 0.0)
                .map(|c| (c as u32, freq[c * n_roots + i]))
                .collect()
        })
        .collect();
    let walks = WalkIndex {
        roots: tensors.roots().iter().map(|r| r.0).collect(),
        n_walks: tensors.n_walks(),
        walk_length: tensors.walk_length(),
        steps: tensors.walks.steps.clone(),
        carriers: tensors.carriers.clone(),
        penetration,
    };

    Ok(MiqpModel {
        format_version: MODEL_FORMAT_VERSION,
        carriers: g.carrier_names().to_vec(),
        n_alliances: k,
        hhi_terms,
        y_coef: -params.gamma / n as f64,
        assignment_rows: (0..n).map(|t| (0..k).map(|j| t * k + j).collect()).collect(),
        z_rows,
        pwl: vec![curve; n],
        bounds: VariableBounds {
            y_lower: params.epsilon.ln(),
            y_upper: 0.0,
            z_lower: params.epsilon,
            z_upper: 1.0,
        },
        walks,
        metadata: ModelMetadata {
            beta: params.beta,
            gamma: params.gamma,
            n_alliances: k,
            epsilon: params.epsilon,
            n_intervals: params.n_intervals,
            seed: realization.seed(),
            graph_hash: g.content_hash(),
            n_segments: g.n_segments(),
            n_segment_samples: realization.segments.n_samples,
            solver_parameters: reference_solver_parameters(),
        },
    })
}

impl MiqpModel {
    pub fn n_carriers(&self) -> usize {
        self.carriers.len()
    }

    pub fn x_index(&self, carrier: usize, alliance: usize) -> usize {
        carrier * self.n_alliances + alliance
    }

    pub fn epsilon(&self) -> f64 {
        self.bounds.z_lower
    }

    pub fn stats(&self) -> ModelStats {
        let n = self.n_carriers();
        let k = self.n_alliances;
        let floored = self.z_rows.iter().filter(|r| r.floored).count();
        let z_quad: usize = self
            .z_rows
            .iter()
            .map(|r| r.terms.iter().filter(|(o, _)| *o != r.carrier).count())
            .sum();
        let lambdas: usize = self.pwl.iter().map(|c| c.len()).sum();
        ModelStats {
            assignment_binaries: n * k,
            floor_binaries: floored,
            continuous: 2 * n,
            assignment_rows: self.assignment_rows.len(),
            z_rows: self.z_rows.len(),
            pwl_curves: self.pwl.len(),
            hhi_quadratic_nonzeros: self.hhi_terms.len() * k,
            z_quadratic_nonzeros: z_quad * k,
            lambda_variables: lambdas,
            adjacency_binaries: lambdas - self.pwl.len(),
        }
    }

    /// Evaluates the model at an assignment given as one alliance label per
    /// carrier. `z` and `y` take their optimal values: the definition rows
    /// fix `z` except on floored rows, where the larger admissible value
    /// wins.
    pub fn evaluate(&self, labels: &[usize]) -> Result<ModelEvaluation> {
        let n = self.n_carriers();
        if labels.len() != n {
            return Err(Error::InvalidPartition(format!(
                "assignment covers {} carriers, model has {n}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.n_alliances) {
            return Err(Error::AllianceOutOfRange {
                index: bad,
                count: self.n_alliances,
            });
        }
        let hhi_part: f64 = self
            .hhi_terms
            .iter()
            .filter(|t| labels[t.a] == labels[t.b])
            .map(|t| t.coef)
            .sum();
        let eps = self.epsilon();
        let mut z = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for row in &self.z_rows {
            let own = labels[row.carrier];
            let expr: f64 = row
                .terms
                .iter()
                .filter(|(o, _)| labels[*o] == own)
                .map(|(_, c)| c)
                .sum();
            let value = if row.floored { expr.max(eps) } else { expr };
            let value = value.min(self.bounds.z_upper);
            if value < eps {
                return Err(Error::Integrity(format!(
                    "z row of carrier {} evaluates below its lower bound",
                    row.carrier
                )));
            }
            y.push(self.pwl[row.carrier].eval(value));
            z.push(value);
        }
        let mpc_part = self.y_coef * y.iter().sum::<f64>();
        Ok(ModelEvaluation {
            objective: hhi_part + mpc_part,
            hhi_part,
            mpc_part,
            z,
            y,
        })
    }

    pub fn evaluate_partition(&self, partition: &AlliancePartition) -> Result<ModelEvaluation> {
        if partition.n_alliances() > self.n_alliances {
            let canonical = partition.canonical();
            if canonical.n_alliances() > self.n_alliances {
                return Err(Error::InvalidPartition(format!(
                    "{} non-empty alliances exceed K = {}",
                    canonical.n_alliances(),
                    self.n_alliances
                )));
            }
            return self.evaluate(canonical.assignment());
        }
        self.evaluate(partition.assignment())
    }

    /// Structural checks a parsed model must pass.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_carriers();
        let bad = |what: &str| Err(Error::Integrity(format!("model {what}")));
        if self.format_version != MODEL_FORMAT_VERSION {
            return bad(&format!("format version {} unsupported", self.format_version));
        }
        if self.n_alliances < 1 || self.n_alliances > n {
            return bad("alliance count out of range");
        }
        if self.assignment_rows.len() != n || self.z_rows.len() != n || self.pwl.len() != n {
            return bad("row counts do not match carrier count");
        }
        for (t, row) in self.assignment_rows.iter().enumerate() {
            let expect: Vec<usize> = (0..self.n_alliances).map(|k| self.x_index(t, k)).collect();
            if *row != expect {
                return bad(&format!("assignment row {t} malformed"));
            }
        }
        for (t, row) in self.z_rows.iter().enumerate() {
            if row.carrier != t || row.terms.iter().any(|(o, _)| *o >= n) {
                return bad(&format!("z row {t} malformed"));
            }
        }
        if self.hhi_terms.iter().any(|t| t.a > t.b || t.b >= n) {
            return bad("quadratic term out of range");
        }
        let padded = self.walks.roots.len() * self.walks.n_walks;
        if self.walks.steps.len() != padded
            || self.walks.carriers.len() != padded * self.walks.walk_length
            || self.walks.penetration.len() != self.walks.roots.len()
            || self.walks.carriers.iter().any(|&c| c != NONE && c as usize >= n)
        {
            return bad("walk index malformed");
        }
        Ok(())
    }
}
