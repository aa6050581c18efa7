//! Competition index (HHI) and market-penetration capability (MPC), exact
//! and sampled, plus the scalarized bi-objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AirportId, CarrierId, MultiAttributeGraph};
use crate::partition::AlliancePartition;
use crate::sampling::{Realization, SegmentSampleSet, WalkTensors};

/// Floor applied to the mean per-root MPC before taking its logarithm.
pub const EPSILON_FLOOR: f64 = 1e-6;

/// Sum of squared alliance shares from `(carrier, weight)` pairs. Shares are
/// normalized by the summed alliance weights, so a single alliance gives
/// exactly 1.
fn squared_alliance_shares(
    partition: &AlliancePartition,
    weights: impl Iterator<Item = (CarrierId, f64)>,
) -> f64 {
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for (c, s) in weights {
        let k = partition.alliance_of(c.index());
        match acc.iter_mut().find(|(a, _)| *a == k) {
            Some((_, v)) => *v += s,
            None => acc.push((k, s)),
        }
    }
    let total: f64 = acc.iter().map(|(_, w)| w).sum();
    acc.iter().map(|(_, w)| (w / total) * (w / total)).sum()
}

/// Exact HHI of segment `(u, v)` under `partition`.
pub fn hhi_segment_exact(
    g: &MultiAttributeGraph,
    partition: &AlliancePartition,
    u: AirportId,
    v: AirportId,
) -> Result<f64> {
    g.check_partition(partition)?;
    let idx = g.find_segment(u, v).ok_or_else(|| Error::UnknownSegment {
        origin: g.airport_names().get(u.index()).cloned().unwrap_or_else(|| u.to_string()),
        destination: g.airport_names().get(v.index()).cloned().unwrap_or_else(|| v.to_string()),
    })?;
    Ok(hhi_segment_exact_at(g, partition, idx))
}

pub(crate) fn hhi_segment_exact_at(g: &MultiAttributeGraph, partition: &AlliancePartition, idx: usize) -> f64 {
    let seg = g.segment(idx);
    squared_alliance_shares(partition, seg.carriers.iter().copied().zip(seg.weights.iter().copied()))
}

/// HHI estimated from one segment's carrier sample list.
pub fn hhi_segment_estimate(samples: &[u32], partition: &AlliancePartition) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(squared_alliance_shares(
        partition,
        samples.iter().map(|&c| (CarrierId(c), 1.0)),
    ))
}

/// Exact HHI of every segment, in segment order.
pub fn hhi_exact_all(g: &MultiAttributeGraph, partition: &AlliancePartition) -> Result<Vec<f64>> {
    g.check_partition(partition)?;
    Ok((0..g.n_segments())
        .into_par_iter()
        .map(|i| hhi_segment_exact_at(g, partition, i))
        .collect())
}

/// Sampled HHI of every segment, in segment order.
pub fn hhi_estimate_all(
    g: &MultiAttributeGraph,
    samples: &SegmentSampleSet,
    partition: &AlliancePartition,
) -> Result<Vec<f64>> {
    g.check_partition(partition)?;
    if samples.n_segments() != g.n_segments() {
        return Err(Error::Integrity(format!(
            "sample set covers {} segments, graph has {}",
            samples.n_segments(),
            g.n_segments()
        )));
    }
    (0..g.n_segments())
        .into_par_iter()
        .map(|i| hhi_segment_estimate(samples.segment(i), partition))
        .collect()
}

/// Ordered summation so reductions are independent of scheduling.
pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-(carrier, root) and per-(alliance, root) penetration probabilities
/// and the per-carrier log MPC. Dense row-major tables, one row per carrier
/// or alliance, one column per walk root.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcTable {
    pub roots: Vec<AirportId>,
    pub n_carriers: usize,
    pub n_alliances: usize,
    pub p_carrier: Vec<f64>,
    pub p_alliance: Vec<f64>,
    pub w_root: Vec<f64>,
    /// Log of the root-averaged `w_root`, floored at `epsilon`.
    pub w_carrier: Vec<f64>,
    /// Carriers whose root average fell below the floor.
    pub floored: Vec<bool>,
    pub epsilon: f64,
}

impl MpcTable {
    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn p_carrier(&self, carrier: usize, root: usize) -> f64 {
        self.p_carrier[carrier * self.n_roots() + root]
    }

    pub fn p_alliance(&self, alliance: usize, root: usize) -> f64 {
        self.p_alliance[alliance * self.n_roots() + root]
    }

    pub fn w_root(&self, carrier: usize, root: usize) -> f64 {
        self.w_root[carrier * self.n_roots() + root]
    }

    /// Mean over carriers of the log MPC.
    pub fn mpc_term(&self) -> f64 {
        mean(&self.w_carrier)
    }

    fn assemble(
        roots: Vec<AirportId>,
        partition: &AlliancePartition,
        p_carrier: Vec<f64>,
        p_alliance: Vec<f64>,
        epsilon: f64,
    ) -> Self {
        let n_roots = roots.len();
        let n_carriers = partition.n_carriers();
        let mut w_root = vec![0.0; n_carriers * n_roots];
        for c in 0..n_carriers {
            let k = partition.alliance_of(c);
            for i in 0..n_roots {
                w_root[c * n_roots + i] = p_carrier[c * n_roots + i] * p_alliance[k * n_roots + i];
            }
        }
        let mut w_carrier = Vec::with_capacity(n_carriers);
        let mut floored = Vec::with_capacity(n_carriers);
        for c in 0..n_carriers {
            let m = mean(&w_root[c * n_roots..(c + 1) * n_roots]);
            floored.push(m < epsilon);
            w_carrier.push(m.max(epsilon).ln());
        }
        Self {
            roots,
            n_carriers,
            n_alliances: partition.n_alliances(),
            p_carrier,
            p_alliance,
            w_root,
            w_carrier,
            floored,
            epsilon,
        }
    }
}

/// Per-carrier penetration probabilities `p(tau | i, depth)` for every
/// airport by dynamic programming over depth. Row-major `[airport][carrier]`.
///
/// Each level applies its own `1/depth` prefactor, exactly as the recursion
/// is stated; for `depth <= 2` this equals the expected fraction of walk
/// steps flown by the carrier, for deeper walks it does not.
pub fn carrier_penetration_exact(g: &MultiAttributeGraph, depth: usize) -> Vec<f64> {
    let na = g.n_airports();
    let nc = g.n_carriers();
    let mut prev = vec![0.0; na * nc];
    for d in 1..=depth {
        let inv_d = 1.0 / d as f64;
        let mut cur = vec![0.0; na * nc];
        cur.par_chunks_mut(nc).enumerate().for_each(|(i, row)| {
            let out = g.out_segments(AirportId(i as u32));
            let total: f64 = out.iter().map(|s| s.total).sum();
            for seg in out {
                let p_next = seg.total / total;
                for (c, share) in seg.shares() {
                    row[c.index()] += p_next * share;
                }
                let v = seg.destination.index();
                for (r, &p) in row.iter_mut().zip(&prev[v * nc..(v + 1) * nc]) {
                    *r += p_next * p;
                }
            }
            row.iter_mut().for_each(|r| *r *= inv_d);
        });
        prev = cur;
    }
    prev
}

/// Per-alliance penetration probabilities `p(alpha_k | i, depth)` by the
/// alliance-level recursion. Row-major `[airport][alliance]`.
pub fn alliance_penetration_exact(
    g: &MultiAttributeGraph,
    partition: &AlliancePartition,
    depth: usize,
) -> Vec<f64> {
    let na = g.n_airports();
    let nk = partition.n_alliances();
    let mut prev = vec![0.0; na * nk];
    for d in 1..=depth {
        let inv_d = 1.0 / d as f64;
        let mut cur = vec![0.0; na * nk];
        cur.par_chunks_mut(nk).enumerate().for_each(|(i, row)| {
            let out = g.out_segments(AirportId(i as u32));
            let total: f64 = out.iter().map(|s| s.total).sum();
            for seg in out {
                let p_next = seg.total / total;
                for (c, share) in seg.shares() {
                    row[partition.alliance_of(c.index())] += p_next * share;
                }
                let v = seg.destination.index();
                for (r, &p) in row.iter_mut().zip(&prev[v * nk..(v + 1) * nk]) {
                    *r += p_next * p;
                }
            }
            row.iter_mut().for_each(|r| *r *= inv_d);
        });
        prev = cur;
    }
    prev
}

/// Exact MPC table over walk roots from the depth recursions.
pub fn mpc_exact(g: &MultiAttributeGraph, partition: &AlliancePartition, walk_length: usize) -> Result<MpcTable> {
    g.check_partition(partition)?;
    let roots = g.walk_roots().to_vec();
    let nc = g.n_carriers();
    let nk = partition.n_alliances();
    let by_airport_c = carrier_penetration_exact(g, walk_length);
    let by_airport_k = alliance_penetration_exact(g, partition, walk_length);
    let n_roots = roots.len();
    let mut p_carrier = vec![0.0; nc * n_roots];
    let mut p_alliance = vec![0.0; nk * n_roots];
    for (i, root) in roots.iter().enumerate() {
        let a = root.index();
        for c in 0..nc {
            p_carrier[c * n_roots + i] = by_airport_c[a * nc + c];
        }
        for k in 0..nk {
            p_alliance[k * n_roots + i] = by_airport_k[a * nk + k];
        }
    }
    Ok(MpcTable::assemble(roots, partition, p_carrier, p_alliance, EPSILON_FLOOR))
}

/// Per-root carrier step frequencies `p_hat(tau | i, L)`, row-major
/// `[carrier][root]`. Each walk contributes `1 / (n_walks * steps)` per
/// realized step, so truncated walks are normalized by their own length.
pub fn carrier_frequencies(tensors: &WalkTensors, n_carriers: usize) -> Vec<f64> {
    let n_roots = tensors.n_roots();
    let n_walks = tensors.n_walks();
    let per_root: Vec<Vec<f64>> = (0..n_roots)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n_carriers];
            for j in 0..n_walks {
                let steps = tensors.steps(i, j);
                if steps == 0 {
                    continue;
                }
                let unit = 1.0 / (n_walks * steps) as f64;
                for c in tensors.walk_carriers(i, j) {
                    row[c.index()] += unit;
                }
            }
            row
        })
        .collect();
    let mut out = vec![0.0; n_carriers * n_roots];
    for (i, row) in per_root.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            out[c * n_roots + i] = p;
        }
    }
    out
}

/// MPC estimated from a walk realization.
pub fn mpc_estimate(tensors: &WalkTensors, partition: &AlliancePartition) -> Result<MpcTable> {
    mpc_estimate_with_floor(tensors, partition, EPSILON_FLOOR)
}

pub fn mpc_estimate_with_floor(
    tensors: &WalkTensors,
    partition: &AlliancePartition,
    epsilon: f64,
) -> Result<MpcTable> {
    let nc = partition.n_carriers();
    if tensors.carriers.iter().any(|&c| c != crate::sampling::NONE && c as usize >= nc) {
        return Err(Error::Integrity("walk tensor references a carrier outside the partition".into()));
    }
    let n_roots = tensors.n_roots();
    let p_carrier = carrier_frequencies(tensors, nc);
    let nk = partition.n_alliances();
    let mut p_alliance = vec![0.0; nk * n_roots];
    for c in 0..nc {
        let k = partition.alliance_of(c);
        for i in 0..n_roots {
            p_alliance[k * n_roots + i] += p_carrier[c * n_roots + i];
        }
    }
    Ok(MpcTable::assemble(tensors.roots().to_vec(), partition, p_carrier, p_alliance, epsilon))
}

/// The scalarized objective and its two terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Mean segment HHI, a positive fraction.
    pub hhi_mean: f64,
    /// Mean over carriers of the log MPC.
    pub mpc_term: f64,
    pub beta: f64,
    pub gamma: f64,
    pub objective: f64,
}

impl ObjectiveBreakdown {
    pub fn recompute(&self) -> f64 {
        -self.beta * self.hhi_mean + self.gamma * self.mpc_term
    }
}

/// `f = -beta * hhi_mean + gamma * mpc_term`.
pub fn objective(hhi_mean: f64, mpc_term: f64, beta: f64, gamma: f64) -> Result<ObjectiveBreakdown> {
    if !(beta >= 0.0) || !(gamma >= 0.0) || !beta.is_finite() || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "objective weights must be finite and non-negative (beta={beta}, gamma={gamma})"
        )));
    }
    Ok(ObjectiveBreakdown {
        hhi_mean,
        mpc_term,
        beta,
        gamma,
        objective: -beta * hhi_mean + gamma * mpc_term,
    })
}

/// Exact objective of `partition`: exact segment HHI and recursion-based MPC.
pub fn exact_breakdown(
    g: &MultiAttributeGraph,
    partition: &AlliancePartition,
    walk_length: usize,
    beta: f64,
    gamma: f64,
) -> Result<ObjectiveBreakdown> {
    let hhi = hhi_exact_all(g, partition)?;
    let mpc = mpc_exact(g, partition, walk_length)?;
    objective(mean(&hhi), mpc.mpc_term(), beta, gamma)
}

/// Estimated objective of `partition` on one sampling realization.
pub fn estimated_breakdown(
    g: &MultiAttributeGraph,
    partition: &AlliancePartition,
    realization: &Realization,
    beta: f64,
    gamma: f64,
) -> Result<ObjectiveBreakdown> {
    let hhi = hhi_estimate_all(g, &realization.segments, partition)?;
    let mpc = mpc_estimate(&realization.tensors, partition)?;
    objective(mean(&hhi), mpc.mpc_term(), beta, gamma)
}
