//! Carrier-pair decomposition of the objective.
//!
//! Both objective terms depend on the partition only through which carrier
//! pairs share an alliance:
//!
//! ```text
//! hhi_mean      = sum over same-alliance pairs (t, t') of H[t][t']
//! mean_i w(t,i) = sum over t' in alliance(t)        of M[t][t']
//! ```
//!
//! with `H[t][t'] = (1/|E|) sum_e share_e(t) share_e(t')` and
//! `M[t][t'] = (1/|V|) sum_i p(t|i) p(t'|i)`. Shares and penetration
//! probabilities come either from samples (the estimated objective) or from
//! the exact PMFs and depth recursion (the exact objective).

use crate::error::{Error, Result};
use crate::graph::MultiAttributeGraph;
use crate::metrics::{self, carrier_penetration_exact, ObjectiveBreakdown, EPSILON_FLOOR};
use crate::partition::AlliancePartition;
use crate::sampling::{Realization, SegmentSampleSet, WalkTensors};

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseObjective {
    n_carriers: usize,
    hhi: Vec<f64>,
    mpc: Vec<f64>,
    epsilon: f64,
}

fn add_outer(matrix: &mut [f64], n: usize, entries: &[(usize, f64)], scale: f64) {
    for &(a, va) in entries {
        for &(b, vb) in entries {
            matrix[a * n + b] += va * vb * scale;
        }
    }
}

impl PairwiseObjective {
    /// Estimated objective from one sampling realization.
    pub fn from_realization(g: &MultiAttributeGraph, r: &Realization) -> Result<Self> {
        Self::from_samples(g, &r.segments, &r.tensors)
    }

    pub fn from_samples(g: &MultiAttributeGraph, segments: &SegmentSampleSet, tensors: &WalkTensors) -> Result<Self> {
        let n = g.n_carriers();
        if segments.n_segments() != g.n_segments() {
            return Err(Error::Integrity(format!(
                "sample set covers {} segments, graph has {}",
                segments.n_segments(),
                g.n_segments()
            )));
        }
        if g.n_segments() == 0 || n == 0 {
            return Err(Error::InvalidArgument("graph has no segments or carriers".into()));
        }
        let mut hhi = vec![0.0; n * n];
        let inv_e = 1.0 / g.n_segments() as f64;
        let unit = 1.0 / segments.n_samples as f64;
        let mut counts: Vec<(usize, f64)> = Vec::new();
        for e in 0..g.n_segments() {
            counts.clear();
            for &c in segments.segment(e) {
                let c = c as usize;
                if c >= n {
                    return Err(Error::Integrity(format!("segment sample references carrier {c}")));
                }
                match counts.iter_mut().find(|(k, _)| *k == c) {
                    Some((_, v)) => *v += unit,
                    None => counts.push((c, unit)),
                }
            }
            counts.sort_unstable_by_key(|&(c, _)| c);
            add_outer(&mut hhi, n, &counts, inv_e);
        }

        let mpc = root_pair_matrix(&metrics::carrier_frequencies(tensors, n), n, tensors.n_roots());
        Ok(Self {
            n_carriers: n,
            hhi,
            mpc,
            epsilon: EPSILON_FLOOR,
        })
    }

    /// Exact objective: segment PMFs and the depth recursion.
    pub fn exact(g: &MultiAttributeGraph, walk_length: usize) -> Result<Self> {
        let n = g.n_carriers();
        if g.n_segments() == 0 || n == 0 {
            return Err(Error::InvalidArgument("graph has no segments or carriers".into()));
        }
        let mut hhi = vec![0.0; n * n];
        let inv_e = 1.0 / g.n_segments() as f64;
        for seg in g.segments() {
            let shares: Vec<(usize, f64)> = seg.shares().map(|(c, s)| (c.index(), s)).collect();
            add_outer(&mut hhi, n, &shares, inv_e);
        }
        let roots = g.walk_roots();
        let by_airport = carrier_penetration_exact(g, walk_length);
        let mut p = vec![0.0; n * roots.len()];
        for (i, r) in roots.iter().enumerate() {
            for c in 0..n {
                p[c * roots.len() + i] = by_airport[r.index() * n + c];
            }
        }
        let mpc = root_pair_matrix(&p, n, roots.len());
        Ok(Self {
            n_carriers: n,
            hhi,
            mpc,
            epsilon: EPSILON_FLOOR,
        })
    }

    pub fn n_carriers(&self) -> usize {
        self.n_carriers
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn hhi(&self, a: usize, b: usize) -> f64 {
        self.hhi[a * self.n_carriers + b]
    }

    #[inline]
    pub fn mpc(&self, a: usize, b: usize) -> f64 {
        self.mpc[a * self.n_carriers + b]
    }

    /// Objective terms for `partition`.
    pub fn breakdown(&self, partition: &AlliancePartition, beta: f64, gamma: f64) -> Result<ObjectiveBreakdown> {
        if partition.n_carriers() != self.n_carriers {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} carriers, objective has {}",
                partition.n_carriers(),
                self.n_carriers
            )));
        }
        let (hhi_mean, mpc_term) = self.terms(partition.assignment());
        metrics::objective(hhi_mean, mpc_term, beta, gamma)
    }

    /// `(hhi_mean, mpc_term)` for an alliance label per carrier.
    pub fn terms(&self, labels: &[usize]) -> (f64, f64) {
        let n = self.n_carriers;
        let mut hhi = 0.0;
        let mut log_sum = 0.0;
        for a in 0..n {
            let mut m = 0.0;
            for b in 0..n {
                if labels[a] == labels[b] {
                    hhi += self.hhi[a * n + b];
                    m += self.mpc[a * n + b];
                }
            }
            log_sum += m.max(self.epsilon).ln();
        }
        (hhi, log_sum / n as f64)
    }
}

/// `M[a][b] = (1/R) sum_i p[a][i] p[b][i]` from a row-major `[carrier][root]`
/// table, visiting only carriers seen at each root.
fn root_pair_matrix(p: &[f64], n: usize, n_roots: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    if n_roots == 0 {
        return m;
    }
    let inv = 1.0 / n_roots as f64;
    let mut seen: Vec<(usize, f64)> = Vec::new();
    for i in 0..n_roots {
        seen.clear();
        seen.extend((0..n).map(|c| (c, p[c * n_roots + i])).filter(|&(_, v)| v != 0.0));
        add_outer(&mut m, n, &seen, inv);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ScheduleRecord;
    use crate::metrics::{estimated_breakdown, exact_breakdown};
    use crate::sampling::SamplingConfig;

    fn toy() -> MultiAttributeGraph {
        let r = |o: &str, d: &str, c: &str, w: f64| ScheduleRecord::new(o, d, c, w);
        MultiAttributeGraph::build(&[
            r("A", "B", "x", 3.0),
            r("A", "B", "y", 1.0),
            r("B", "C", "y", 2.0),
            r("B", "C", "z", 2.0),
            r("C", "A", "x", 1.0),
            r("C", "A", "z", 5.0),
            r("B", "A", "x", 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn pairwise_matches_direct_routes() {
        let g = toy();
        let real = Realization::draw(&g, &SamplingConfig::new(20, 2, 30, 4)).unwrap();
        let est = PairwiseObjective::from_realization(&g, &real).unwrap();
        let exact = PairwiseObjective::exact(&g, 2).unwrap();
        for labels in [[0, 1, 2], [0, 0, 1], [0, 1, 0], [0, 0, 0]] {
            let p = AlliancePartition::from_blocks_labels(&labels);
            let a = est.breakdown(&p, 0.7, 0.3).unwrap();
            let b = estimated_breakdown(&g, &p, &real, 0.7, 0.3).unwrap();
            assert!((a.objective - b.objective).abs() < 1e-12, "{a:?} vs {b:?}");
            let a = exact.breakdown(&p, 0.7, 0.3).unwrap();
            let b = exact_breakdown(&g, &p, 2, 0.7, 0.3).unwrap();
            assert!((a.hhi_mean - b.hhi_mean).abs() < 1e-12);
            assert!((a.mpc_term - b.mpc_term).abs() < 1e-12);
        }
    }
}
