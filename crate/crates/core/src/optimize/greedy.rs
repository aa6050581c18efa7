//! Greedy agglomerative alliance formation.
//!
//! Starts from singleton alliances and repeatedly merges the pair with the
//! largest objective gain until no merge improves the objective or a single
//! alliance remains. The exhaustive variant scores every pair; the sampled
//! variant draws candidate pairs with probability proportional to the sum of
//! the two alliances' standalone contributions.

use std::cmp::Ordering;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiAttributeGraph;
use crate::optimize::pairwise::PairwiseObjective;
use crate::partition::AlliancePartition;
use crate::sampling::{keyed_rng, Realization};

const DOMAIN_PAIRS: u64 = 0x5041_4952; // "PAIR"

/// An objective that can be maintained incrementally while clusters merge.
/// Cluster ids are the initial item indices; merging `q` into `p` retires
/// `q`.
pub trait MergeObjective: Sync {
    fn n_items(&self) -> usize;
    fn value(&self) -> f64;
    fn merge_gain(&self, p: usize, q: usize) -> f64;
    /// Cluster `p`'s own share of the objective.
    fn standalone(&self, p: usize) -> f64;
    fn merge(&mut self, p: usize, q: usize);
    /// Recomputes cached state from scratch.
    fn resync(&mut self) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairSelection {
    Exhaustive,
    Sampled { n_candidates: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyOptions {
    pub selection: PairSelection,
    /// Hard cap on completed merges.
    pub max_merges: Option<usize>,
    /// Incremental state is rebuilt after this many merges.
    pub resync_every: usize,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            selection: PairSelection::Exhaustive,
            max_merges: None,
            resync_every: 32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub iteration: usize,
    pub p: usize,
    pub q: usize,
    pub objective: f64,
    pub alliances: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    NoImprovement,
    SingleAlliance,
    MergeCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyTrace {
    pub initial_objective: f64,
    pub initial_alliances: usize,
    pub steps: Vec<MergeStep>,
    pub stop: StopReason,
    pub partition: AlliancePartition,
}

impl GreedyTrace {
    pub fn completed_merges(&self) -> usize {
        self.steps.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.steps.last().map_or(self.initial_objective, |s| s.objective)
    }

    pub fn final_alliances(&self) -> usize {
        self.initial_alliances - self.steps.len()
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    gain: f64,
    p: usize,
    q: usize,
}

/// Higher gain wins; equal gains go to the lexicographically smaller pair.
fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.gain.partial_cmp(&b.gain).unwrap_or(Ordering::Equal) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if (a.p, a.q) <= (b.p, b.q) {
                a
            } else {
                b
            }
        }
    }
}

fn best_exhaustive<O: MergeObjective>(obj: &O, active: &[usize]) -> Option<Candidate> {
    (0..active.len())
        .into_par_iter()
        .filter_map(|a| {
            let p = active[a];
            active[a + 1..]
                .iter()
                .map(|&q| Candidate {
                    gain: obj.merge_gain(p, q),
                    p,
                    q,
                })
                .reduce(better)
        })
        .reduce_with(better)
}

fn best_sampled<O: MergeObjective>(
    obj: &O,
    active: &[usize],
    n_candidates: usize,
    seed: u64,
    iteration: usize,
) -> Option<Candidate> {
    let k = active.len();
    let total_pairs = k * (k - 1) / 2;
    if n_candidates >= total_pairs {
        return best_exhaustive(obj, active);
    }
    let scores: Vec<f64> = active.iter().map(|&p| obj.standalone(p)).collect();
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = 1e-9 + 1e-6 * (hi - lo);
    let weights: Vec<f64> = scores.iter().map(|s| s - lo + shift).collect();
    let first = WeightedIndex::new(&weights).ok()?;
    let mut rng = keyed_rng(seed, DOMAIN_PAIRS, iteration as u64, 0);
    let mut pairs: Vec<(usize, usize)> = (0..n_candidates)
        .map(|_| {
            // first endpoint by weight, second uniform among the rest:
            // P{a, b} is proportional to w_a + w_b
            let a = first.sample(&mut rng);
            let mut b = rng.gen_range(0..k - 1);
            if b >= a {
                b += 1;
            }
            let (p, q) = (active[a.min(b)], active[a.max(b)]);
            (p, q)
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
        .into_par_iter()
        .map(|(p, q)| Candidate {
            gain: obj.merge_gain(p, q),
            p,
            q,
        })
        .reduce_with(better)
}

/// Runs the merge loop on any [`MergeObjective`].
pub fn agglomerate<O: MergeObjective>(obj: &mut O, options: &GreedyOptions) -> Result<GreedyTrace> {
    let n = obj.n_items();
    if n == 0 {
        return Err(Error::InvalidArgument("nothing to partition".into()));
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut owner: Vec<usize> = (0..n).collect();
    let initial_objective = obj.value();
    let mut steps = Vec::new();
    let stop = loop {
        if active.len() == 1 {
            break StopReason::SingleAlliance;
        }
        if options.max_merges.is_some_and(|cap| steps.len() >= cap) {
            break StopReason::MergeCap;
        }
        let iteration = steps.len() + 1;
        let best = match options.selection {
            PairSelection::Exhaustive => best_exhaustive(obj, &active),
            PairSelection::Sampled { n_candidates, seed } => {
                best_sampled(obj, &active, n_candidates.max(1), seed, iteration)
            }
        };
        let Some(best) = best.filter(|c| c.gain > 0.0) else {
            break StopReason::NoImprovement;
        };
        obj.merge(best.p, best.q);
        active.retain(|&c| c != best.q);
        owner.iter_mut().filter(|o| **o == best.q).for_each(|o| *o = best.p);
        if options.resync_every > 0 && iteration % options.resync_every == 0 {
            obj.resync();
        }
        steps.push(MergeStep {
            iteration,
            p: best.p,
            q: best.q,
            objective: obj.value(),
            alliances: active.len(),
        });
    };

    let label_of: std::collections::HashMap<usize, usize> =
        active.iter().enumerate().map(|(label, &c)| (c, label)).collect();
    let assignment = owner.iter().map(|o| label_of[o]).collect();
    let partition = AlliancePartition::from_assignment(assignment, active.len())?;
    Ok(GreedyTrace {
        initial_objective,
        initial_alliances: n,
        steps,
        stop,
        partition,
    })
}

/// Incremental form of the estimated objective over carrier clusters.
///
/// Keeps the cluster-pair HHI cross terms `C[p][q]`, the carrier-to-cluster
/// MPC sums `R[t][q]`, and each carrier's current log MPC, so a merge gain
/// costs `O(|p| + |q|)` and a merge costs `O(K + |T|)`.
pub struct AllianceObjective<'a> {
    base: &'a PairwiseObjective,
    beta: f64,
    gamma: f64,
    n: usize,
    members: Vec<Vec<usize>>,
    cluster_of: Vec<usize>,
    cross: Vec<f64>,
    reach: Vec<f64>,
    log_mpc: Vec<f64>,
}

impl<'a> AllianceObjective<'a> {
    pub fn new(base: &'a PairwiseObjective, beta: f64, gamma: f64) -> Self {
        let n = base.n_carriers();
        let mut obj = Self {
            base,
            beta,
            gamma,
            n,
            members: (0..n).map(|c| vec![c]).collect(),
            cluster_of: (0..n).collect(),
            cross: vec![0.0; n * n],
            reach: vec![0.0; n * n],
            log_mpc: vec![0.0; n],
        };
        obj.resync();
        obj
    }

    fn floor_ln(&self, m: f64) -> f64 {
        m.max(self.base.epsilon()).ln()
    }

    pub fn hhi_mean(&self) -> f64 {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_empty())
            .map(|(p, _)| self.cross[p * self.n + p])
            .sum()
    }

    pub fn mpc_term(&self) -> f64 {
        self.log_mpc.iter().sum::<f64>() / self.n as f64
    }

    fn mpc_gain_into(&self, from: usize, into: usize) -> f64 {
        let mut gain = 0.0;
        for &t in &self.members[from] {
            let extra = self.reach[t * self.n + into];
            if extra != 0.0 {
                let m = self.reach[t * self.n + from] + extra;
                gain += self.floor_ln(m) - self.log_mpc[t];
            }
        }
        gain
    }
}

impl MergeObjective for AllianceObjective<'_> {
    fn n_items(&self) -> usize {
        self.n
    }

    fn value(&self) -> f64 {
        -self.beta * self.hhi_mean() + self.gamma * self.mpc_term()
    }

    fn merge_gain(&self, p: usize, q: usize) -> f64 {
        let hhi = 2.0 * self.cross[p * self.n + q];
        let mpc = self.mpc_gain_into(p, q) + self.mpc_gain_into(q, p);
        -self.beta * hhi + self.gamma * mpc / self.n as f64
    }

    fn standalone(&self, p: usize) -> f64 {
        let own: f64 = self.members[p].iter().map(|&t| self.log_mpc[t]).sum();
        -self.beta * self.cross[p * self.n + p] + self.gamma * own / self.n as f64
    }

    fn merge(&mut self, p: usize, q: usize) {
        let n = self.n;
        let pq = self.cross[p * n + q];
        let diag = self.cross[p * n + p] + self.cross[q * n + q] + 2.0 * pq;
        for r in 0..n {
            if self.members[r].is_empty() || r == p || r == q {
                continue;
            }
            let v = self.cross[p * n + r] + self.cross[q * n + r];
            self.cross[p * n + r] = v;
            self.cross[r * n + p] = v;
        }
        self.cross[p * n + p] = diag;
        for r in 0..n {
            self.cross[q * n + r] = 0.0;
            self.cross[r * n + q] = 0.0;
        }
        for t in 0..n {
            self.reach[t * n + p] += self.reach[t * n + q];
            self.reach[t * n + q] = 0.0;
        }
        let moved = std::mem::take(&mut self.members[q]);
        for &t in &moved {
            self.cluster_of[t] = p;
        }
        self.members[p].extend(moved);
        self.members[p].sort_unstable();
        for i in 0..self.members[p].len() {
            let t = self.members[p][i];
            self.log_mpc[t] = self.floor_ln(self.reach[t * n + p]);
        }
    }

    fn resync(&mut self) {
        let n = self.n;
        self.cross.iter_mut().for_each(|v| *v = 0.0);
        self.reach.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..n {
            let ca = self.cluster_of[a];
            for b in 0..n {
                let cb = self.cluster_of[b];
                self.cross[ca * n + cb] += self.base.hhi(a, b);
                self.reach[a * n + cb] += self.base.mpc(a, b);
            }
        }
        for t in 0..n {
            self.log_mpc[t] = self.floor_ln(self.reach[t * n + self.cluster_of[t]]);
        }
    }
}

/// Greedy partitioning on the estimated objective of one realization.
pub fn greedy_partition(
    g: &MultiAttributeGraph,
    realization: &Realization,
    beta: f64,
    gamma: f64,
) -> Result<GreedyTrace> {
    greedy_with_options(g, realization, beta, gamma, &GreedyOptions::default())
}

/// Greedy partitioning that scores only `n_candidates` sampled pairs per
/// iteration.
pub fn greedy_pair_sampling(
    g: &MultiAttributeGraph,
    realization: &Realization,
    beta: f64,
    gamma: f64,
    n_candidates: usize,
    seed: u64,
) -> Result<GreedyTrace> {
    if n_candidates == 0 {
        return Err(Error::InvalidArgument("n_candidates must be at least 1".into()));
    }
    let options = GreedyOptions {
        selection: PairSelection::Sampled { n_candidates, seed },
        ..GreedyOptions::default()
    };
    greedy_with_options(g, realization, beta, gamma, &options)
}

pub fn greedy_with_options(
    g: &MultiAttributeGraph,
    realization: &Realization,
    beta: f64,
    gamma: f64,
    options: &GreedyOptions,
) -> Result<GreedyTrace> {
    if g.n_carriers() == 0 || g.n_segments() == 0 {
        return Err(Error::InvalidArgument("empty graph or zero carriers".into()));
    }
    crate::metrics::objective(0.0, 0.0, beta, gamma)?;
    let base = PairwiseObjective::from_realization(g, realization)?;
    let mut obj = AllianceObjective::new(&base, beta, gamma);
    agglomerate(&mut obj, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ScheduleRecord;
    use crate::sampling::SamplingConfig;

    /// Every merge gains 1.
    struct Flat {
        n: usize,
        merges: usize,
    }

    impl MergeObjective for Flat {
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

    #[test]
    fn ties_pick_smallest_pair() {
        let mut f = Flat { n: 4, merges: 0 };
        let trace = agglomerate(&mut f, &GreedyOptions::default()).unwrap();
        let pairs: Vec<_> = trace.steps.iter().map(|s| (s.p, s.q)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(trace.stop, StopReason::SingleAlliance);
        assert_eq!(trace.partition.n_alliances(), 1);
    }

    #[test]
    fn merge_cap_respected() {
        let mut f = Flat { n: 10, merges: 0 };
        let opts = GreedyOptions {
            max_merges: Some(4),
            ..GreedyOptions::default()
        };
        let trace = agglomerate(&mut f, &opts).unwrap();
        assert_eq!(trace.completed_merges(), 4);
        assert_eq!(trace.final_alliances(), 6);
        assert_eq!(trace.partition.n_alliances(), 6);
        assert_eq!(trace.stop, StopReason::MergeCap);
    }

    fn toy_realization() -> (MultiAttributeGraph, Realization) {
        let r = |o: &str, d: &str, c: &str, w: f64| ScheduleRecord::new(o, d, c, w);
        let g = MultiAttributeGraph::build(&[
            r("A", "B", "x", 3.0),
            r("A", "B", "y", 1.0),
            r("B", "C", "y", 2.0),
            r("B", "C", "z", 2.0),
            r("C", "A", "x", 1.0),
            r("C", "A", "z", 5.0),
            r("B", "A", "w", 1.0),
            r("C", "B", "w", 1.0),
        ])
        .unwrap();
        let real = Realization::draw(&g, &SamplingConfig::new(30, 2, 40, 8)).unwrap();
        (g, real)
    }

    #[test]
    fn incremental_matches_recomputation() {
        let (g, real) = toy_realization();
        let base = PairwiseObjective::from_realization(&g, &real).unwrap();
        let mut obj = AllianceObjective::new(&base, 0.4, 0.6);
        let predicted = obj.value() + obj.merge_gain(0, 2);
        obj.merge(0, 2);
        assert!((obj.value() - predicted).abs() < 1e-12);
        let p = AlliancePartition::from_assignment(vec![0, 1, 0, 3], 4).unwrap();
        let direct = base.breakdown(&p, 0.4, 0.6).unwrap().objective;
        assert!((obj.value() - direct).abs() < 1e-12);
        obj.merge(1, 3);
        let before = obj.value();
        obj.resync();
        assert!((obj.value() - before).abs() < 1e-12);
    }

    #[test]
    fn hhi_only_never_merges() {
        let (g, real) = toy_realization();
        let trace = greedy_partition(&g, &real, 1.0, 0.0).unwrap();
        assert_eq!(trace.completed_merges(), 0);
        assert_eq!(trace.partition, AlliancePartition::singletons(g.n_carriers()));
    }

    #[test]
    fn trace_is_strictly_improving() {
        let (g, real) = toy_realization();
        let trace = greedy_partition(&g, &real, 0.1, 0.9).unwrap();
        let mut prev = trace.initial_objective;
        for s in &trace.steps {
            assert!(s.objective > prev);
            prev = s.objective;
        }
        assert_eq!(trace.final_alliances(), trace.partition.n_alliances());
    }

    #[test]
    fn single_candidate_terminates() {
        let (g, real) = toy_realization();
        let trace = greedy_pair_sampling(&g, &real, 0.1, 0.9, 1, 3).unwrap();
        assert!(trace.completed_merges() < g.n_carriers());
        assert!(greedy_pair_sampling(&g, &real, 0.1, 0.9, 0, 3).is_err());
    }
}
