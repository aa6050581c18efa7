//! Exhaustive set-partition search on the exact objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiAttributeGraph;
use crate::metrics::{self, ObjectiveBreakdown};
use crate::optimize::pairwise::PairwiseObjective;
use crate::partition::AlliancePartition;

pub const DEFAULT_MAX_CARRIERS: usize = 10;

/// Bell numbers, `bell(n)` set partitions of `n` items.
pub fn bell(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let prev = *next.last().unwrap();
            next.push(prev + v);
        }
        row = next;
    }
    row[0]
}

/// Restricted growth strings of length `n` with at most `max_blocks`
/// distinct labels, in lexicographic order. Each string is one set
/// partition; label `k` first appears after labels `0..k`.
#[derive(Clone, Debug)]
pub struct RestrictedGrowth {
    labels: Vec<usize>,
    max_seen: Vec<usize>,
    max_blocks: usize,
    started: bool,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize, max_blocks: usize) -> Self {
        Self {
            labels: vec![0; n],
            max_seen: vec![0; n],
            max_blocks: max_blocks.max(1),
            started: false,
            done: n == 0,
        }
    }

    pub fn all(n: usize) -> Self {
        Self::new(n, n)
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.labels.clone());
        }
        let n = self.labels.len();
        // rightmost position that can still grow
        let mut i = n;
        while i > 1 {
            i -= 1;
            let cap = (self.max_seen[i - 1] + 1).min(self.max_blocks - 1);
            if self.labels[i] < cap {
                self.labels[i] += 1;
                self.max_seen[i] = self.max_seen[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.max_seen[j] = self.max_seen[i];
                }
                return Some(self.labels.clone());
            }
        }
        self.done = true;
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub partition_id: usize,
    pub labels: Vec<usize>,
    pub breakdown: ObjectiveBreakdown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationResult {
    pub best: AlliancePartition,
    pub best_breakdown: ObjectiveBreakdown,
    pub best_id: usize,
    pub landscape: Vec<LandscapePoint>,
}

/// Evaluates every set partition of the carriers on the exact objective.
/// Ties go to the lowest partition id.
pub fn enumerate_partitions(
    g: &MultiAttributeGraph,
    walk_length: usize,
    beta: f64,
    gamma: f64,
    max_carriers: usize,
) -> Result<EnumerationResult> {
    let n = g.n_carriers();
    if n > max_carriers {
        return Err(Error::SizeCap {
            what: "carriers for enumeration".into(),
            actual: n,
            cap: max_carriers,
        });
    }
    metrics::objective(0.0, 0.0, beta, gamma)?;
    let pw = PairwiseObjective::exact(g, walk_length)?;
    enumerate_with(&pw, beta, gamma)
}

/// Enumeration over an already-built pairwise objective.
pub fn enumerate_with(pw: &PairwiseObjective, beta: f64, gamma: f64) -> Result<EnumerationResult> {
    let all: Vec<Vec<usize>> = RestrictedGrowth::all(pw.n_carriers()).collect();
    let landscape: Vec<LandscapePoint> = all
        .into_par_iter()
        .enumerate()
        .map(|(id, labels)| {
            let (h, m) = pw.terms(&labels);
            metrics::objective(h, m, beta, gamma).map(|breakdown| LandscapePoint {
                partition_id: id,
                labels,
                breakdown,
            })
        })
        .collect::<Result<_>>()?;
    let best = landscape
        .iter()
        .reduce(|a, b| {
            if b.breakdown.objective > a.breakdown.objective {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::InvalidArgument("no carriers to partition".into()))?;
    Ok(EnumerationResult {
        best: AlliancePartition::from_blocks_labels(&best.labels),
        best_breakdown: best.breakdown,
        best_id: best.partition_id,
        landscape,
    })
}
