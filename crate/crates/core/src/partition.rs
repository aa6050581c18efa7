use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of every carrier to exactly one of `K` alliances.
///
/// Alliance indices are 0-based in the API; files use 1-based labels.
/// Empty alliances are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlliancePartition {
    assignment: Vec<usize>,
    n_alliances: usize,
}

impl AlliancePartition {
    pub fn from_assignment(assignment: Vec<usize>, n_alliances: usize) -> Result<Self> {
        if n_alliances == 0 {
            return Err(Error::InvalidPartition("alliance count must be positive".into()));
        }
        if let Some((carrier, &k)) = assignment.iter().enumerate().find(|(_, &k)| k >= n_alliances) {
            return Err(Error::InvalidPartition(format!(
                "carrier {carrier} assigned to alliance {k}, but only {n_alliances} exist"
            )));
        }
        Ok(Self {
            assignment,
            n_alliances,
        })
    }

    pub fn singletons(n_carriers: usize) -> Self {
        Self {
            assignment: (0..n_carriers).collect(),
            n_alliances: n_carriers.max(1),
        }
    }

    pub fn all_in_one(n_carriers: usize) -> Self {
        Self {
            assignment: vec![0; n_carriers],
            n_alliances: 1,
        }
    }

    /// Builds a partition from a restricted-growth string, using its block
    /// count as `K`.
    pub fn from_blocks_labels(labels: &[usize]) -> Self {
        let k = labels.iter().copied().max().map_or(1, |m| m + 1);
        Self {
            assignment: labels.to_vec(),
            n_alliances: k,
        }
    }

    pub fn n_carriers(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_alliances(&self) -> usize {
        self.n_alliances
    }

    #[inline]
    pub fn alliance_of(&self, carrier: usize) -> usize {
        self.assignment[carrier]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn members(&self, k: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == k)
            .map(|(c, _)| c)
            .collect()
    }

    /// Non-empty blocks, ordered by smallest member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let canon = self.canonical();
        let mut blocks = vec![Vec::new(); canon.n_alliances];
        for (c, &k) in canon.assignment.iter().enumerate() {
            blocks[k].push(c);
        }
        blocks
    }

    pub fn non_empty_count(&self) -> usize {
        let mut seen = vec![false; self.n_alliances];
        for &k in &self.assignment {
            seen[k] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Moves every member of alliance `q` into alliance `p`. `K` is unchanged,
    /// so `q` becomes empty.
    pub fn merged(&self, p: usize, q: usize) -> Result<Self> {
        for k in [p, q] {
            if k >= self.n_alliances {
                return Err(Error::AllianceOutOfRange {
                    index: k,
                    count: self.n_alliances,
                });
            }
        }
        let assignment = self
            .assignment
            .iter()
            .map(|&k| if k == q { p } else { k })
            .collect();
        Ok(Self {
            assignment,
            n_alliances: self.n_alliances,
        })
    }

    /// Relabels alliances in order of first appearance and drops empty ones,
    /// so two partitions with the same blocks compare equal.
    pub fn canonical(&self) -> Self {
        let mut relabel = vec![usize::MAX; self.n_alliances];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&k| {
                if relabel[k] == usize::MAX {
                    relabel[k] = next;
                    next += 1;
                }
                relabel[k]
            })
            .collect();
        Self {
            assignment,
            n_alliances: next.max(1),
        }
    }

    pub fn same_blocks(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// Applies a relabeling `new = perm[old]`; `perm` must be a permutation
    /// of `0..K`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if perm.len() != self.n_alliances || sorted.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(Error::InvalidArgument("relabeling is not a permutation of 0..K".into()));
        }
        Ok(Self {
            assignment: self.assignment.iter().map(|&k| perm[k]).collect(),
            n_alliances: self.n_alliances,
        })
    }
}
