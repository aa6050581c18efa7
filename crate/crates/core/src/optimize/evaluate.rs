//! Out-of-sample scoring of a partition.

use crate::error::{Error, Result};
use crate::graph::MultiAttributeGraph;
use crate::metrics::{estimated_breakdown, ObjectiveBreakdown};
use crate::partition::AlliancePartition;
use crate::sampling::Realization;

/// Scores `partition` on `fresh`, a realization that must not share its seed
/// with any realization used to produce the partition.
pub fn evaluate_partition(
    g: &MultiAttributeGraph,
    partition: &AlliancePartition,
    fresh: &Realization,
    beta: f64,
    gamma: f64,
    optimization_seeds: &[u64],
) -> Result<ObjectiveBreakdown> {
    if optimization_seeds.contains(&fresh.seed()) {
        return Err(Error::SeedCollision(fresh.seed()));
    }
    estimated_breakdown(g, partition, fresh, beta, gamma)
}
