//! Exhaustive solver for small models.
//!
//! Assignments that differ only by a permutation of alliance labels have the
//! same value, so it enumerates set partitions with at most `K` blocks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimize::enumerate::RestrictedGrowth;
use crate::optimize::miqp::{MiqpModel, ModelEvaluation};
use crate::partition::AlliancePartition;

pub const DEFAULT_MAX_CARRIERS: usize = 8;
pub const DEFAULT_MAX_ALLIANCES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct TinySolution {
    pub labels: Vec<usize>,
    pub evaluation: ModelEvaluation,
    /// Assignments examined.
    pub explored: usize,
}

impl TinySolution {
    pub fn partition(&self) -> AlliancePartition {
        AlliancePartition::from_blocks_labels(&self.labels)
    }

    /// Minimization objective of the model.
    pub fn objective(&self) -> f64 {
        self.evaluation.objective
    }
}

pub fn solve_tiny(model: &MiqpModel, max_carriers: usize, max_alliances: usize) -> Result<TinySolution> {
    let n = model.n_carriers();
    if n > max_carriers {
        return Err(Error::SizeCap {
            what: "carriers for the exhaustive solver".into(),
            actual: n,
            cap: max_carriers,
        });
    }
    if model.n_alliances > max_alliances {
        return Err(Error::SizeCap {
            what: "alliances for the exhaustive solver".into(),
            actual: model.n_alliances,
            cap: max_alliances,
        });
    }
    model.validate()?;
    let candidates: Vec<Vec<usize>> = RestrictedGrowth::new(n, model.n_alliances).collect();
    let explored = candidates.len();
    let evaluated: Vec<(usize, Vec<usize>, ModelEvaluation)> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(id, labels)| model.evaluate(&labels).map(|e| (id, labels, e)))
        .collect::<Result<_>>()?;
    let (_, labels, evaluation) = evaluated
        .into_iter()
        .reduce(|a, b| if b.2.objective < a.2.objective { b } else { a })
        .ok_or_else(|| Error::InvalidArgument("model has no carriers".into()))?;
    Ok(TinySolution {
        labels,
        evaluation,
        explored,
    })
}
