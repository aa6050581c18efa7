//! Alliance partitioning algorithms and the mixed-integer model builder.

pub mod enumerate;
pub mod evaluate;
pub mod export;
pub mod greedy;
pub mod lp;
pub mod miqp;
pub mod pairwise;
pub mod pwl;
pub mod tiny;

pub use enumerate::{enumerate_partitions, EnumerationResult, LandscapePoint};
pub use evaluate::evaluate_partition;
pub use export::{export_model, parse_model, ModelFormat};
pub use greedy::{greedy_pair_sampling, greedy_partition, GreedyOptions, GreedyTrace, MergeStep, StopReason};
pub use miqp::{build_miqp, MiqpModel, MiqpParams};
pub use pairwise::PairwiseObjective;
pub use pwl::{pwl_breakpoints, PwlCurve};
pub use tiny::{solve_tiny, TinySolution};
