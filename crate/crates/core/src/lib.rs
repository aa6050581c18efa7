//! Airline network modelling: multi-attribute graphs, sampled competition
//! and market-penetration metrics, and alliance partitioning.

pub mod cache;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod files;
pub mod generator;
pub mod graph;
pub mod metrics;
pub mod optimize;
pub mod partition;
pub mod sampling;

pub use config::ExperimentConfig;
pub use error::{Error, ErrorKind, Result};
pub use graph::{AirportId, CarrierId, MultiAttributeGraph, ScheduleRecord};
pub use partition::AlliancePartition;
pub use sampling::{Realization, SamplingConfig};
