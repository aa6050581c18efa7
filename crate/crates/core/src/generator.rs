//! Synthetic schedules.
//!
//! Each record picks a random ordered airport pair, a random carrier and a
//! log-uniform ASM weight. Records accumulate, so several carriers (and
//! several records of one carrier) can share a segment. Afterwards, airports
//! without an outgoing record take over records from airports that have
//! spares, until every airport is a valid walk root.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MultiAttributeGraph, ScheduleRecord};
use crate::partition::AlliancePartition;
use crate::sampling::keyed_rng;

const DOMAIN_GENERATOR: u64 = 0x4745_4e52; // "GENR"
const DOMAIN_BASELINE: u64 = 0x4241_5345; // "BASE"

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n_airports: usize,
    pub n_segment_records: usize,
    pub n_carriers: usize,
    #[serde(default = "default_asm_min")]
    pub asm_min: f64,
    #[serde(default = "default_asm_max")]
    pub asm_max: f64,
    pub seed: u64,
    /// Redraws allowed while repairing airports with no outgoing record.
    #[serde(default)]
    pub max_redraws: Option<usize>,
}

fn default_asm_min() -> f64 {
    1e3
}

fn default_asm_max() -> f64 {
    1e7
}

impl GeneratorSpec {
    pub fn new(n_airports: usize, n_segment_records: usize, n_carriers: usize, seed: u64) -> Self {
        Self {
            n_airports,
            n_segment_records,
            n_carriers,
            asm_min: default_asm_min(),
            asm_max: default_asm_max(),
            seed,
            max_redraws: None,
        }
    }

    /// 20 airports, 2000 records, 6 carriers.
    pub fn toy(seed: u64) -> Self {
        Self::new(20, 2000, 6, seed)
    }

    /// 3680 airports, 160,732 records, 580 carriers.
    pub fn iata_scale(seed: u64) -> Self {
        Self::new(3680, 160_732, 580, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_airports < 2 {
            return Err(Error::Config("a schedule needs at least 2 airports".into()));
        }
        if self.n_carriers < 1 {
            return Err(Error::Config("a schedule needs at least 1 carrier".into()));
        }
        if self.n_segment_records + 1 < self.n_airports {
            return Err(Error::Config(format!(
                "{} records cannot connect {} airports",
                self.n_segment_records, self.n_airports
            )));
        }
        if !(self.asm_min > 0.0 && self.asm_min <= self.asm_max && self.asm_max.is_finite()) {
            return Err(Error::Config(format!(
                "ASM range [{}, {}] must be positive and ordered",
                self.asm_min, self.asm_max
            )));
        }
        Ok(())
    }
}

fn names(prefix: char, n: usize) -> Vec<String> {
    let width = (n.saturating_sub(1)).to_string().len().max(2);
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub records: Vec<ScheduleRecord>,
    pub graph: MultiAttributeGraph,
    /// Records moved to cover airports without outgoing segments.
    pub redraws: usize,
}

pub fn generate_instance(spec: &GeneratorSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let airports = names('A', spec.n_airports);
    let carriers = names('C', spec.n_carriers);
    let (lo, hi) = (spec.asm_min.ln(), spec.asm_max.ln());
    let mut rng = keyed_rng(spec.seed, DOMAIN_GENERATOR, 0, 0);
    let n = spec.n_airports;

    let draw = |rng: &mut rand_chacha::ChaCha8Rng, origin: Option<usize>| {
        let o = origin.unwrap_or_else(|| rng.gen_range(0..n));
        let mut d = rng.gen_range(0..n - 1);
        if d >= o {
            d += 1;
        }
        let c = rng.gen_range(0..spec.n_carriers);
        let w = if lo == hi { spec.asm_min } else { rng.gen_range(lo..hi).exp() };
        (o, d, c, w)
    };

    let mut raw: Vec<(usize, usize, usize, f64)> = (0..spec.n_segment_records).map(|_| draw(&mut rng, None)).collect();
    let mut out_count = vec![0usize; n];
    for r in &raw {
        out_count[r.0] += 1;
    }

    let cap = spec.max_redraws.unwrap_or(4 * n + 16);
    let mut redraws = 0;
    loop {
        let uncovered: Vec<usize> = (0..n).filter(|&a| out_count[a] == 0).collect();
        if uncovered.is_empty() {
            break;
        }
        let donors: Vec<usize> = (0..raw.len()).filter(|&i| out_count[raw[i].0] >= 2).collect();
        if donors.is_empty() || redraws >= cap {
            return Err(Error::RetryCapExceeded {
                attempts: redraws,
                uncovered: uncovered.iter().map(|&a| airports[a].clone()).collect(),
            });
        }
        let target = uncovered[0];
        let slot = donors[rng.gen_range(0..donors.len())];
        out_count[raw[slot].0] -= 1;
        raw[slot] = draw(&mut rng, Some(target));
        out_count[target] += 1;
        redraws += 1;
    }

    let records: Vec<ScheduleRecord> = raw
        .into_iter()
        .map(|(o, d, c, w)| ScheduleRecord {
            origin: airports[o].clone(),
            destination: airports[d].clone(),
            carrier: carriers[c].clone(),
            asm: w,
        })
        .collect();
    let graph = MultiAttributeGraph::build(&records)?;
    Ok(GeneratedInstance {
        records,
        graph,
        redraws,
    })
}

/// A synthetic stand-in for existing alliance membership: each carrier joins
/// one of `n_groups` alliances with probability 1/2, otherwise stays alone.
/// Group alliances come first and may be empty; singletons follow.
pub fn synthetic_baseline(n_carriers: usize, n_groups: usize, seed: u64) -> Result<AlliancePartition> {
    let mut rng = keyed_rng(seed, DOMAIN_BASELINE, n_carriers as u64, n_groups as u64);
    let mut next = n_groups;
    let assignment = (0..n_carriers)
        .map(|_| {
            if n_groups > 0 && rng.gen_bool(0.5) {
                rng.gen_range(0..n_groups)
            } else {
                next += 1;
                next - 1
            }
        })
        .collect();
    AlliancePartition::from_assignment(assignment, next.max(1))
}
