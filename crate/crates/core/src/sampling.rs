//! Weighted random walks, conditional carrier sampling along walks, and
//! per-segment carrier sample sets.
//!
//! Every random stream is a ChaCha8 generator keyed directly by
//! `(seed, domain, a, b)`, where `(a, b)` is `(root, walk)` for walks and
//! `(segment, 0)` for segment samples. Steps draw sequentially inside their
//! stream, so output does not depend on thread count or scheduling.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AirportId, CarrierId, MultiAttributeGraph};

/// Marks positions past the end of a truncated walk.
pub const NONE: u32 = u32::MAX;

const DOMAIN_WALK: u64 = 0x5741_4c4b; // "WALK"
const DOMAIN_CARRIER: u64 = 0x4341_5252; // "CARR"
const DOMAIN_SEGMENT: u64 = 0x5345_474d; // "SEGM"

pub(crate) fn keyed_rng(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Walks launched from every root airport.
    pub n_walks: usize,
    /// Segments per walk.
    pub walk_length: usize,
    /// Carrier draws per segment.
    pub n_segment_samples: usize,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(n_walks: usize, walk_length: usize, n_segment_samples: usize, seed: u64) -> Self {
        Self {
            n_walks,
            walk_length,
            n_segment_samples,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_walks", self.n_walks),
            ("walk_length", self.walk_length),
            ("n_segment_samples", self.n_segment_samples),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.walk_length > u32::MAX as usize || self.n_walks > u32::MAX as usize {
            return Err(Error::InvalidArgument("sampling dimensions too large".into()));
        }
        Ok(())
    }
}

/// Precomputed samplers for every airport's neighbor PMF and every segment's
/// carrier PMF.
pub struct SamplerTables {
    neighbors: Vec<Option<WeightedIndex<f64>>>,
    carriers: Vec<WeightedIndex<f64>>,
}

impl SamplerTables {
    pub fn new(g: &MultiAttributeGraph) -> Self {
        let neighbors = (0..g.n_airports() as u32)
            .map(|a| {
                let out = g.out_segments(AirportId(a));
                if out.is_empty() {
                    None
                } else {
                    Some(WeightedIndex::new(out.iter().map(|s| s.total)).expect("positive segment totals"))
                }
            })
            .collect();
        let carriers = g
            .segments()
            .iter()
            .map(|s| WeightedIndex::new(&s.weights).expect("positive carrier weights"))
            .collect();
        Self { neighbors, carriers }
    }

    /// Samples the index (into `g.segments()`) of the next segment out of `u`.
    fn next_segment<R: rand::Rng>(&self, g: &MultiAttributeGraph, u: u32, rng: &mut R) -> Option<usize> {
        let dist = self.neighbors[u as usize].as_ref()?;
        Some(g.out_range(AirportId(u)).start + dist.sample(rng))
    }

    fn carrier_slot<R: rand::Rng>(&self, segment: usize, rng: &mut R) -> usize {
        self.carriers[segment].sample(rng)
    }
}

/// Airport tensor `V`: for every root and walk, `L + 1` airports. Walks that
/// hit an airport without out-segments stop early and are padded with
/// [`NONE`].
#[derive(Clone, Debug, PartialEq)]
pub struct WalkAirports {
    pub roots: Vec<AirportId>,
    pub n_walks: usize,
    pub walk_length: usize,
    pub seed: u64,
    /// Realized step count per `(root, walk)`.
    pub steps: Vec<u32>,
    /// Shape `(roots, n_walks, walk_length + 1)`.
    pub airports: Vec<u32>,
}

impl WalkAirports {
    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn walk(&self, root: usize, walk: usize) -> &[u32] {
        let w = self.walk_length + 1;
        let start = (root * self.n_walks + walk) * w;
        &self.airports[start..start + w]
    }

    pub fn steps(&self, root: usize, walk: usize) -> usize {
        self.steps[root * self.n_walks + walk] as usize
    }
}

/// Carrier tensor `T` and weight tensor `W`, shape `(roots, n_walks, L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkCarriers {
    pub carriers: Vec<u32>,
    pub weights: Vec<f64>,
}

/// The full walk realization consumed by the estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkTensors {
    pub walks: WalkAirports,
    pub carriers: Vec<u32>,
    pub weights: Vec<f64>,
}

impl WalkTensors {
    pub fn assemble(walks: WalkAirports, steps: WalkCarriers) -> Self {
        Self {
            walks,
            carriers: steps.carriers,
            weights: steps.weights,
        }
    }

    pub fn n_roots(&self) -> usize {
        self.walks.n_roots()
    }

    pub fn n_walks(&self) -> usize {
        self.walks.n_walks
    }

    pub fn walk_length(&self) -> usize {
        self.walks.walk_length
    }

    pub fn seed(&self) -> u64 {
        self.walks.seed
    }

    pub fn roots(&self) -> &[AirportId] {
        &self.walks.roots
    }

    pub fn steps(&self, root: usize, walk: usize) -> usize {
        self.walks.steps(root, walk)
    }

    /// Carriers sampled along one walk, realized steps only.
    pub fn walk_carriers(&self, root: usize, walk: usize) -> impl Iterator<Item = CarrierId> + '_ {
        let l = self.walk_length();
        let start = (root * self.n_walks() + walk) * l;
        self.carriers[start..start + self.steps(root, walk)]
            .iter()
            .map(|&c| CarrierId(c))
    }

    pub fn walk_weights(&self, root: usize, walk: usize) -> &[f64] {
        let l = self.walk_length();
        let start = (root * self.n_walks() + walk) * l;
        &self.weights[start..start + self.steps(root, walk)]
    }

    pub fn walk_airports(&self, root: usize, walk: usize) -> &[u32] {
        self.walks.walk(root, walk)
    }
}

/// Runs `n_walks` weighted random walks of `walk_length` segments from every
/// walk-eligible airport.
pub fn run_walks(g: &MultiAttributeGraph, cfg: &SamplingConfig) -> Result<WalkAirports> {
    cfg.validate()?;
    let roots = g.walk_roots().to_vec();
    if roots.is_empty() {
        return Err(Error::InvalidArgument("graph has no walk-eligible airport".into()));
    }
    let tables = SamplerTables::new(g);
    Ok(run_walks_with(g, &tables, roots, cfg))
}

fn run_walks_with(
    g: &MultiAttributeGraph,
    tables: &SamplerTables,
    roots: Vec<AirportId>,
    cfg: &SamplingConfig,
) -> WalkAirports {
    let width = cfg.walk_length + 1;
    let mut airports = vec![NONE; roots.len() * cfg.n_walks * width];
    let mut steps = vec![0u32; roots.len() * cfg.n_walks];

    airports
        .par_chunks_mut(width)
        .zip(steps.par_iter_mut())
        .enumerate()
        .for_each(|(flat, (path, realized))| {
            let root_idx = flat / cfg.n_walks;
            let walk_idx = flat % cfg.n_walks;
            let mut rng = keyed_rng(cfg.seed, DOMAIN_WALK, root_idx as u64, walk_idx as u64);
            let mut current = roots[root_idx].0;
            path[0] = current;
            let mut taken = 0;
            for slot in path.iter_mut().skip(1) {
                match tables.next_segment(g, current, &mut rng) {
                    Some(seg) => {
                        current = g.segment(seg).destination.0;
                        *slot = current;
                        taken += 1;
                    }
                    None => break,
                }
            }
            *realized = taken;
        });

    WalkAirports {
        roots,
        n_walks: cfg.n_walks,
        walk_length: cfg.walk_length,
        seed: cfg.seed,
        steps,
        airports,
    }
}

/// Draws one carrier per realized walk step from that segment's carrier PMF
/// and records its ASM.
pub fn conditional_sample(
    g: &MultiAttributeGraph,
    walks: &WalkAirports,
    cfg: &SamplingConfig,
) -> Result<WalkCarriers> {
    let tables = SamplerTables::new(g);
    conditional_sample_with(g, &tables, walks, cfg)
}

fn conditional_sample_with(
    g: &MultiAttributeGraph,
    tables: &SamplerTables,
    walks: &WalkAirports,
    cfg: &SamplingConfig,
) -> Result<WalkCarriers> {
    let l = walks.walk_length;
    let n = walks.n_roots() * walks.n_walks;
    let mut carriers = vec![NONE; n * l];
    let mut weights = vec![0.0f64; n * l];

    carriers
        .par_chunks_mut(l)
        .zip(weights.par_chunks_mut(l))
        .enumerate()
        .try_for_each(|(flat, (cs, ws))| -> Result<()> {
            let root_idx = flat / walks.n_walks;
            let walk_idx = flat % walks.n_walks;
            let path = walks.walk(root_idx, walk_idx);
            let taken = walks.steps(root_idx, walk_idx);
            let mut rng = keyed_rng(cfg.seed, DOMAIN_CARRIER, root_idx as u64, walk_idx as u64);
            for step in 0..taken {
                let (u, v) = (AirportId(path[step]), AirportId(path[step + 1]));
                let seg_idx = g.find_segment(u, v).ok_or_else(|| {
                    Error::Integrity(format!(
                        "walk ({root_idx}, {walk_idx}) step {step} uses ({}, {}) which is not a segment",
                        u.0, v.0
                    ))
                })?;
                let seg = g.segment(seg_idx);
                let slot = tables.carrier_slot(seg_idx, &mut rng);
                cs[step] = seg.carriers[slot].0;
                ws[step] = seg.weights[slot];
            }
            Ok(())
        })?;

    Ok(WalkCarriers { carriers, weights })
}

/// Runs walks and conditional sampling in one pass over shared tables.
pub fn sample_walk_tensors(g: &MultiAttributeGraph, cfg: &SamplingConfig) -> Result<WalkTensors> {
    cfg.validate()?;
    let roots = g.walk_roots().to_vec();
    if roots.is_empty() {
        return Err(Error::InvalidArgument("graph has no walk-eligible airport".into()));
    }
    let tables = SamplerTables::new(g);
    let walks = run_walks_with(g, &tables, roots, cfg);
    let steps = conditional_sample_with(g, &tables, &walks, cfg)?;
    Ok(WalkTensors::assemble(walks, steps))
}

/// Carrier draws for every segment, `n_segment_samples` each, flattened in
/// segment order.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSampleSet {
    pub n_samples: usize,
    pub seed: u64,
    pub samples: Vec<u32>,
}

impl SegmentSampleSet {
    pub fn n_segments(&self) -> usize {
        if self.n_samples == 0 {
            0
        } else {
            self.samples.len() / self.n_samples
        }
    }

    pub fn segment(&self, index: usize) -> &[u32] {
        &self.samples[index * self.n_samples..(index + 1) * self.n_samples]
    }

    pub fn segment_carriers(&self, index: usize) -> impl Iterator<Item = CarrierId> + '_ {
        self.segment(index).iter().map(|&c| CarrierId(c))
    }
}

/// Draws `n_segment_samples` i.i.d. carriers from every segment's PMF.
pub fn sample_segments(g: &MultiAttributeGraph, cfg: &SamplingConfig) -> Result<SegmentSampleSet> {
    cfg.validate()?;
    let tables = SamplerTables::new(g);
    let n = cfg.n_segment_samples;
    let mut samples = vec![NONE; g.n_segments() * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(seg_idx, out)| {
        let mut rng = keyed_rng(cfg.seed, DOMAIN_SEGMENT, seg_idx as u64, 0);
        let seg = g.segment(seg_idx);
        for slot in out.iter_mut() {
            *slot = seg.carriers[tables.carrier_slot(seg_idx, &mut rng)].0;
        }
    });
    Ok(SegmentSampleSet {
        n_samples: n,
        seed: cfg.seed,
        samples,
    })
}

/// Both halves of one sampling realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub tensors: WalkTensors,
    pub segments: SegmentSampleSet,
}

impl Realization {
    pub fn draw(g: &MultiAttributeGraph, cfg: &SamplingConfig) -> Result<Self> {
        Ok(Self {
            tensors: sample_walk_tensors(g, cfg)?,
            segments: sample_segments(g, cfg)?,
        })
    }

    pub fn seed(&self) -> u64 {
        self.tensors.seed()
    }
}
