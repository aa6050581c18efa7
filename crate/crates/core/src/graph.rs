//! Multi-attribute airline network.
//!
//! Airports are nodes, directed flight segments are edges, and every segment
//! carries a map from carrier to available seat-miles (ASM). Identifiers are
//! interned to dense `u32` indices in sorted-name order, so building from a
//! shuffled record list yields the same graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::partition::AlliancePartition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AirportId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CarrierId(pub u32);

impl AirportId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CarrierId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AirportId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "airport#{}", self.0)
    }
}

impl fmt::Display for CarrierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "carrier#{}", self.0)
    }
}

/// One row of a schedule file: `origin,destination,carrier,asm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub origin: String,
    pub destination: String,
    pub carrier: String,
    pub asm: f64,
}

impl ScheduleRecord {
    pub fn new(origin: &str, destination: &str, carrier: &str, asm: f64) -> Self {
        Self {
            origin: origin.to_string(),
            destination: destination.to_string(),
            carrier: carrier.to_string(),
            asm,
        }
    }

    fn validate(&self, row: usize) -> Result<()> {
        let bad = |reason: &str| Error::MalformedRecord {
            row,
            reason: reason.to_string(),
        };
        if self.origin.trim().is_empty() {
            return Err(bad("missing origin"));
        }
        if self.destination.trim().is_empty() {
            return Err(bad("missing destination"));
        }
        if self.carrier.trim().is_empty() {
            return Err(bad("missing carrier"));
        }
        if self.origin == self.destination {
            return Err(bad(&format!("self-loop at `{}`", self.origin)));
        }
        if !self.asm.is_finite() {
            return Err(bad("non-finite ASM"));
        }
        if self.asm < 0.0 {
            return Err(bad("negative ASM"));
        }
        Ok(())
    }
}

/// Emits both directions of every record, for schedules that list each
/// airport pair once.
pub fn symmetrize(records: &[ScheduleRecord]) -> Vec<ScheduleRecord> {
    records
        .iter()
        .flat_map(|r| {
            let back = ScheduleRecord {
                origin: r.destination.clone(),
                destination: r.origin.clone(),
                carrier: r.carrier.clone(),
                asm: r.asm,
            };
            [r.clone(), back]
        })
        .collect()
}

/// A directed segment and the carriers operating it, sorted by carrier id.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub origin: AirportId,
    pub destination: AirportId,
    pub carriers: Vec<CarrierId>,
    pub weights: Vec<f64>,
    pub total: f64,
}

impl Segment {
    pub fn weight_of(&self, carrier: CarrierId) -> f64 {
        match self.carriers.binary_search(&carrier) {
            Ok(pos) => self.weights[pos],
            Err(_) => 0.0,
        }
    }

    /// ASM share of each carrier, aligned with `carriers`.
    pub fn shares(&self) -> impl Iterator<Item = (CarrierId, f64)> + '_ {
        self.carriers
            .iter()
            .zip(&self.weights)
            .map(move |(&c, &w)| (c, w / self.total))
    }
}

/// Finite probability mass function over a list of outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePmf<T> {
    outcomes: Vec<T>,
    probabilities: Vec<f64>,
}

impl<T: Copy + PartialEq> DiscretePmf<T> {
    /// Normalizes non-negative weights into a PMF.
    pub fn from_weights(outcomes: Vec<T>, weights: &[f64]) -> Result<Self> {
        if outcomes.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "outcome and weight lists differ in length".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "PMF weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("PMF weights sum to zero".into()));
        }
        let probabilities = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            outcomes,
            probabilities,
        })
    }

    pub fn outcomes(&self) -> &[T] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn prob(&self, outcome: T) -> f64 {
        self.outcomes
            .iter()
            .position(|&o| o == outcome)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, f64)> + '_ {
        self.outcomes
            .iter()
            .copied()
            .zip(self.probabilities.iter().copied())
    }
}

#[derive(Clone, Debug)]
pub struct MultiAttributeGraph {
    airports: Vec<String>,
    carriers: Vec<String>,
    segments: Vec<Segment>,
    /// CSR offsets into `segments`, which are sorted by origin.
    out_offsets: Vec<usize>,
    walk_roots: Vec<AirportId>,
}

impl MultiAttributeGraph {
    /// Builds the graph from schedule records.
    ///
    /// Duplicate `(origin, destination, carrier)` rows are summed and
    /// zero-ASM rows are dropped. Airports and carriers that only appear on
    /// dropped rows are not part of the graph.
    pub fn build(records: &[ScheduleRecord]) -> Result<Self> {
        for (row, r) in records.iter().enumerate() {
            r.validate(row)?;
        }
        let kept: Vec<&ScheduleRecord> = records.iter().filter(|r| r.asm > 0.0).collect();

        let airport_names: BTreeSet<&str> = kept
            .iter()
            .flat_map(|r| [r.origin.as_str(), r.destination.as_str()])
            .collect();
        let carrier_names: BTreeSet<&str> = kept.iter().map(|r| r.carrier.as_str()).collect();
        let airports: Vec<String> = airport_names.iter().map(|s| s.to_string()).collect();
        let carriers: Vec<String> = carrier_names.iter().map(|s| s.to_string()).collect();
        let airport_index = |name: &str| AirportId(airports.binary_search_by(|a| a.as_str().cmp(name)).unwrap() as u32);
        let carrier_index = |name: &str| CarrierId(carriers.binary_search_by(|a| a.as_str().cmp(name)).unwrap() as u32);

        let mut weights: BTreeMap<(AirportId, AirportId), BTreeMap<CarrierId, f64>> = BTreeMap::new();
        for r in &kept {
            let key = (airport_index(&r.origin), airport_index(&r.destination));
            *weights
                .entry(key)
                .or_default()
                .entry(carrier_index(&r.carrier))
                .or_insert(0.0) += r.asm;
        }

        let segments: Vec<Segment> = weights
            .into_iter()
            .map(|((origin, destination), per_carrier)| {
                let (carriers, weights): (Vec<_>, Vec<_>) = per_carrier.into_iter().unzip();
                let total = weights.iter().sum();
                Segment {
                    origin,
                    destination,
                    carriers,
                    weights,
                    total,
                }
            })
            .collect();

        Ok(Self::from_parts(airports, carriers, segments))
    }

    fn from_parts(airports: Vec<String>, carriers: Vec<String>, segments: Vec<Segment>) -> Self {
        let mut out_offsets = vec![0usize; airports.len() + 1];
        for s in &segments {
            out_offsets[s.origin.index() + 1] += 1;
        }
        for i in 0..airports.len() {
            out_offsets[i + 1] += out_offsets[i];
        }
        let walk_roots = (0..airports.len())
            .filter(|&i| out_offsets[i + 1] > out_offsets[i])
            .map(|i| AirportId(i as u32))
            .collect();
        Self {
            airports,
            carriers,
            segments,
            out_offsets,
            walk_roots,
        }
    }

    pub fn n_airports(&self) -> usize {
        self.airports.len()
    }

    pub fn n_carriers(&self) -> usize {
        self.carriers.len()
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn airport_names(&self) -> &[String] {
        &self.airports
    }

    pub fn carrier_names(&self) -> &[String] {
        &self.carriers
    }

    pub fn airport_name(&self, id: AirportId) -> &str {
        &self.airports[id.index()]
    }

    pub fn carrier_name(&self, id: CarrierId) -> &str {
        &self.carriers[id.index()]
    }

    pub fn airport_id(&self, name: &str) -> Result<AirportId> {
        self.airports
            .binary_search_by(|a| a.as_str().cmp(name))
            .map(|i| AirportId(i as u32))
            .map_err(|_| Error::UnknownAirport(name.to_string()))
    }

    pub fn carrier_id(&self, name: &str) -> Result<CarrierId> {
        self.carriers
            .binary_search_by(|c| c.as_str().cmp(name))
            .map(|i| CarrierId(i as u32))
            .map_err(|_| Error::UnknownCarrier(name.to_string()))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, index: usize) -> &Segment {
        &self.segments[index]
    }

    /// Index range into [`segments`](Self::segments) of the out-segments of `u`.
    pub fn out_range(&self, u: AirportId) -> std::ops::Range<usize> {
        self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]
    }

    pub fn out_segments(&self, u: AirportId) -> &[Segment] {
        &self.segments[self.out_range(u)]
    }

    pub fn out_degree(&self, u: AirportId) -> usize {
        self.out_range(u).len()
    }

    pub fn find_segment(&self, u: AirportId, v: AirportId) -> Option<usize> {
        if u.index() >= self.n_airports() {
            return None;
        }
        let range = self.out_range(u);
        self.segments[range.clone()]
            .binary_search_by(|s| s.destination.cmp(&v))
            .ok()
            .map(|pos| range.start + pos)
    }

    fn segment_or_err(&self, u: AirportId, v: AirportId) -> Result<&Segment> {
        self.find_segment(u, v)
            .map(|i| &self.segments[i])
            .ok_or_else(|| Error::UnknownSegment {
                origin: self.name_or_index(u),
                destination: self.name_or_index(v),
            })
    }

    fn name_or_index(&self, id: AirportId) -> String {
        self.airports
            .get(id.index())
            .cloned()
            .unwrap_or_else(|| id.to_string())
    }

    /// Airports with at least one outgoing segment, in id order. Random walks
    /// start only from these, and per-root averages divide by their count.
    pub fn walk_roots(&self) -> &[AirportId] {
        &self.walk_roots
    }

    /// Airports without outgoing segments.
    pub fn isolated_airports(&self) -> Vec<AirportId> {
        (0..self.n_airports() as u32)
            .map(AirportId)
            .filter(|&a| self.out_degree(a) == 0)
            .collect()
    }

    /// Carrier PMF on segment `(u, v)`: each carrier's ASM share.
    pub fn segment_pmf(&self, u: AirportId, v: AirportId) -> Result<DiscretePmf<CarrierId>> {
        let seg = self.segment_or_err(u, v)?;
        DiscretePmf::from_weights(seg.carriers.clone(), &seg.weights)
    }

    /// Next-airport PMF from `u`, proportional to total segment ASM.
    pub fn neighbor_pmf(&self, u: AirportId) -> Result<DiscretePmf<AirportId>> {
        if u.index() >= self.n_airports() {
            return Err(Error::UnknownAirport(u.to_string()));
        }
        let out = self.out_segments(u);
        if out.is_empty() {
            return Err(Error::IsolatedAirport(self.airports[u.index()].clone()));
        }
        let dests = out.iter().map(|s| s.destination).collect();
        let totals: Vec<f64> = out.iter().map(|s| s.total).collect();
        DiscretePmf::from_weights(dests, &totals)
    }

    /// Market share of alliance `k` (0-based) on segment `(u, v)`.
    pub fn alliance_market_share(
        &self,
        partition: &AlliancePartition,
        u: AirportId,
        v: AirportId,
        k: usize,
    ) -> Result<f64> {
        let seg = self.segment_or_err(u, v)?;
        self.check_partition(partition)?;
        if k >= partition.n_alliances() {
            return Err(Error::AllianceOutOfRange {
                index: k,
                count: partition.n_alliances(),
            });
        }
        let in_alliance: f64 = seg
            .carriers
            .iter()
            .zip(&seg.weights)
            .filter(|(c, _)| partition.alliance_of(c.index()) == k)
            .map(|(_, w)| w)
            .sum();
        Ok(in_alliance / seg.total)
    }

    pub(crate) fn check_partition(&self, partition: &AlliancePartition) -> Result<()> {
        if partition.n_carriers() != self.n_carriers() {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} carriers, graph has {}",
                partition.n_carriers(),
                self.n_carriers()
            )));
        }
        Ok(())
    }

    /// Records reproducing this graph, one per (segment, carrier).
    pub fn to_records(&self) -> Vec<ScheduleRecord> {
        self.segments
            .iter()
            .flat_map(|s| {
                s.carriers.iter().zip(&s.weights).map(move |(&c, &w)| ScheduleRecord {
                    origin: self.airports[s.origin.index()].clone(),
                    destination: self.airports[s.destination.index()].clone(),
                    carrier: self.carriers[c.index()].clone(),
                    asm: w,
                })
            })
            .collect()
    }

    /// SHA-256 over names, segments and exact weight bits, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"airports\n");
        for a in &self.airports {
            h.update(a.as_bytes());
            h.update(b"\n");
        }
        h.update(b"carriers\n");
        for c in &self.carriers {
            h.update(c.as_bytes());
            h.update(b"\n");
        }
        h.update(b"segments\n");
        for s in &self.segments {
            h.update(s.origin.0.to_le_bytes());
            h.update(s.destination.0.to_le_bytes());
            for (c, w) in s.carriers.iter().zip(&s.weights) {
                h.update(c.0.to_le_bytes());
                h.update(w.to_bits().to_le_bytes());
            }
            h.update(b";");
        }
        hex::encode(h.finalize())
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            airports: self.n_airports(),
            segments: self.n_segments(),
            segment_carrier_pairs: self.segments.iter().map(|s| s.carriers.len()).sum(),
            carriers: self.n_carriers(),
            walk_roots: self.walk_roots.len(),
            isolated_airports: self.isolated_airports().len(),
            total_asm: self.segments.iter().map(|s| s.total).sum(),
            content_hash: self.content_hash(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub airports: usize,
    pub segments: usize,
    pub segment_carrier_pairs: usize,
    pub carriers: usize,
    pub walk_roots: usize,
    pub isolated_airports: usize,
    pub total_asm: f64,
    pub content_hash: String,
}
