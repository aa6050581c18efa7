//! Binary persistence for sampling realizations.
//!
//! Layout (little endian): magic `ALNCACHE`, format version `u32`, seed
//! `u64`, graph content hash (32 bytes), then dims `roots, n_walks,
//! walk_length, n_segments, n_segment_samples` as `u64`, followed by the
//! roots, realized step counts, `V`, `T`, `W` and the segment sample set.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{AirportId, MultiAttributeGraph};
use crate::sampling::{Realization, SamplingConfig, SegmentSampleSet, WalkAirports, WalkTensors};

const MAGIC: &[u8; 8] = b"ALNCACHE";
pub const CACHE_VERSION: u32 = 1;

fn hash_bytes(hex_hash: &str) -> Result<[u8; 32]> {
    let raw = hex::decode(hex_hash).map_err(|e| Error::Cache(format!("bad graph hash: {e}")))?;
    raw.try_into()
        .map_err(|_| Error::Cache("graph hash must be 32 bytes".into()))
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.0.write_all(b)
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u32s(&mut self, vs: &[u32]) -> std::io::Result<()> {
        vs.iter().try_for_each(|&v| self.u32(v))
    }
    fn f64s(&mut self, vs: &[f64]) -> std::io::Result<()> {
        vs.iter().try_for_each(|&v| self.u64(v.to_bits()))
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> std::io::Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0.read_exact(&mut buf)?;
        Ok(buf)
    }
    fn u32(&mut self) -> std::io::Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> std::io::Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn u32s(&mut self, n: usize) -> std::io::Result<Vec<u32>> {
        (0..n).map(|_| self.u32()).collect()
    }
    fn f64s(&mut self, n: usize) -> std::io::Result<Vec<f64>> {
        (0..n).map(|_| self.u64().map(f64::from_bits)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheHeader {
    pub version: u32,
    pub seed: u64,
    pub graph_hash: String,
    pub n_roots: usize,
    pub n_walks: usize,
    pub walk_length: usize,
    pub n_segments: usize,
    pub n_segment_samples: usize,
}

pub fn write_cache(path: &Path, graph_hash: &str, r: &Realization) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let t = &r.tensors;
    let s = &r.segments;
    let mut w = Writer(BufWriter::new(file));
    let hash = hash_bytes(graph_hash)?;
    (|| -> std::io::Result<()> {
        w.bytes(MAGIC)?;
        w.u32(CACHE_VERSION)?;
        w.u64(t.seed())?;
        w.bytes(&hash)?;
        for d in [t.n_roots(), t.n_walks(), t.walk_length(), s.n_segments(), s.n_samples] {
            w.u64(d as u64)?;
        }
        let roots: Vec<u32> = t.roots().iter().map(|a| a.0).collect();
        w.u32s(&roots)?;
        w.u32s(&t.walks.steps)?;
        w.u32s(&t.walks.airports)?;
        w.u32s(&t.carriers)?;
        w.f64s(&t.weights)?;
        w.u32s(&s.samples)?;
        w.0.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

fn read_header<R: Read>(r: &mut Reader<R>) -> Result<CacheHeader> {
    let io = |e: std::io::Error| Error::Cache(e.to_string());
    let magic: [u8; 8] = r.array().map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Cache("not a realization cache file".into()));
    }
    let version = r.u32().map_err(io)?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let seed = r.u64().map_err(io)?;
    let hash: [u8; 32] = r.array().map_err(io)?;
    let mut dims = [0usize; 5];
    for d in dims.iter_mut() {
        *d = r.u64().map_err(io)? as usize;
    }
    Ok(CacheHeader {
        version,
        seed,
        graph_hash: hex::encode(hash),
        n_roots: dims[0],
        n_walks: dims[1],
        walk_length: dims[2],
        n_segments: dims[3],
        n_segment_samples: dims[4],
    })
}

pub fn read_cache(path: &Path) -> Result<(CacheHeader, Realization)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader(BufReader::new(file));
    let h = read_header(&mut r)?;
    let io = |e: std::io::Error| Error::Cache(e.to_string());
    let walks_n = h.n_roots * h.n_walks;
    let roots = r.u32s(h.n_roots).map_err(io)?;
    let steps = r.u32s(walks_n).map_err(io)?;
    let airports = r.u32s(walks_n * (h.walk_length + 1)).map_err(io)?;
    let carriers = r.u32s(walks_n * h.walk_length).map_err(io)?;
    let weights = r.f64s(walks_n * h.walk_length).map_err(io)?;
    let samples = r.u32s(h.n_segments * h.n_segment_samples).map_err(io)?;
    let walks = WalkAirports {
        roots: roots.into_iter().map(AirportId).collect(),
        n_walks: h.n_walks,
        walk_length: h.walk_length,
        seed: h.seed,
        steps,
        airports,
    };
    let realization = Realization {
        tensors: WalkTensors {
            walks,
            carriers,
            weights,
        },
        segments: SegmentSampleSet {
            n_samples: h.n_segment_samples,
            seed: h.seed,
            samples,
        },
    };
    Ok((h, realization))
}

/// Loads a cached realization when its header matches `g` and `cfg`, else
/// draws a fresh one and writes it. `force` always regenerates. The flag in
/// the result tells whether sampling ran.
pub fn load_or_sample(
    path: &Path,
    g: &MultiAttributeGraph,
    cfg: &SamplingConfig,
    force: bool,
) -> Result<(Realization, bool)> {
    let graph_hash = g.content_hash();
    if !force && path.exists() {
        if let Ok((h, r)) = read_cache(path) {
            let matches = h.graph_hash == graph_hash
                && h.seed == cfg.seed
                && h.n_walks == cfg.n_walks
                && h.walk_length == cfg.walk_length
                && h.n_segment_samples == cfg.n_segment_samples
                && h.n_segments == g.n_segments()
                && h.n_roots == g.walk_roots().len();
            if matches {
                return Ok((r, false));
            }
        }
    }
    let r = Realization::draw(g, cfg)?;
    write_cache(path, &graph_hash, &r)?;
    Ok((r, true))
}
