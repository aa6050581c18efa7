//! CSV and JSON reading and writing.
//!
//! Every CSV this crate writes starts with `#` comment lines carrying
//! provenance (config hash, graph hash, seeds). Readers skip them. Floats are
//! written with 6 significant digits in CSV and in full precision in JSON.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CarrierId, MultiAttributeGraph, ScheduleRecord};
use crate::partition::AlliancePartition;

/// Hashes and seeds stamped into output files.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: Option<String>,
    pub graph_hash: String,
    pub seeds: Vec<u64>,
}

impl Provenance {
    pub fn new(graph_hash: impl Into<String>) -> Self {
        Self {
            graph_hash: graph_hash.into(),
            ..Self::default()
        }
    }

    pub fn with_config(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn with_seeds(mut self, seeds: &[u64]) -> Self {
        self.seeds = seeds.to_vec();
        self
    }

    fn comment(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "# config_hash={} graph_hash={} seeds={}\n",
            self.config_hash.as_deref().unwrap_or("none"),
            self.graph_hash,
            seeds.join(",")
        )
    }
}

/// Formats `x` with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit (9.999995 -> 10.00000)
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// A CSV table with provenance comments.
pub fn render_table(
    provenance: &Provenance,
    extra_comments: &[String],
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String> {
    let mut out = provenance.comment();
    for c in extra_comments {
        out.push_str(&format!("# {c}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::Integrity(format!("csv buffer: {e}")))?;
    out.push_str(&String::from_utf8_lossy(&body));
    Ok(out)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::MalformedRecord {
            row: 0,
            reason: format!("header lacks column `{name}`"),
        })
}

/// Parses `origin,destination,carrier,asm` rows. Row indices in errors count
/// data rows from 0.
pub fn parse_schedule(text: &str) -> Result<Vec<ScheduleRecord>> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers()?.clone();
    let cols = [
        column(&headers, "origin")?,
        column(&headers, "destination")?,
        column(&headers, "carrier")?,
        column(&headers, "asm")?,
    ];
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize, name: &str| -> Result<String> {
            match rec.get(cols[i]) {
                Some(v) if !v.is_empty() => Ok(v.to_string()),
                _ => Err(Error::MalformedRecord {
                    row,
                    reason: format!("missing {name}"),
                }),
            }
        };
        let asm_text = field(3, "asm")?;
        let asm: f64 = asm_text.parse().map_err(|_| Error::MalformedRecord {
            row,
            reason: format!("ASM `{asm_text}` is not a number"),
        })?;
        records.push(ScheduleRecord {
            origin: field(0, "origin")?,
            destination: field(1, "destination")?,
            carrier: field(2, "carrier")?,
            asm,
        });
    }
    Ok(records)
}

pub fn read_schedule(path: &Path) -> Result<Vec<ScheduleRecord>> {
    parse_schedule(&read_text(path)?)
}

pub fn render_schedule(records: &[ScheduleRecord], provenance: &Provenance) -> Result<String> {
    render_table(
        provenance,
        &[],
        &["origin", "destination", "carrier", "asm"],
        records.iter().map(|r| {
            // ASM keeps full precision so the graph hash survives a round trip
            vec![r.origin.clone(), r.destination.clone(), r.carrier.clone(), r.asm.to_string()]
        }),
    )
}

const ALLIANCE_COUNT_KEY: &str = "n_alliances=";

/// `carrier,alliance` with 1-based alliance numbers. The alliance count is
/// kept in a comment so empty trailing alliances survive a round trip.
pub fn render_partition(g: &MultiAttributeGraph, p: &AlliancePartition, provenance: &Provenance) -> Result<String> {
    if p.n_carriers() != g.n_carriers() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} carriers, graph has {}",
            p.n_carriers(),
            g.n_carriers()
        )));
    }
    render_table(
        provenance,
        &[format!("{ALLIANCE_COUNT_KEY}{}", p.n_alliances())],
        &["carrier", "alliance"],
        (0..p.n_carriers()).map(|c| {
            vec![
                g.carrier_name(CarrierId(c as u32)).to_string(),
                (p.alliance_of(c) + 1).to_string(),
            ]
        }),
    )
}

/// Reads a `carrier,alliance` file against `g`. Numeric labels are 1-based
/// alliance numbers; other labels are names, numbered in order of first
/// appearance. Carriers missing from the file become singleton alliances.
pub fn parse_partition(text: &str, g: &MultiAttributeGraph) -> Result<AlliancePartition> {
    let declared: Option<usize> = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .find_map(|c| c.trim().strip_prefix(ALLIANCE_COUNT_KEY))
        .and_then(|v| v.trim().parse().ok());

    let mut rdr = csv_reader(text);
    let headers = rdr.headers()?.clone();
    let (cc, ac) = (column(&headers, "carrier")?, column(&headers, "alliance")?);
    let mut rows: Vec<(usize, String, usize)> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let carrier = rec.get(cc).unwrap_or("");
        let label = rec.get(ac).unwrap_or("");
        if carrier.is_empty() || label.is_empty() {
            return Err(Error::MalformedRecord {
                row,
                reason: "missing carrier or alliance".into(),
            });
        }
        let id = g.carrier_id(carrier)?.index();
        rows.push((id, label.to_string(), row));
    }

    let numeric = rows.iter().all(|(_, l, _)| l.parse::<usize>().is_ok_and(|v| v >= 1));
    let mut label_index: HashMap<String, usize> = HashMap::new();
    let mut assignment: Vec<Option<usize>> = vec![None; g.n_carriers()];
    for (id, label, row) in &rows {
        let k = if numeric {
            label.parse::<usize>().unwrap() - 1
        } else {
            let next = label_index.len();
            *label_index.entry(label.clone()).or_insert(next)
        };
        if assignment[*id].replace(k).is_some() {
            return Err(Error::MalformedRecord {
                row: *row,
                reason: format!("carrier `{}` listed twice", g.carrier_name(CarrierId(*id as u32))),
            });
        }
    }
    let used = assignment.iter().flatten().map(|k| k + 1).max().unwrap_or(0);
    let mut k = declared.filter(|&d| d >= used && !assignment.contains(&None)).unwrap_or(used);
    let assignment = assignment
        .into_iter()
        .map(|a| {
            a.unwrap_or_else(|| {
                k += 1;
                k - 1
            })
        })
        .collect();
    AlliancePartition::from_assignment(assignment, k.max(1))
}

pub fn read_partition(path: &Path, g: &MultiAttributeGraph) -> Result<AlliancePartition> {
    parse_partition(&read_text(path)?, g)
}
