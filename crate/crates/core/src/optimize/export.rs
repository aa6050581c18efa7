//! Model export in two formats.
//!
//! `json` is the canonical IR. `lp` is LP-format text in which each
//! `y = pwl(z)` is written as a convex combination of breakpoints (`l_t_m`)
//! with one binary per interval (`d_t_m`) selecting the active pair. Data
//! that has no row form (carrier names, metadata, walk index) travels in a
//! `meta:` comment line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::lp::{Bound, Expr, LpProblem, Row, Sense};
use crate::optimize::miqp::{MiqpModel, ModelMetadata, PairTerm, VariableBounds, WalkIndex, ZRow};
use crate::optimize::pwl::PwlCurve;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelFormat {
    Json,
    Lp,
}

impl std::str::FromStr for ModelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ModelFormat::Json),
            "lp" => Ok(ModelFormat::Lp),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

impl ModelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ModelFormat::Json => "json",
            ModelFormat::Lp => "lp",
        }
    }
}

pub fn export_model(model: &MiqpModel, format: &str) -> Result<String> {
    export_as(model, format.parse()?)
}

pub fn export_as(model: &MiqpModel, format: ModelFormat) -> Result<String> {
    match format {
        ModelFormat::Json => Ok(serde_json::to_string_pretty(model)? + "\n"),
        ModelFormat::Lp => Ok(to_lp(model)?.render()),
    }
}

pub fn parse_model(text: &str, format: &str) -> Result<MiqpModel> {
    let model = match format.parse()? {
        ModelFormat::Json => serde_json::from_str(text)?,
        ModelFormat::Lp => from_lp(&LpProblem::parse(text)?)?,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct LpMeta {
    format_version: u32,
    carriers: Vec<String>,
    n_alliances: usize,
    bounds: VariableBounds,
    walks: WalkIndex,
    metadata: ModelMetadata,
}

const META_PREFIX: &str = "meta: ";

fn x(t: usize, k: usize) -> String {
    format!("x_{t}_{k}")
}

fn linear(terms: impl IntoIterator<Item = (String, f64)>) -> Expr {
    Expr {
        linear: terms.into_iter().collect(),
        quadratic: Vec::new(),
    }
}

pub fn to_lp(model: &MiqpModel) -> Result<LpProblem> {
    let n = model.n_carriers();
    let k = model.n_alliances;
    let eps = model.epsilon();
    let meta = LpMeta {
        format_version: model.format_version,
        carriers: model.carriers.clone(),
        n_alliances: k,
        bounds: model.bounds,
        walks: model.walks.clone(),
        metadata: model.metadata.clone(),
    };
    let mut lp = LpProblem {
        comments: vec![
            format!(
                "alliance partitioning model, {n} carriers, K = {k}, seed {}, graph {}",
                model.metadata.seed, model.metadata.graph_hash
            ),
            format!("{META_PREFIX}{}", serde_json::to_string(&meta)?),
        ],
        ..LpProblem::default()
    };

    lp.objective.linear = (0..n).map(|t| (format!("y_{t}"), model.y_coef)).collect();
    for term in &model.hhi_terms {
        for j in 0..k {
            lp.objective.quadratic.push((x(term.a, j), x(term.b, j), term.coef));
        }
    }

    for (t, vars) in model.assignment_rows.iter().enumerate() {
        lp.rows.push(Row {
            name: format!("assign_{t}"),
            expr: linear(vars.iter().map(|&v| (x(v / k, v % k), 1.0))),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }

    for row in &model.z_rows {
        let t = row.carrier;
        let mut expr = linear([(format!("z_{t}"), 1.0)]);
        for &(o, c) in &row.terms {
            for j in 0..k {
                if o == t {
                    // x * x = x for binaries
                    expr.linear.push((x(t, j), -c));
                } else {
                    expr.quadratic.push((x(t, j), x(o, j), -c));
                }
            }
        }
        if row.floored {
            expr.linear.push((format!("b_{t}"), -eps));
            lp.rows.push(Row {
                name: format!("zdef_{t}"),
                expr,
                sense: Sense::Le,
                rhs: 0.0,
            });
            lp.rows.push(Row {
                name: format!("zcap_{t}"),
                expr: linear([(format!("z_{t}"), 1.0), (format!("b_{t}"), 1.0 - eps)]),
                sense: Sense::Le,
                rhs: 1.0,
            });
        } else {
            lp.rows.push(Row {
                name: format!("zdef_{t}"),
                expr,
                sense: Sense::Eq,
                rhs: 0.0,
            });
        }
    }

    for (t, curve) in model.pwl.iter().enumerate() {
        let m = curve.len();
        let lam = |i: usize| format!("l_{t}_{i}");
        let sel = |i: usize| format!("d_{t}_{i}");
        let with_head = |head: String, coefs: &[f64]| {
            linear(std::iter::once((head, 1.0)).chain(coefs.iter().enumerate().map(|(i, &v)| (lam(i), -v))))
        };
        lp.rows.push(Row {
            name: format!("pwlz_{t}"),
            expr: with_head(format!("z_{t}"), &curve.breakpoints),
            sense: Sense::Eq,
            rhs: 0.0,
        });
        lp.rows.push(Row {
            name: format!("pwly_{t}"),
            expr: with_head(format!("y_{t}"), &curve.values),
            sense: Sense::Eq,
            rhs: 0.0,
        });
        lp.rows.push(Row {
            name: format!("pwll_{t}"),
            expr: linear((0..m).map(|i| (lam(i), 1.0))),
            sense: Sense::Eq,
            rhs: 1.0,
        });
        lp.rows.push(Row {
            name: format!("pwld_{t}"),
            expr: linear((0..m - 1).map(|i| (sel(i), 1.0))),
            sense: Sense::Eq,
            rhs: 1.0,
        });
        for i in 0..m {
            let mut expr = linear([(lam(i), 1.0)]);
            if i > 0 {
                expr.linear.push((sel(i - 1), -1.0));
            }
            if i + 1 < m {
                expr.linear.push((sel(i), -1.0));
            }
            lp.rows.push(Row {
                name: format!("adj_{t}_{i}"),
                expr,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }

    let b = &model.bounds;
    for t in 0..n {
        lp.bounds.push(Bound {
            var: format!("y_{t}"),
            lower: b.y_lower,
            upper: b.y_upper,
        });
        lp.bounds.push(Bound {
            var: format!("z_{t}"),
            lower: b.z_lower,
            upper: b.z_upper,
        });
        for i in 0..model.pwl[t].len() {
            lp.bounds.push(Bound {
                var: format!("l_{t}_{i}"),
                lower: 0.0,
                upper: 1.0,
            });
        }
    }

    for t in 0..n {
        lp.binaries.extend((0..k).map(|j| x(t, j)));
    }
    for row in model.z_rows.iter().filter(|r| r.floored) {
        lp.binaries.push(format!("b_{}", row.carrier));
    }
    for (t, curve) in model.pwl.iter().enumerate() {
        lp.binaries.extend((0..curve.len() - 1).map(|i| format!("d_{t}_{i}")));
    }
    Ok(lp)
}

fn bad(reason: String) -> Error {
    Error::Parse { line: 0, reason }
}

/// `x_t_k` -> `(t, k)`.
fn parse_x(name: &str) -> Result<(usize, usize)> {
    let rest = name
        .strip_prefix("x_")
        .ok_or_else(|| bad(format!("expected an assignment variable, got `{name}`")))?;
    let (t, k) = rest
        .split_once('_')
        .ok_or_else(|| bad(format!("malformed variable `{name}`")))?;
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("malformed variable `{name}`")));
    Ok((num(t)?, num(k)?))
}

/// Trailing index of `prefix_t_i` style names.
fn last_index(name: &str) -> Result<usize> {
    name.rsplit('_')
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(format!("malformed variable `{name}`")))
}

pub fn from_lp(lp: &LpProblem) -> Result<MiqpModel> {
    let meta_json = lp
        .comments
        .iter()
        .find_map(|c| c.strip_prefix(META_PREFIX))
        .ok_or_else(|| bad("missing meta comment".into()))?;
    let meta: LpMeta = serde_json::from_str(meta_json)?;
    let n = meta.carriers.len();
    let k = meta.n_alliances;
    if k == 0 {
        return Err(bad("K must be at least 1".into()));
    }
    let row = |name: String| lp.row(&name).ok_or_else(|| bad(format!("missing row `{name}`")));

    let mut hhi_terms = Vec::new();
    for (a, b, coef) in &lp.objective.quadratic {
        let (ta, ka) = parse_x(a)?;
        let (tb, kb) = parse_x(b)?;
        if ka != kb {
            return Err(bad(format!("cross-alliance product `{a} * {b}`")));
        }
        if ka == 0 {
            hhi_terms.push(PairTerm { a: ta, b: tb, coef: *coef });
        }
    }
    let y_coef = match lp.objective.linear.first() {
        Some((name, c)) if name == "y_0" => *c,
        _ => return Err(bad("objective lacks y_0".into())),
    };

    let mut assignment_rows = Vec::with_capacity(n);
    let mut z_rows = Vec::with_capacity(n);
    let mut pwl = Vec::with_capacity(n);
    for t in 0..n {
        let vars = row(format!("assign_{t}"))?
            .expr
            .linear
            .iter()
            .map(|(v, _)| parse_x(v).map(|(tt, kk)| tt * k + kk))
            .collect::<Result<Vec<_>>>()?;
        assignment_rows.push(vars);

        let z = row(format!("zdef_{t}"))?;
        let mut terms = Vec::new();
        for (v, c) in &z.expr.linear {
            if v.starts_with("x_") && parse_x(v)?.1 == 0 {
                terms.push((t, -c));
            }
        }
        for (a, b, c) in &z.expr.quadratic {
            let (ta, ka) = parse_x(a)?;
            let (tb, _) = parse_x(b)?;
            if ka == 0 {
                terms.push((if ta == t { tb } else { ta }, -c));
            }
        }
        terms.sort_by_key(|&(o, _)| o);
        z_rows.push(ZRow {
            carrier: t,
            floored: z.sense == Sense::Le,
            terms,
        });

        let coefs = |name: String| -> Result<Vec<f64>> {
            let r = row(name)?;
            let mut out = vec![0.0; r.expr.linear.len().saturating_sub(1)];
            for (v, c) in r.expr.linear.iter().skip(1) {
                let i = last_index(v)?;
                *out.get_mut(i).ok_or_else(|| bad(format!("breakpoint index {i} out of range")))? = -c;
            }
            Ok(out)
        };
        pwl.push(PwlCurve {
            breakpoints: coefs(format!("pwlz_{t}"))?,
            values: coefs(format!("pwly_{t}"))?,
        });
    }

    Ok(MiqpModel {
        format_version: meta.format_version,
        carriers: meta.carriers,
        n_alliances: k,
        hhi_terms,
        y_coef,
        assignment_rows,
        z_rows,
        pwl,
        bounds: meta.bounds,
        walks: meta.walks,
        metadata: meta.metadata,
    })
}
