//! A small LP-format writer and reader.
//!
//! Supports what the model export needs: a quadratic objective written as
//! `[ ... ] / 2`, linear and quadratic rows, finite bounds and a binary
//! section. Statements are token based, so line breaks inside rows are
//! insignificant. Numbers are written in shortest round-trip form.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    fn parse(tok: &str) -> Option<Self> {
        match tok {
            "<=" | "=<" | "<" => Some(Sense::Le),
            "=" => Some(Sense::Eq),
            ">=" | "=>" | ">" => Some(Sense::Ge),
            _ => None,
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
            Sense::Ge => lhs >= rhs - tol,
        }
    }
}

/// Linear terms plus quadratic terms `coef * a * b` (`a == b` is a square).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expr {
    pub linear: Vec<(String, f64)>,
    pub quadratic: Vec<(String, String, f64)>,
}

impl Expr {
    pub fn value(&self, point: &HashMap<String, f64>) -> f64 {
        let v = |name: &str| point.get(name).copied().unwrap_or(0.0);
        let lin: f64 = self.linear.iter().map(|(n, c)| c * v(n)).sum();
        let quad: f64 = self.quadratic.iter().map(|(a, b, c)| c * v(a) * v(b)).sum();
        lin + quad
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub expr: Expr,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bound {
    pub var: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    /// Comment lines, without the leading backslash.
    pub comments: Vec<String>,
    pub objective: Expr,
    pub rows: Vec<Row>,
    pub bounds: Vec<Bound>,
    pub binaries: Vec<String>,
}

const TERMS_PER_LINE: usize = 8;

fn push_term(out: &mut String, count: &mut usize, coef: f64, body: &str) {
    let (sign, mag) = if coef.is_sign_negative() { ('-', -coef) } else { ('+', coef) };
    let _ = write!(out, " {sign} {mag:e} {body}");
    *count += 1;
    if *count % TERMS_PER_LINE == 0 {
        out.push_str("\n  ");
    }
}

fn render_expr(out: &mut String, expr: &Expr, halve_quadratic: bool) {
    let mut count = 0;
    for (name, c) in &expr.linear {
        push_term(out, &mut count, *c, name);
    }
    if expr.quadratic.is_empty() {
        return;
    }
    out.push_str(" + [");
    let scale = if halve_quadratic { 2.0 } else { 1.0 };
    for (a, b, c) in &expr.quadratic {
        let body = if a == b { format!("{a} ^2") } else { format!("{a} * {b}") };
        push_term(out, &mut count, c * scale, &body);
    }
    out.push_str(" ]");
    if halve_quadratic {
        out.push_str(" / 2");
    }
}

impl LpProblem {
    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "\\ {c}");
        }
        out.push_str("Minimize\n obj:");
        render_expr(&mut out, &self.objective, true);
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            render_expr(&mut out, &row.expr, false);
            let _ = writeln!(out, " {} {:e}", row.sense.as_str(), row.rhs);
        }
        out.push_str("Bounds\n");
        for b in &self.bounds {
            let _ = writeln!(out, " {:e} <= {} <= {:e}", b.lower, b.var, b.upper);
        }
        out.push_str("Binaries\n");
        for chunk in self.binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut comments = Vec::new();
        let mut tokens: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim_start();
            if let Some(c) = trimmed.strip_prefix('\\') {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            tokens.extend(line.split_whitespace().map(|t| (i + 1, t)));
        }
        let mut p = Parser { tokens, pos: 0 };
        let mut lp = LpProblem {
            comments,
            ..LpProblem::default()
        };

        p.expect_keyword(&["minimize", "minimise", "min"])?;
        let name = p.next()?;
        if !name.1.ends_with(':') {
            return Err(p.error(name.0, "objective needs a name"));
        }
        lp.objective = p.expr(true)?;

        p.expect_keyword(&["subject"])?;
        p.expect_keyword(&["to"])?;
        while let Some(&(line, tok)) = p.peek() {
            if is_section(tok) {
                break;
            }
            p.pos += 1;
            let name = tok
                .strip_suffix(':')
                .ok_or_else(|| p.error(line, &format!("expected a row name, got `{tok}`")))?;
            let expr = p.expr(false)?;
            let (sl, st) = p.next()?;
            let sense = Sense::parse(st).ok_or_else(|| p.error(sl, &format!("expected a sense, got `{st}`")))?;
            let rhs = p.number()?;
            lp.rows.push(Row {
                name: name.to_string(),
                expr,
                sense,
                rhs,
            });
        }

        p.expect_keyword(&["bounds"])?;
        while let Some(&(_, tok)) = p.peek() {
            if is_section(tok) {
                break;
            }
            let lower = p.number()?;
            p.expect_token("<=")?;
            let var = p.next()?.1.to_string();
            p.expect_token("<=")?;
            let upper = p.number()?;
            lp.bounds.push(Bound { var, lower, upper });
        }

        p.expect_keyword(&["binaries", "binary", "bin"])?;
        while let Some(&(_, tok)) = p.peek() {
            if is_section(tok) {
                break;
            }
            lp.binaries.push(tok.to_string());
            p.pos += 1;
        }
        p.expect_keyword(&["end"])?;
        Ok(lp)
    }
}

fn is_section(tok: &str) -> bool {
    matches!(
        tok.to_ascii_lowercase().as_str(),
        "subject" | "bounds" | "binaries" | "binary" | "bin" | "end"
    )
}

fn is_ident(tok: &str) -> bool {
    tok.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
        && tok.chars().all(|c| c.is_ascii_alphanumeric() || "_.#$%&~@{}()!'".contains(c))
}

fn is_number(tok: &str) -> bool {
    tok.starts_with(|c: char| c.is_ascii_digit() || c == '.')
        || (tok.starts_with('-') && tok[1..].starts_with(|c: char| c.is_ascii_digit() || c == '.'))
}

struct Parser<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, line: usize, reason: &str) -> Error {
        Error::Parse {
            line,
            reason: reason.to_string(),
        }
    }

    fn last_line(&self) -> usize {
        self.tokens.last().map_or(0, |t| t.0)
    }

    fn peek(&self) -> Option<&(usize, &'a str)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let t = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.error(self.last_line(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_token(&mut self, want: &str) -> Result<()> {
        let (line, tok) = self.next()?;
        if tok != want {
            return Err(self.error(line, &format!("expected `{want}`, got `{tok}`")));
        }
        Ok(())
    }

    fn expect_keyword(&mut self, options: &[&str]) -> Result<()> {
        let (line, tok) = self.next()?;
        if !options.contains(&tok.to_ascii_lowercase().as_str()) {
            return Err(self.error(line, &format!("expected `{}`, got `{tok}`", options[0])));
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64> {
        let (line, tok) = self.next()?;
        tok.parse::<f64>()
            .map_err(|_| self.error(line, &format!("expected a number, got `{tok}`")))
    }

    /// Parses terms until a sense token or a section keyword.
    fn expr(&mut self, objective: bool) -> Result<Expr> {
        let mut expr = Expr::default();
        let mut sign = 1.0;
        let mut in_quad = false;
        loop {
            let Some(&(line, tok)) = self.peek() else {
                break;
            };
            if Sense::parse(tok).is_some() || (objective && is_section(tok)) {
                break;
            }
            self.pos += 1;
            match tok {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                "[" => in_quad = true,
                "]" => {
                    in_quad = false;
                    if objective {
                        self.expect_token("/")?;
                        let (l, two) = self.next()?;
                        if two.parse::<f64>() != Ok(2.0) {
                            return Err(self.error(l, "quadratic objective block must be halved"));
                        }
                        for q in expr.quadratic.iter_mut() {
                            q.2 /= 2.0;
                        }
                    }
                }
                _ => {
                    let (coef, var) = if is_number(tok) {
                        let c: f64 = tok
                            .parse()
                            .map_err(|_| self.error(line, &format!("bad coefficient `{tok}`")))?;
                        (c, self.next()?.1)
                    } else {
                        (1.0, tok)
                    };
                    if !is_ident(var) {
                        return Err(self.error(line, &format!("expected a variable, got `{var}`")));
                    }
                    let coef = sign * coef;
                    sign = 1.0;
                    if in_quad {
                        match self.next()? {
                            (_, "^2") => expr.quadratic.push((var.into(), var.into(), coef)),
                            (_, "*") => {
                                let (l, other) = self.next()?;
                                if !is_ident(other) {
                                    return Err(self.error(l, &format!("expected a variable, got `{other}`")));
                                }
                                expr.quadratic.push((var.into(), other.into(), coef));
                            }
                            (l, t) => return Err(self.error(l, &format!("expected `*` or `^2`, got `{t}`"))),
                        }
                    } else {
                        expr.linear.push((var.into(), coef));
                    }
                }
            }
        }
        if in_quad {
            return Err(self.error(self.last_line(), "unclosed quadratic block"));
        }
        Ok(expr)
    }
}
