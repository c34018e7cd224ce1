//! The line-oriented instance format.
//!
//! ```text
//! mrsolve-instance 1
//! mode metric
//! nodes 3
//! row 0 0 1 2
//! row 1 1 0 1.5
//! row 2 2 1.5 0
//! repairman 0 1
//! client 2 0.5
//! npcst 0 4
//! prize 0 3 1.25
//! ```
//!
//! `mode euclidean` replaces the `row` lines by `coord <i> <x> <y>`.
//! Numbers are decimals or fractions `p/q` and are kept as exact rationals,
//! so metric validation has no rounding error. The `npcst` line (root,
//! budget) opens an optional block with one `prize <client> <profit>
//! <radius>` line per client. `#` starts a comment.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use mrsolve::model::{validate_metric, Instance, MetricSpace, Violation};
use mrsolve::npcst::NpcstClient;

pub const MAGIC: &str = "mrsolve-instance 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Metric,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NpcstBlock {
    pub root: usize,
    pub budget: BigRational,
    /// `(profit, radius)` per client.
    pub prizes: Vec<(BigRational, BigRational)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFile {
    pub mode: Mode,
    pub nodes: usize,
    /// Distance rows, metric mode only.
    pub rows: Vec<Vec<BigRational>>,
    /// Coordinates, Euclidean mode only.
    pub coords: Vec<(BigRational, BigRational)>,
    pub repairmen: Vec<(usize, BigRational)>,
    pub clients: Vec<(usize, BigRational)>,
    pub npcst: Option<NpcstBlock>,
}

/// A parse failure at a 1-based line and, when known, a 1-based field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParseError {
    pub line: usize,
    pub field: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.field {
            Some(k) => write!(f, "line {}, field {}: {}", self.line, k, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

fn err(line: usize, field: Option<usize>, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        field,
        message: message.into(),
    }
}

/// Parses `12`, `-0.25` or `3/7` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = parse_int(p)?;
        let q: BigInt = parse_int(q)?;
        if q.is_zero() || q.is_negative() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if body.contains('.') && frac.is_empty() {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, den);
    Some(if neg { -r } else { r })
}

fn parse_int(s: &str) -> Option<BigInt> {
    let body = s.strip_prefix('-').unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Exact decimal when the denominator divides a power of ten, else `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    let (num, den) = (r.numer(), r.denom());
    let mut d = den.clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut a, mut b) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        a += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        b += 1;
    }
    if d != BigInt::from(1) {
        return format!("{num}/{den}");
    }
    let k = a.max(b);
    if k == 0 {
        return num.to_string();
    }
    let scaled = num * num_traits::pow(BigInt::from(10), k) / den;
    let neg = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    if digits.len() <= k {
        digits = format!("{}{digits}", "0".repeat(k + 1 - digits.len()));
    }
    let (i, f) = digits.split_at(digits.len() - k);
    let f = f.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if f.is_empty() {
        format!("{sign}{i}")
    } else {
        format!("{sign}{i}.{f}")
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

struct Line<'a> {
    no: usize,
    fields: Vec<&'a str>,
}

impl Line<'_> {
    fn arity(&self, k: usize) -> Result<(), ParseError> {
        if self.fields.len() != k + 1 {
            return Err(err(self.no, None, format!("`{}` takes {k} values, found {}", self.fields[0], self.fields.len() - 1)));
        }
        Ok(())
    }

    fn index(&self, k: usize, bound: usize, what: &str) -> Result<usize, ParseError> {
        let v: usize = self.fields[k]
            .parse()
            .map_err(|_| err(self.no, Some(k), format!("expected a {what} index, found `{}`", self.fields[k])))?;
        if v >= bound {
            return Err(err(self.no, Some(k), format!("{what} {v} out of range (have {bound})")));
        }
        Ok(v)
    }

    fn number(&self, k: usize) -> Result<BigRational, ParseError> {
        parse_rational(self.fields[k]).ok_or_else(|| err(self.no, Some(k), format!("malformed number `{}`", self.fields[k])))
    }
}

pub fn parse_instance_str(text: &str) -> Result<InstanceFile, ParseError> {
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some(Line { no: i + 1, fields })
    });
    let first = lines.next().ok_or_else(|| err(1, None, "empty file"))?;
    if first.fields.join(" ") != MAGIC {
        return Err(err(first.no, None, format!("expected `{MAGIC}`")));
    }
    let mut mode = None;
    let mut nodes = None;
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut row_lines = Vec::new();
    let mut coords = Vec::new();
    let mut repairmen = Vec::new();
    let mut clients = Vec::new();
    let mut npcst: Option<(usize, BigRational, usize)> = None;
    let mut prizes: Vec<(usize, usize, BigRational, BigRational)> = Vec::new();
    let mut last_line = first.no;

    for l in lines {
        last_line = l.no;
        let need_nodes = || nodes.ok_or_else(|| err(l.no, None, "`nodes` must come first"));
        match l.fields[0] {
            "mode" => {
                l.arity(1)?;
                mode = Some(match l.fields[1] {
                    "metric" => Mode::Metric,
                    "euclidean" => Mode::Euclidean,
                    other => return Err(err(l.no, Some(1), format!("unknown mode `{other}`"))),
                });
            }
            "nodes" => {
                l.arity(1)?;
                let n: usize = l.fields[1].parse().map_err(|_| err(l.no, Some(1), "expected a node count"))?;
                if n == 0 {
                    return Err(err(l.no, Some(1), "need at least one node"));
                }
                nodes = Some(n);
            }
            "row" => {
                let n = need_nodes()?;
                if mode != Some(Mode::Metric) {
                    return Err(err(l.no, None, "`row` needs `mode metric`"));
                }
                l.arity(n + 1)?;
                let i = l.index(1, n, "row")?;
                if i != rows.len() {
                    return Err(err(l.no, Some(1), format!("expected row {}", rows.len())));
                }
                rows.push((2..n + 2).map(|k| l.number(k)).collect::<Result<_, _>>()?);
                row_lines.push(l.no);
            }
            "coord" => {
                let n = need_nodes()?;
                if mode != Some(Mode::Euclidean) {
                    return Err(err(l.no, None, "`coord` needs `mode euclidean`"));
                }
                l.arity(3)?;
                let i = l.index(1, n, "node")?;
                if i != coords.len() {
                    return Err(err(l.no, Some(1), format!("expected coordinates of node {}", coords.len())));
                }
                coords.push((l.number(2)?, l.number(3)?));
            }
            "repairman" | "client" => {
                let n = need_nodes()?;
                l.arity(2)?;
                let at = l.index(1, n, "node")?;
                let speed = l.number(2)?;
                if l.fields[0] == "repairman" {
                    if !speed.is_positive() {
                        return Err(err(l.no, Some(2), "repairman speed must be positive"));
                    }
                    repairmen.push((at, speed));
                } else {
                    if speed.is_negative() {
                        return Err(err(l.no, Some(2), "client speed must be non-negative"));
                    }
                    clients.push((at, speed));
                }
            }
            "npcst" => {
                let n = need_nodes()?;
                l.arity(2)?;
                if npcst.is_some() {
                    return Err(err(l.no, None, "second `npcst` line"));
                }
                let root = l.index(1, n, "node")?;
                let budget = l.number(2)?;
                if budget.is_negative() {
                    return Err(err(l.no, Some(2), "budget must be non-negative"));
                }
                npcst = Some((root, budget, l.no));
            }
            "prize" => {
                l.arity(3)?;
                let c: usize = l.fields[1].parse().map_err(|_| err(l.no, Some(1), "expected a client index"))?;
                let (p, r) = (l.number(2)?, l.number(3)?);
                if p.is_negative() || r.is_negative() {
                    return Err(err(l.no, None, "profit and radius must be non-negative"));
                }
                prizes.push((l.no, c, p, r));
            }
            other => return Err(err(l.no, Some(0), format!("unknown keyword `{other}`"))),
        }
    }

    let mode = mode.ok_or_else(|| err(last_line, None, "missing `mode`"))?;
    let n = nodes.ok_or_else(|| err(last_line, None, "missing `nodes`"))?;
    match mode {
        Mode::Metric if rows.len() != n => return Err(err(last_line, None, format!("{} of {n} distance rows given", rows.len()))),
        Mode::Euclidean if coords.len() != n => return Err(err(last_line, None, format!("{} of {n} coordinates given", coords.len()))),
        _ => {}
    }
    if mode == Mode::Metric {
        let violations = validate_metric(&rows).map_err(|e| err(last_line, None, e.to_string()))?;
        if let Some(v) = violations.first() {
            return Err(violation_error(v, &rows, &row_lines));
        }
    }
    if repairmen.is_empty() {
        return Err(err(last_line, None, "need at least one repairman"));
    }
    let npcst = match npcst {
        None => {
            if let Some((no, ..)) = prizes.first() {
                return Err(err(*no, None, "`prize` without an `npcst` line"));
            }
            None
        }
        Some((root, budget, no)) => {
            let mut table = vec![None; clients.len()];
            for (pl, c, p, r) in prizes {
                if c >= clients.len() {
                    return Err(err(pl, Some(1), format!("client {c} out of range (have {})", clients.len())));
                }
                if table[c].is_some() {
                    return Err(err(pl, Some(1), format!("second prize for client {c}")));
                }
                table[c] = Some((p, r));
            }
            let prizes = table
                .into_iter()
                .enumerate()
                .map(|(c, p)| p.ok_or_else(|| err(no, None, format!("client {c} has no prize line"))))
                .collect::<Result<_, _>>()?;
            Some(NpcstBlock { root, budget, prizes })
        }
    };
    Ok(InstanceFile {
        mode,
        nodes: n,
        rows,
        coords,
        repairmen,
        clients,
        npcst,
    })
}

fn violation_error(v: &Violation, rows: &[Vec<BigRational>], lines: &[usize]) -> ParseError {
    let f = |r: &BigRational| format_rational(r);
    match *v {
        Violation::Diagonal(u) => err(lines[u], Some(u + 2), format!("d({u},{u}) = {} must be 0", f(&rows[u][u]))),
        Violation::Negative(u, w) => err(lines[u], Some(w + 2), format!("d({u},{w}) = {} is negative", f(&rows[u][w]))),
        Violation::Asymmetric(u, w) => err(
            lines[w],
            Some(u + 2),
            format!("asymmetric pair ({u},{w}): d({u},{w}) = {} but d({w},{u}) = {}", f(&rows[u][w]), f(&rows[w][u])),
        ),
        Violation::Triangle(u, m, w) => err(
            lines[u],
            Some(w + 2),
            format!(
                "triangle inequality fails: d({u},{w}) = {} > d({u},{m}) + d({m},{w}) = {}",
                f(&rows[u][w]),
                f(&(&rows[u][m] + &rows[m][w]))
            ),
        ),
    }
}

impl InstanceFile {
    /// Canonical text; parsing it returns an equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = format_rational;
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(
            s,
            "mode {}",
            match self.mode {
                Mode::Metric => "metric",
                Mode::Euclidean => "euclidean",
            }
        );
        let _ = writeln!(s, "nodes {}", self.nodes);
        for (i, row) in self.rows.iter().enumerate() {
            let vals: Vec<String> = row.iter().map(f).collect();
            let _ = writeln!(s, "row {i} {}", vals.join(" "));
        }
        for (i, (x, y)) in self.coords.iter().enumerate() {
            let _ = writeln!(s, "coord {i} {} {}", f(x), f(y));
        }
        for (d, v) in &self.repairmen {
            let _ = writeln!(s, "repairman {d} {}", f(v));
        }
        for (c, v) in &self.clients {
            let _ = writeln!(s, "client {c} {}", f(v));
        }
        if let Some(b) = &self.npcst {
            let _ = writeln!(s, "npcst {} {}", b.root, f(&b.budget));
            for (c, (p, r)) in b.prizes.iter().enumerate() {
                let _ = writeln!(s, "prize {c} {} {}", f(p), f(r));
            }
        }
        s
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.coords.iter().map(|(x, y)| (to_f64(x), to_f64(y))).collect()
    }

    pub fn instance(&self) -> mrsolve::Result<Instance> {
        let metric = match self.mode {
            Mode::Metric => MetricSpace::new(self.rows.iter().map(|r| r.iter().map(to_f64).collect()).collect())?,
            Mode::Euclidean => MetricSpace::euclidean(&self.points()),
        };
        let reps: Vec<(usize, f64)> = self.repairmen.iter().map(|(d, v)| (*d, to_f64(v))).collect();
        let cls: Vec<(usize, f64)> = self.clients.iter().map(|(c, v)| (*c, to_f64(v))).collect();
        let inst = Instance::new(metric, &reps, &cls)?;
        match self.mode {
            Mode::Metric => Ok(inst),
            Mode::Euclidean => inst.with_coords(self.points()),
        }
    }

    /// Root, budget and clients of the NPCST block, if present.
    pub fn npcst_parts(&self) -> Option<(usize, f64, Vec<NpcstClient>)> {
        let b = self.npcst.as_ref()?;
        let clients = self
            .clients
            .iter()
            .zip(&b.prizes)
            .map(|((node, _), (p, r))| NpcstClient {
                node: *node,
                profit: to_f64(p),
                radius: to_f64(r),
            })
            .collect();
        Some((b.root, to_f64(&b.budget), clients))
    }
}
