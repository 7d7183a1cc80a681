//! Line-oriented text formats for streams, queries and reports.
//!
//! Stream file: `v <id> <label>` header lines, then `e <src> <dst>
//! <elabel|-> <ts>` body lines in nondecreasing timestamp order.
//! Query file: `v <id> <label>`, `e <eid> <src> <dst> <elabel|->`, and
//! `o <eid1> <eid2>` direct order pairs (eid1 precedes eid2).
//! Lines starting with `#` are comments. Both parsers are strict: unknown
//! directives and malformed fields are errors with line/column positions.

use crate::engine::MatchReport;
use crate::graph::{TemporalGraph, Timestamp};
use crate::matcher::Polarity;
use crate::query::{QueryEdgeId, QueryVertexId, TemporalQuery};
use crate::query::{QueryEdge, QueryVertex};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamEdge {
    pub src: u64,
    pub dst: u64,
    pub elabel: Option<String>,
    pub ts: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamFile {
    pub vertices: Vec<(u64, String)>,
    pub edges: Vec<StreamEdge>,
}

/// Split into (line number, trimmed content) skipping blanks and comments.
/// Tolerates CRLF line endings.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.trim_end_matches('\r').trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn token_col(line: &str, index: usize) -> usize {
    line.split_whitespace()
        .nth(index)
        .map(|tok| line.find(tok).map_or(1, |p| p + 1))
        .unwrap_or(1)
}

fn parse_num<T: std::str::FromStr>(
    lineno: usize,
    line: &str,
    index: usize,
    what: &str,
) -> Result<T, ParseError> {
    let tok = line
        .split_whitespace()
        .nth(index)
        .ok_or_else(|| ParseError::new(lineno, 1, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| ParseError::new(lineno, token_col(line, index), format!("invalid {what}: {tok}")))
}

fn expect_tokens(lineno: usize, line: &str, n: usize) -> Result<Vec<&str>, ParseError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != n {
        return Err(ParseError::new(
            lineno,
            1,
            format!("expected {n} fields, found {}", toks.len()),
        ));
    }
    Ok(toks)
}

fn opt_label(tok: &str) -> Option<String> {
    if tok == "-" {
        None
    } else {
        Some(tok.to_string())
    }
}

pub fn parse_stream(text: &str) -> Result<StreamFile, ParseError> {
    let mut out = StreamFile::default();
    let mut in_body = false;
    let mut last_ts: Option<Timestamp> = None;
    for (lineno, line) in content_lines(text) {
        match line.split_whitespace().next().unwrap() {
            "v" => {
                if in_body {
                    return Err(ParseError::new(lineno, 1, "vertex after first edge"));
                }
                let toks = expect_tokens(lineno, line, 3)?;
                let id: u64 = parse_num(lineno, line, 1, "vertex id")?;
                out.vertices.push((id, toks[2].to_string()));
            }
            "e" => {
                in_body = true;
                let toks = expect_tokens(lineno, line, 5)?;
                let src = parse_num(lineno, line, 1, "source id")?;
                let dst = parse_num(lineno, line, 2, "destination id")?;
                let ts: Timestamp = parse_num(lineno, line, 4, "timestamp")?;
                if let Some(last) = last_ts {
                    if ts < last {
                        return Err(ParseError::new(
                            lineno,
                            token_col(line, 4),
                            format!("timestamp {ts} regresses below {last}"),
                        ));
                    }
                }
                last_ts = Some(ts);
                out.edges.push(StreamEdge {
                    src,
                    dst,
                    elabel: opt_label(toks[3]),
                    ts,
                });
            }
            other => {
                return Err(ParseError::new(
                    lineno,
                    1,
                    format!("unknown directive: {other}"),
                ));
            }
        }
    }
    Ok(out)
}

pub fn write_stream(stream: &StreamFile) -> String {
    let mut out = String::new();
    for (id, label) in &stream.vertices {
        out.push_str(&format!("v {id} {label}\n"));
    }
    for e in &stream.edges {
        let l = e.elabel.as_deref().unwrap_or("-");
        out.push_str(&format!("e {} {} {} {}\n", e.src, e.dst, l, e.ts));
    }
    out
}

pub fn parse_query(text: &str) -> Result<TemporalQuery, ParseError> {
    let mut vertices: Vec<QueryVertex> = Vec::new();
    let mut vertex_ids: HashMap<u64, QueryVertexId> = HashMap::new();
    let mut edges: Vec<QueryEdge> = Vec::new();
    let mut edge_ids: HashMap<u64, QueryEdgeId> = HashMap::new();
    let mut pairs: Vec<(QueryEdgeId, QueryEdgeId)> = Vec::new();
    for (lineno, line) in content_lines(text) {
        match line.split_whitespace().next().unwrap() {
            "v" => {
                let toks = expect_tokens(lineno, line, 3)?;
                let ext: u64 = parse_num(lineno, line, 1, "vertex id")?;
                if vertex_ids.contains_key(&ext) {
                    return Err(ParseError::new(
                        lineno,
                        token_col(line, 1),
                        format!("duplicate vertex id {ext}"),
                    ));
                }
                vertex_ids.insert(ext, QueryVertexId(vertices.len()));
                vertices.push(QueryVertex {
                    ext_id: ext,
                    label: toks[2].to_string(),
                });
            }
            "e" => {
                let toks = expect_tokens(lineno, line, 5)?;
                let ext: u64 = parse_num(lineno, line, 1, "edge id")?;
                let src: u64 = parse_num(lineno, line, 2, "source id")?;
                let dst: u64 = parse_num(lineno, line, 3, "destination id")?;
                if edge_ids.contains_key(&ext) {
                    return Err(ParseError::new(
                        lineno,
                        token_col(line, 1),
                        format!("duplicate edge id {ext}"),
                    ));
                }
                let u = *vertex_ids.get(&src).ok_or_else(|| {
                    ParseError::new(lineno, token_col(line, 2), format!("unknown vertex {src}"))
                })?;
                let v = *vertex_ids.get(&dst).ok_or_else(|| {
                    ParseError::new(lineno, token_col(line, 3), format!("unknown vertex {dst}"))
                })?;
                edge_ids.insert(ext, QueryEdgeId(edges.len()));
                edges.push(QueryEdge {
                    ext_id: ext,
                    u,
                    v,
                    elabel: opt_label(toks[4]),
                });
            }
            "o" => {
                expect_tokens(lineno, line, 3)?;
                let a: u64 = parse_num(lineno, line, 1, "edge id")?;
                let b: u64 = parse_num(lineno, line, 2, "edge id")?;
                let ea = *edge_ids.get(&a).ok_or_else(|| {
                    ParseError::new(lineno, token_col(line, 1), format!("unknown edge id {a}"))
                })?;
                let eb = *edge_ids.get(&b).ok_or_else(|| {
                    ParseError::new(lineno, token_col(line, 2), format!("unknown edge id {b}"))
                })?;
                pairs.push((ea, eb));
            }
            other => {
                return Err(ParseError::new(
                    lineno,
                    1,
                    format!("unknown directive: {other}"),
                ));
            }
        }
    }
    TemporalQuery::new(vertices, edges, pairs)
        .map_err(|e| ParseError::new(0, 0, format!("invalid query: {e}")))
}

pub fn write_query(q: &TemporalQuery) -> String {
    let mut out = String::new();
    for u in q.vertices() {
        let rec = q.vertex(u);
        out.push_str(&format!("v {} {}\n", rec.ext_id, rec.label));
    }
    for e in q.edges() {
        let rec = q.edge(e);
        let l = rec.elabel.as_deref().unwrap_or("-");
        out.push_str(&format!(
            "e {} {} {} {}\n",
            rec.ext_id,
            q.vertex(rec.u).ext_id,
            q.vertex(rec.v).ext_id,
            l
        ));
    }
    for &(a, b) in q.order().direct_pairs() {
        out.push_str(&format!("o {} {}\n", q.edge(a).ext_id, q.edge(b).ext_id));
    }
    out
}

/// `<fire_time> <+|-> <eid>:<src>-<dst>@<ts>[,...]` with query edge ids
/// ascending by external id.
pub fn format_report(graph: &TemporalGraph, q: &TemporalQuery, report: &MatchReport) -> String {
    let sign = match report.polarity {
        Polarity::Occurred => '+',
        Polarity::Expired => '-',
    };
    let mut entries: Vec<(u64, String)> = q
        .edges()
        .map(|e| {
            let d = report.embedding.emap[e.0];
            let rec = graph.edge(d);
            (
                q.edge(e).ext_id,
                format!(
                    "{}:{}-{}@{}",
                    q.edge(e).ext_id,
                    graph.ext_id(rec.src),
                    graph.ext_id(rec.dst),
                    rec.ts
                ),
            )
        })
        .collect();
    entries.sort();
    let body: Vec<String> = entries.into_iter().map(|(_, s)| s).collect();
    format!("{} {} {}", report.fire_time, sign, body.join(","))
}

/// Count-mode report line: the mapping is replaced by a running total.
pub fn format_count_report(report: &MatchReport, running_total: u64) -> String {
    let sign = match report.polarity {
        Polarity::Occurred => '+',
        Polarity::Expired => '-',
    };
    format!("{} {} {}", report.fire_time, sign, running_total)
}

impl fmt::Display for StreamFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", write_stream(self))
    }
}
