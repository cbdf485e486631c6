//! Text format for system descriptions (TOML) and the edge-to-trail
//! substitution expansion.
//!
//! Explicit form:
//!
//! ```toml
//! dimension = 2
//! matrix = [3.0, 0.0, 0.0, 2.0]   # row-major
//! vertices = 1
//! assert_osc = true
//!
//! [[edges]]        # edges of one source, in file order, get ranks 1, 2, ...
//! from = 1         # vertices are 1-based
//! to = 1
//! digit = [0.0, 0.0]
//! ```
//!
//! Substitution form replaces `edges` with a digit table and one rule per
//! vertex; `map` is a 1-based index into `maps` or an inline digit:
//!
//! ```toml
//! maps = [[0.0, 0.0], [1.0, 0.0]]
//!
//! [[substitution]]
//! lhs = "E1"
//! rhs = [{ map = 1, target = "E1" }, { map = [2.0, 0.0], target = "E1" }]
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::gifs::{EdgeSpec, GifsError, OrderedGifs, SystemDescription};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid system: {0}")]
    Validation(#[from] GifsError),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("rule for `{0}` has an empty right-hand side")]
    EmptyRule(String),
}

impl SpecError {
    fn field(message: impl Into<String>) -> Self {
        SpecError::Parse {
            line: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: usize,
    matrix: Vec<f64>,
    vertices: usize,
    edges: Option<Vec<RawEdge>>,
    maps: Option<Vec<Vec<f64>>>,
    substitution: Option<Vec<Rule>>,
    #[serde(default)]
    assert_osc: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: usize,
    to: usize,
    digit: Vec<f64>,
}

/// One rule `lhs → S_{a_1}(k_1) + … + S_{a_m}(k_m)`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub map: MapRef,
    pub target: String,
}

/// A digit given by 1-based index into the digit table, or inline.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MapRef {
    Index(usize),
    Digit(Vec<f64>),
}

/// Reads and validates a spec file.
pub fn parse_spec(path: impl AsRef<Path>) -> Result<OrderedGifs, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec_str(&text)
}

/// Parses spec text; substitution specs are routed through
/// [`expand_substitution`].
pub fn parse_spec_str(text: &str) -> Result<OrderedGifs, SpecError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| SpecError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let d = raw.dimension;
    if d == 0 {
        return Err(SpecError::field("`dimension` must be positive"));
    }
    if raw.matrix.len() != d * d {
        return Err(SpecError::field(format!(
            "`matrix` needs {} entries, found {}",
            d * d,
            raw.matrix.len()
        )));
    }
    let edges = match (raw.edges, raw.substitution) {
        (Some(_), Some(_)) => {
            return Err(SpecError::field(
                "`edges` and `substitution` are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(SpecError::field(
                "one of `edges` or `substitution` is required",
            ))
        }
        (Some(edges), None) => {
            if raw.maps.is_some() {
                return Err(SpecError::field("`maps` is only used with `substitution`"));
            }
            explicit_edges(&edges, raw.vertices)?
        }
        (None, Some(rules)) => {
            let maps = raw.maps.unwrap_or_default();
            let (names, edges) = expand_rules(&rules, &maps)?;
            if names.len() != raw.vertices {
                return Err(SpecError::field(format!(
                    "`vertices` = {} but {} rules given",
                    raw.vertices,
                    names.len()
                )));
            }
            edges
        }
    };
    let desc = SystemDescription {
        dimension: d,
        matrix: raw.matrix,
        vertex_count: raw.vertices,
        edges,
        osc_asserted: raw.assert_osc,
    };
    Ok(OrderedGifs::build(&desc)?)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn explicit_edges(edges: &[RawEdge], vertices: usize) -> Result<Vec<EdgeSpec>, SpecError> {
    let mut next_rank = vec![1usize; vertices];
    edges
        .iter()
        .enumerate()
        .map(|(n, e)| {
            for (name, v) in [("from", e.from), ("to", e.to)] {
                if v == 0 || v > vertices {
                    return Err(SpecError::field(format!(
                        "edges[{n}].{name} = {v} outside 1..={vertices}"
                    )));
                }
            }
            let source = e.from - 1;
            let rank = next_rank[source];
            next_rank[source] += 1;
            Ok(EdgeSpec {
                source,
                target: e.to - 1,
                rank,
                digit: e.digit.clone(),
            })
        })
        .collect()
}

/// Expands substitution rules into a system. Vertices are numbered in rule
/// order; `maps` is the digit table for indexed references.
pub fn expand_substitution(
    rules: &[Rule],
    maps: &[Vec<f64>],
    dimension: usize,
    matrix: &[f64],
) -> Result<OrderedGifs, SpecError> {
    let (names, edges) = expand_rules(rules, maps)?;
    let desc = SystemDescription {
        dimension,
        matrix: matrix.to_vec(),
        vertex_count: names.len(),
        edges,
        osc_asserted: false,
    };
    Ok(OrderedGifs::build(&desc)?)
}

fn expand_rules(
    rules: &[Rule],
    maps: &[Vec<f64>],
) -> Result<(Vec<String>, Vec<EdgeSpec>), SpecError> {
    let mut index = HashMap::new();
    for (i, r) in rules.iter().enumerate() {
        if index.insert(r.lhs.as_str(), i).is_some() {
            return Err(SpecError::field(format!("duplicate rule for `{}`", r.lhs)));
        }
    }
    let mut edges = Vec::new();
    for (source, r) in rules.iter().enumerate() {
        if r.rhs.is_empty() {
            return Err(SpecError::EmptyRule(r.lhs.clone()));
        }
        for (k, term) in r.rhs.iter().enumerate() {
            let target = *index
                .get(term.target.as_str())
                .ok_or_else(|| SpecError::UnknownSymbol(term.target.clone()))?;
            let digit = match &term.map {
                MapRef::Digit(d) => d.clone(),
                MapRef::Index(j) => maps
                    .get(j.wrapping_sub(1))
                    .cloned()
                    .ok_or_else(|| SpecError::UnknownSymbol(format!("map {j}")))?,
            };
            edges.push(EdgeSpec {
                source,
                target,
                rank: k + 1,
                digit,
            });
        }
    }
    Ok((rules.iter().map(|r| r.lhs.clone()).collect(), edges))
}

/// Canonical explicit-edge text of a system: edges grouped by source in rank
/// order, reals in shortest round-trip form.
pub fn write_spec(g: &OrderedGifs) -> String {
    let d = g.dimension();
    let m = g.matrix();
    let entries: Vec<f64> = (0..d)
        .flat_map(|i| (0..d).map(move |j| m[(i, j)]))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "dimension = {d}");
    let _ = writeln!(out, "matrix = {}", real_list(&entries));
    let _ = writeln!(out, "vertices = {}", g.vertex_count());
    let _ = writeln!(out, "assert_osc = {}", g.osc_asserted());
    for i in 0..g.vertex_count() {
        for &id in g.outgoing(i) {
            let e = g.edge(id);
            let _ = write!(
                out,
                "\n[[edges]]\nfrom = {}\nto = {}\ndigit = {}\n",
                e.source + 1,
                e.target + 1,
                real_list(e.digit.as_slice())
            );
        }
    }
    out
}

fn real_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(", "))
}
