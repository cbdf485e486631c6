//! Ordered single-matrix graph-directed iterated function systems.
//!
//! Every edge `e` from vertex `i` to vertex `j` carries the contraction
//! `g_e(x) = A^{-1}(x + d_e)` for a shared expanding matrix `A`. Outgoing edges
//! of each vertex are totally ordered by their rank, which induces the
//! lexicographic order on walks used throughout the crate.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// A point (or vector) of the ambient space.
pub type Point = DVector<f64>;

/// Largest number of walks `enumerate_walks` will materialise by default.
pub const DEFAULT_WALK_CAP: usize = 10_000_000;

const EXPANDING_MARGIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GifsError {
    #[error("matrix is not expanding: eigenvalue of modulus {modulus} <= 1")]
    NonExpandingMatrix { modulus: f64 },
    #[error("vertex {vertex} has no outgoing edge")]
    EmptyVertex { vertex: usize },
    #[error("ranks of vertex {vertex} are not exactly 1..={expected}")]
    RankGap { vertex: usize, expected: usize },
    #[error("vertex {vertex} out of range (system has {count} vertices)")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("walk count {count} exceeds cap {cap}")]
    DepthOverflow { count: u128, cap: usize },
    #[error("invalid walk: {0}")]
    InvalidWalk(String),
}

/// One edge of the graph. `source`/`target` are 0-based, `rank` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub rank: usize,
    pub digit: Point,
}

/// Input to [`OrderedGifs::build`].
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescription {
    pub dimension: usize,
    /// Row-major `d*d` entries of `A`.
    pub matrix: Vec<f64>,
    pub vertex_count: usize,
    pub edges: Vec<EdgeSpec>,
    pub osc_asserted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub source: usize,
    pub target: usize,
    pub rank: usize,
    pub digit: Vec<f64>,
}

/// A validated ordered single-matrix GIFS. Immutable after construction.
#[derive(Debug, Clone)]
pub struct OrderedGifs {
    dimension: usize,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det_q: f64,
    vertex_count: usize,
    edges: Vec<Edge>,
    /// Edge indices leaving each vertex, sorted by rank.
    outgoing: Vec<Vec<usize>>,
    osc_asserted: bool,
}

/// A finite walk: a start vertex and a sequence of compatible edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Walk {
    pub start: usize,
    pub edges: Vec<usize>,
}

/// The affine map `x -> linear * x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub linear: DMatrix<f64>,
    pub offset: Point,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            linear: DMatrix::identity(dim, dim),
            offset: DVector::zeros(dim),
        }
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.linear * x + &self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &inner.linear,
            offset: &self.linear * &inner.offset + &self.offset,
        }
    }

    /// Fixed point of the map, solved from `(I - linear) x = offset`.
    pub fn fixed_point(&self) -> Option<Point> {
        let n = self.linear.nrows();
        let system = DMatrix::<f64>::identity(n, n) - &self.linear;
        system.lu().solve(&self.offset)
    }
}

impl Walk {
    pub fn empty(start: usize) -> Self {
        Self {
            start,
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Terminal vertex `t(w)`; the start vertex for an empty walk.
    pub fn terminal(&self, g: &OrderedGifs) -> usize {
        self.edges.last().map_or(self.start, |&e| g.edges[e].target)
    }

    pub fn prefix(&self, n: usize) -> Walk {
        Walk {
            start: self.start,
            edges: self.edges[..n.min(self.edges.len())].to_vec(),
        }
    }

    pub fn pushed(&self, edge: usize) -> Walk {
        let mut edges = self.edges.clone();
        edges.push(edge);
        Walk {
            start: self.start,
            edges,
        }
    }

    /// Concatenation `self + tail`; `tail` must start where `self` ends.
    pub fn concat(&self, tail: &Walk) -> Walk {
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&tail.edges);
        Walk {
            start: self.start,
            edges,
        }
    }

    /// Ranks of the edges along the walk; lexicographic order on walks from
    /// a fixed vertex is the order of these rank sequences.
    pub fn ranks(&self, g: &OrderedGifs) -> Vec<usize> {
        self.edges.iter().map(|&e| g.edges[e].rank).collect()
    }
}

impl OrderedGifs {
    pub fn build(desc: &SystemDescription) -> Result<Self, GifsError> {
        let d = desc.dimension;
        if d == 0 {
            return Err(GifsError::DimensionMismatch {
                what: "dimension",
                expected: 1,
                got: 0,
            });
        }
        if desc.matrix.len() != d * d {
            return Err(GifsError::DimensionMismatch {
                what: "matrix",
                expected: d * d,
                got: desc.matrix.len(),
            });
        }
        if desc.matrix.iter().any(|v| !v.is_finite()) {
            return Err(GifsError::NonFinite { what: "matrix" });
        }
        let matrix = DMatrix::from_row_slice(d, d, &desc.matrix);
        let min_modulus = matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        if min_modulus <= 1.0 + EXPANDING_MARGIN {
            return Err(GifsError::NonExpandingMatrix {
                modulus: min_modulus,
            });
        }
        let det_q = matrix.determinant().abs();
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(GifsError::NonExpandingMatrix { modulus: 0.0 })?;

        let n = desc.vertex_count;
        let mut edges = Vec::with_capacity(desc.edges.len());
        for spec in &desc.edges {
            for v in [spec.source, spec.target] {
                if v >= n {
                    return Err(GifsError::VertexOutOfRange {
                        vertex: v,
                        count: n,
                    });
                }
            }
            if spec.digit.len() != d {
                return Err(GifsError::DimensionMismatch {
                    what: "digit",
                    expected: d,
                    got: spec.digit.len(),
                });
            }
            if spec.digit.iter().any(|v| !v.is_finite()) {
                return Err(GifsError::NonFinite { what: "digit" });
            }
            edges.push(Edge {
                source: spec.source,
                target: spec.target,
                rank: spec.rank,
                digit: DVector::from_column_slice(&spec.digit),
            });
        }

        let mut outgoing = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            outgoing[e.source].push(id);
        }
        for (vertex, out) in outgoing.iter_mut().enumerate() {
            if out.is_empty() {
                return Err(GifsError::EmptyVertex { vertex });
            }
            out.sort_by_key(|&id| edges[id].rank);
            let contiguous = out
                .iter()
                .enumerate()
                .all(|(k, &id)| edges[id].rank == k + 1);
            if !contiguous {
                return Err(GifsError::RankGap {
                    vertex,
                    expected: out.len(),
                });
            }
        }

        Ok(Self {
            dimension: d,
            matrix,
            inverse,
            det_q,
            vertex_count: n,
            edges,
            outgoing,
            osc_asserted: desc.osc_asserted,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `q = |det A|`.
    pub fn det_q(&self) -> f64 {
        self.det_q
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Outgoing edge ids of `vertex`, in rank order.
    pub fn outgoing(&self, vertex: usize) -> &[usize] {
        &self.outgoing[vertex]
    }

    pub fn out_degree(&self, vertex: usize) -> usize {
        self.outgoing[vertex].len()
    }

    pub fn osc_asserted(&self) -> bool {
        self.osc_asserted
    }

    /// Lowest (rank 1) outgoing edge of `vertex`.
    pub fn lowest_edge(&self, vertex: usize) -> usize {
        self.outgoing[vertex][0]
    }

    /// Highest (rank `ℓ_i`) outgoing edge of `vertex`.
    pub fn highest_edge(&self, vertex: usize) -> usize {
        *self.outgoing[vertex].last().expect("validated non-empty")
    }

    /// The description this system was built from, with ranks made explicit.
    pub fn description(&self) -> SystemDescription {
        let mut edges = Vec::with_capacity(self.edges.len());
        for out in &self.outgoing {
            for &id in out {
                let e = &self.edges[id];
                edges.push(EdgeSpec {
                    source: e.source,
                    target: e.target,
                    rank: e.rank,
                    digit: e.digit.iter().copied().collect(),
                });
            }
        }
        SystemDescription {
            dimension: self.dimension,
            matrix: self.matrix.transpose().iter().copied().collect(),
            vertex_count: self.vertex_count,
            edges,
            osc_asserted: self.osc_asserted,
        }
    }

    /// The contraction `g_e(x) = A^{-1}(x + d_e)`.
    pub fn edge_map(&self, id: usize) -> AffineMap {
        AffineMap {
            linear: self.inverse.clone(),
            offset: &self.inverse * &self.edges[id].digit,
        }
    }

    pub fn apply_edge(&self, id: usize, x: &Point) -> Point {
        &self.inverse * (x + &self.edges[id].digit)
    }

    /// Checks edge compatibility of `w`.
    pub fn check_walk(&self, w: &Walk) -> Result<(), GifsError> {
        if w.start >= self.vertex_count {
            return Err(GifsError::VertexOutOfRange {
                vertex: w.start,
                count: self.vertex_count,
            });
        }
        let mut at = w.start;
        for (k, &e) in w.edges.iter().enumerate() {
            let edge = self
                .edges
                .get(e)
                .ok_or_else(|| GifsError::InvalidWalk(format!("unknown edge id {e}")))?;
            if edge.source != at {
                return Err(GifsError::InvalidWalk(format!(
                    "edge {k} leaves vertex {} but walk is at {at}",
                    edge.source
                )));
            }
            at = edge.target;
        }
        Ok(())
    }

    /// `g_w = g_{w_1} ∘ ... ∘ g_{w_n}` as `x -> A^{-n} x + c`.
    pub fn walk_affine_map(&self, w: &Walk) -> AffineMap {
        // c = Σ_k A^{-k} d_{w_k}
        let d = self.dimension;
        let mut power = DMatrix::<f64>::identity(d, d);
        let mut offset = DVector::<f64>::zeros(d);
        for &e in &w.edges {
            power = &power * &self.inverse;
            offset += &power * &self.edges[e].digit;
        }
        AffineMap {
            linear: power,
            offset,
        }
    }

    /// `g_w(x)`.
    pub fn apply_walk(&self, w: &Walk, x: &Point) -> Point {
        w.edges
            .iter()
            .rev()
            .fold(x.clone(), |acc, &e| self.apply_edge(e, &acc))
    }

    /// `M[i][j]` = number of edges from `j` to `i`.
    pub fn associated_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.vertex_count;
        let mut m = vec![vec![0u64; n]; n];
        for e in &self.edges {
            m[e.target][e.source] += 1;
        }
        m
    }

    /// `O[i][j]` = number of edges from `i` to `j` (transpose of the
    /// associated matrix).
    pub fn outgoing_count_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.vertex_count;
        let mut m = vec![vec![0u64; n]; n];
        for e in &self.edges {
            m[e.source][e.target] += 1;
        }
        m
    }

    /// Number of walks of length `k` from each vertex, saturating at `u128::MAX`.
    pub fn walk_counts(&self, k: usize) -> Vec<u128> {
        let mut counts = vec![1u128; self.vertex_count];
        for _ in 0..k {
            counts = (0..self.vertex_count)
                .map(|i| {
                    self.outgoing[i].iter().fold(0u128, |acc, &e| {
                        acc.saturating_add(counts[self.edges[e].target])
                    })
                })
                .collect();
        }
        counts
    }

    /// All walks of length `k` from `vertex`, in lexicographic order.
    pub fn enumerate_walks(&self, vertex: usize, k: usize) -> Result<Vec<Walk>, GifsError> {
        self.enumerate_walks_capped(vertex, k, DEFAULT_WALK_CAP)
    }

    pub fn enumerate_walks_capped(
        &self,
        vertex: usize,
        k: usize,
        cap: usize,
    ) -> Result<Vec<Walk>, GifsError> {
        if vertex >= self.vertex_count {
            return Err(GifsError::VertexOutOfRange {
                vertex,
                count: self.vertex_count,
            });
        }
        let count = self.walk_counts(k)[vertex];
        if count > cap as u128 {
            return Err(GifsError::DepthOverflow { count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut stack = Vec::with_capacity(k);
        self.walk_dfs(vertex, k, &mut stack, &mut |edges| {
            out.push(Walk {
                start: vertex,
                edges: edges.to_vec(),
            })
        });
        Ok(out)
    }

    /// Visits every walk of length `k` from `vertex` in lexicographic order
    /// without materialising the list.
    pub fn for_each_walk(&self, vertex: usize, k: usize, mut visit: impl FnMut(&[usize])) {
        let mut stack = Vec::with_capacity(k);
        self.walk_dfs(vertex, k, &mut stack, &mut visit);
    }

    fn walk_dfs(
        &self,
        at: usize,
        remaining: usize,
        stack: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if remaining == 0 {
            visit(stack);
            return;
        }
        for &e in &self.outgoing[at] {
            stack.push(e);
            self.walk_dfs(self.edges[e].target, remaining - 1, stack, visit);
            stack.pop();
        }
    }

    /// Spectral norm of `A^{-n}`.
    pub fn inverse_power_norm(&self, n: usize) -> f64 {
        let mut p = DMatrix::<f64>::identity(self.dimension, self.dimension);
        for _ in 0..n {
            p = &p * &self.inverse;
        }
        operator_norm(&p)
    }

    /// A copy of the system with the ranks of two outgoing edges of
    /// `vertex` exchanged (0-based positions in rank order).
    pub fn with_swapped_ranks(&self, vertex: usize, a: usize, b: usize) -> OrderedGifs {
        let mut g = self.clone();
        let (ea, eb) = (g.outgoing[vertex][a], g.outgoing[vertex][b]);
        let ra = g.edges[ea].rank;
        g.edges[ea].rank = g.edges[eb].rank;
        g.edges[eb].rank = ra;
        g.outgoing[vertex].swap(a, b);
        g
    }
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Primitivity by boolean matrix powers up to the Wielandt bound `(N-1)^2 + 1`.
pub fn is_primitive(m: &[Vec<u64>]) -> bool {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return false;
    }
    let base: Vec<Vec<bool>> = m
        .iter()
        .map(|row| row.iter().map(|&x| x > 0).collect())
        .collect();
    let bound = (n - 1) * (n - 1) + 1;
    let mut power = base.clone();
    for _ in 0..bound {
        if power.iter().all(|row| row.iter().all(|&x| x)) {
            return true;
        }
        power = bool_mul(&power, &base);
    }
    power.iter().all(|row| row.iter().all(|&x| x))
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}
