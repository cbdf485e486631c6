//! The measure-recording system: a one-dimensional GIFS on the intervals
//! `F_i = [0, v_i]` with the same graph and order, and common ratio `λ^{-1}`.
//!
//! Edge `γ_k` (the k-th outgoing edge of `i`) maps `F_{t(γ_k)}` onto
//! `[b_k, b_k + λ^{-1} v_{t(γ_k)}]` with `b_k = λ^{-1} Σ_{j<k} v_{t(γ_j)}`.
//! Descending through these sub-intervals inverts the projection `ρ_i`.

use thiserror::Error;

use crate::gifs::{OrderedGifs, Walk};
use crate::spectral::PerronData;

/// Absolute tolerance (relative to `max v`) for recognising a breakpoint.
pub const BREAKPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordingError {
    #[error("parameter {t} outside [0, {length}]")]
    OutOfRange { t: f64, length: f64 },
    #[error("parameter {t} is not a breakpoint of depth <= {depth}")]
    NotABreakpoint { t: f64, depth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSystem {
    lengths: Vec<f64>,
    lambda: f64,
    ratio: f64,
    offsets: Vec<Vec<f64>>,
    breakpoints: Vec<Vec<f64>>,
    /// Outgoing edge ids in rank order, copied from the graph.
    edges: Vec<Vec<usize>>,
    targets: Vec<usize>,
    /// Highest and lowest edge of every vertex.
    lowest: Vec<usize>,
    highest: Vec<usize>,
}

/// Result of a descent: the length-`n` walk whose interval contains `t` and
/// the parameter rescaled into `F_{t(w)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Address {
    pub walk: Walk,
    pub residual: f64,
}

/// Interval `[start, start + length]` of a cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub length: f64,
}

impl Interval {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    pub fn midpoint(&self) -> f64 {
        self.start + 0.5 * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl RecordingSystem {
    pub fn build(g: &OrderedGifs, pd: &PerronData) -> Self {
        let ratio = 1.0 / pd.lambda;
        let n = g.vertex_count();
        let mut offsets = Vec::with_capacity(n);
        let mut breakpoints = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let mut offs = Vec::with_capacity(g.out_degree(i));
            let mut ends = Vec::with_capacity(g.out_degree(i));
            for &e in g.outgoing(i) {
                offs.push(acc * ratio);
                acc += pd.measure[g.edge(e).target];
                ends.push(acc * ratio);
            }
            offsets.push(offs);
            breakpoints.push(ends);
        }
        Self {
            lengths: pd.measure.clone(),
            lambda: pd.lambda,
            ratio,
            offsets,
            breakpoints,
            edges: (0..n).map(|i| g.outgoing(i).to_vec()).collect(),
            targets: g.edges().iter().map(|e| e.target).collect(),
            lowest: (0..n).map(|i| g.lowest_edge(i)).collect(),
            highest: (0..n).map(|i| g.highest_edge(i)).collect(),
        }
    }

    /// `|F_i| = v_i`.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, vertex: usize) -> f64 {
        self.lengths[vertex]
    }

    /// Common contraction ratio `λ^{-1}`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn offsets(&self, vertex: usize) -> &[f64] {
        &self.offsets[vertex]
    }

    pub fn breakpoints(&self, vertex: usize) -> &[f64] {
        &self.breakpoints[vertex]
    }

    /// Number of leading levels in which a breakpoint can still be told
    /// apart from its neighbours: the snapping tolerance grows by `λ` per
    /// level and must stay well below the shortest sub-interval.
    pub fn reliable_seam_depth(&self) -> usize {
        let scale = self.lengths.iter().copied().fold(0.0, f64::max);
        let shortest = self.lengths.iter().copied().fold(f64::INFINITY, f64::min) * self.ratio;
        let mut tol = BREAKPOINT_TOL * scale;
        let mut depth = 0;
        while tol <= 1e-3 * shortest && depth < 64 {
            tol *= self.lambda;
            depth += 1;
        }
        depth
    }

    /// Interval `F_w = f_w(F_{t(w)})`.
    pub fn cylinder_interval(&self, w: &Walk) -> Interval {
        let mut start = 0.0;
        let mut scale = 1.0;
        let mut at = w.start;
        for &e in &w.edges {
            let k = self.position(at, e);
            start += scale * self.offsets[at][k];
            scale *= self.ratio;
            at = self.targets[e];
        }
        Interval {
            start,
            length: scale * self.lengths[at],
        }
    }

    fn position(&self, vertex: usize, edge: usize) -> usize {
        self.edges[vertex]
            .iter()
            .position(|&x| x == edge)
            .expect("edge leaves vertex")
    }

    fn check_range(&self, vertex: usize, t: f64) -> Result<(), RecordingError> {
        let length = self.lengths[vertex];
        let slack = BREAKPOINT_TOL * length;
        if !(t >= -slack && t <= length + slack) {
            return Err(RecordingError::OutOfRange { t, length });
        }
        Ok(())
    }

    /// Index of the sub-interval holding `t` under the left-closed,
    /// right-open convention (the last sub-interval is closed).
    fn locate(&self, vertex: usize, t: f64) -> usize {
        let offs = &self.offsets[vertex];
        offs.iter().rposition(|&b| b <= t).unwrap_or(0)
    }

    /// Greedy descent of `t ∈ [0, v_i]` through `depth` levels.
    pub fn address_of(
        &self,
        vertex: usize,
        t: f64,
        depth: usize,
    ) -> Result<Address, RecordingError> {
        self.check_range(vertex, t)?;
        let snap = BREAKPOINT_TOL * self.lengths.iter().copied().fold(0.0, f64::max);
        let mut t = t.clamp(0.0, self.lengths[vertex]);
        let mut at = vertex;
        let mut edges = Vec::with_capacity(depth);
        for _ in 0..depth {
            let k = self.locate(at, t);
            let e = self.edges[at][k];
            let next = self.targets[e];
            // rescaling amplifies rounding by λ per level; pin residuals that
            // sit on an end of F_next so endpoints stay on their extreme walks
            t = (self.lambda * (t - self.offsets[at][k])).clamp(0.0, self.lengths[next]);
            if t <= snap {
                t = 0.0;
            } else if self.lengths[next] - t <= snap {
                t = self.lengths[next];
            }
            edges.push(e);
            at = next;
        }
        Ok(Address {
            walk: Walk {
                start: vertex,
                edges,
            },
            residual: t,
        })
    }

    /// Left- and right-limit addresses of length `depth` at a breakpoint of
    /// depth at most `depth`.
    pub fn address_pair(
        &self,
        vertex: usize,
        t: f64,
        depth: usize,
    ) -> Result<(Walk, Walk), RecordingError> {
        self.address_pair_extended(vertex, t, depth, depth)
    }

    /// Like [`address_pair`](Self::address_pair) but only looks for the seam
    /// in the first `seam_depth` levels and returns walks of length `length`.
    pub fn address_pair_extended(
        &self,
        vertex: usize,
        t: f64,
        seam_depth: usize,
        length: usize,
    ) -> Result<(Walk, Walk), RecordingError> {
        self.check_range(vertex, t)?;
        let scale = self.lengths.iter().copied().fold(0.0, f64::max);
        let length_i = self.lengths[vertex];
        let mut tol = BREAKPOINT_TOL * scale;
        if t.abs() <= tol {
            let w = self.continuation(vertex, Vec::new(), Side::Right, length);
            return Ok((w.clone(), w));
        }
        if (t - length_i).abs() <= tol {
            let w = self.continuation(vertex, Vec::new(), Side::Left, length);
            return Ok((w.clone(), w));
        }

        let mut t = t;
        let mut at = vertex;
        let mut prefix = Vec::new();
        for _ in 0..seam_depth.min(length) {
            let offs = &self.offsets[at];
            if let Some(k) = (1..offs.len()).find(|&k| (t - offs[k]).abs() <= tol) {
                let mut left = prefix.clone();
                left.push(self.edges[at][k - 1]);
                let left_vertex = self.targets[self.edges[at][k - 1]];
                let left = self.extend(vertex, left, left_vertex, Side::Left, length);
                let mut right = prefix;
                right.push(self.edges[at][k]);
                let right_vertex = self.targets[self.edges[at][k]];
                let right = self.extend(vertex, right, right_vertex, Side::Right, length);
                return Ok((left, right));
            }
            let k = self.locate(at, t);
            let e = self.edges[at][k];
            prefix.push(e);
            t = self.lambda * (t - offs[k]);
            at = self.targets[e];
            tol *= self.lambda;
        }
        Err(RecordingError::NotABreakpoint {
            t,
            depth: seam_depth,
        })
    }

    fn continuation(&self, vertex: usize, prefix: Vec<usize>, side: Side, length: usize) -> Walk {
        self.extend(vertex, prefix, vertex, side, length)
    }

    /// Pads `prefix` (ending at `at`) with highest (`Left`) or lowest
    /// (`Right`) edges up to `length`.
    fn extend(
        &self,
        start: usize,
        mut edges: Vec<usize>,
        mut at: usize,
        side: Side,
        length: usize,
    ) -> Walk {
        while edges.len() < length {
            let e = match side {
                Side::Left => self.highest[at],
                Side::Right => self.lowest[at],
            };
            edges.push(e);
            at = self.targets[e];
        }
        edges.truncate(length);
        Walk { start, edges }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gifs::{EdgeSpec, SystemDescription};

    fn uniform(loops: usize) -> (OrderedGifs, RecordingSystem) {
        let g = OrderedGifs::build(&SystemDescription {
            dimension: 1,
            matrix: vec![loops as f64],
            vertex_count: 1,
            edges: (0..loops)
                .map(|k| EdgeSpec {
                    source: 0,
                    target: 0,
                    rank: k + 1,
                    digit: vec![k as f64],
                })
                .collect(),
            osc_asserted: true,
        })
        .unwrap();
        let pd = PerronData::compute(&g).unwrap();
        let rs = RecordingSystem::build(&g, &pd);
        (g, rs)
    }

    #[test]
    fn equal_split() {
        let (_, rs) = uniform(4);
        assert_eq!(rs.lengths(), &[1.0]);
        assert_eq!(rs.offsets(0), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(rs.breakpoints(0), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn endpoints_map_to_extreme_walks() {
        let (_, rs) = uniform(3);
        assert_eq!(rs.address_of(0, 0.0, 4).unwrap().walk.edges, vec![0; 4]);
        assert_eq!(rs.address_of(0, 1.0, 4).unwrap().walk.edges, vec![2; 4]);
    }

    #[test]
    fn out_of_range() {
        let (_, rs) = uniform(3);
        assert!(matches!(
            rs.address_of(0, 1.5, 2),
            Err(RecordingError::OutOfRange { .. })
        ));
        assert!(rs.address_of(0, -0.1, 2).is_err());
    }

    #[test]
    fn pair_at_interior_breakpoint() {
        let (_, rs) = uniform(2);
        let (l, r) = rs.address_pair(0, 0.5, 3).unwrap();
        assert_eq!(l.edges, vec![0, 1, 1]);
        assert_eq!(r.edges, vec![1, 0, 0]);
        let (l, r) = rs.address_pair(0, 0.25, 3).unwrap();
        assert_eq!(l.edges, vec![0, 0, 1]);
        assert_eq!(r.edges, vec![0, 1, 0]);
        assert!(matches!(
            rs.address_pair(0, 0.3, 3),
            Err(RecordingError::NotABreakpoint { .. })
        ));
    }

    #[test]
    fn pair_at_zero() {
        let (_, rs) = uniform(2);
        let (l, r) = rs.address_pair(0, 0.0, 3).unwrap();
        assert_eq!(l, r);
        assert_eq!(l.edges, vec![0, 0, 0]);
    }
}
