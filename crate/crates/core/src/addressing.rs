//! Symbolic addressing: lowest and highest walks, heads and tails of the
//! invariant sets, the projection of finite walks, and the chain condition.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::gifs::{operator_norm, AffineMap, OrderedGifs, Point, Walk};

/// Default absolute tolerance of the chain-condition check.
pub const DEFAULT_CHAIN_TOL: f64 = 1e-9;

/// Walk-count budget for the anchor sweep behind the radius bounds.
const SWEEP_WALK_BUDGET: u128 = 200_000;
const SWEEP_MAX_DEPTH: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AddressingError {
    #[error("singular fixed-point system for the cycle through vertex {vertex}")]
    SingularSystem { vertex: usize },
    #[error("no sweep depth makes A^-k contracting in operator norm")]
    NoContractingDepth,
}

/// An infinite walk `preperiod + cycle + cycle + ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventuallyPeriodic {
    pub start: usize,
    pub preperiod: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl EventuallyPeriodic {
    /// The first `n` edges.
    pub fn prefix(&self, n: usize) -> Walk {
        let mut edges = Vec::with_capacity(n);
        edges.extend(self.preperiod.iter().take(n).copied());
        while edges.len() < n {
            let k = edges.len() - self.preperiod.len();
            edges.push(self.cycle[k % self.cycle.len()]);
        }
        Walk {
            start: self.start,
            edges,
        }
    }
}

/// Follows the edge chosen by `pick` at every vertex until a vertex repeats.
fn follow(g: &OrderedGifs, vertex: usize, pick: impl Fn(usize) -> usize) -> EventuallyPeriodic {
    let mut seen = vec![usize::MAX; g.vertex_count()];
    let mut edges = Vec::new();
    let mut at = vertex;
    while seen[at] == usize::MAX {
        seen[at] = edges.len();
        let e = pick(at);
        edges.push(e);
        at = g.edge(e).target;
    }
    let cycle = edges.split_off(seen[at]);
    EventuallyPeriodic {
        start: vertex,
        preperiod: edges,
        cycle,
    }
}

/// The walk that always takes the rank-1 edge.
pub fn lowest_walk(g: &OrderedGifs, vertex: usize) -> EventuallyPeriodic {
    follow(g, vertex, |v| g.lowest_edge(v))
}

/// The walk that always takes the highest-ranked edge.
pub fn highest_walk(g: &OrderedGifs, vertex: usize) -> EventuallyPeriodic {
    follow(g, vertex, |v| g.highest_edge(v))
}

fn limit_point(g: &OrderedGifs, walk: &EventuallyPeriodic) -> Result<Point, AddressingError> {
    let cycle_start = walk
        .preperiod
        .last()
        .map_or(walk.start, |&e| g.edge(e).target);
    let cycle_map = g.walk_affine_map(&Walk {
        start: cycle_start,
        edges: walk.cycle.clone(),
    });
    let n = g.dimension();
    let system = DMatrix::<f64>::identity(n, n) - &cycle_map.linear;
    let lu = system.lu();
    let mut x = lu
        .solve(&cycle_map.offset)
        .ok_or(AddressingError::SingularSystem { vertex: walk.start })?;
    // one step of iterative refinement
    let residual = cycle_map.apply(&x) - &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    let pre = Walk {
        start: walk.start,
        edges: walk.preperiod.clone(),
    };
    Ok(g.apply_walk(&pre, &x))
}

/// Heads, tails and radius bounds of the invariant sets.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub heads: Vec<Point>,
    pub tails: Vec<Point>,
    pub lowest: Vec<EventuallyPeriodic>,
    pub highest: Vec<EventuallyPeriodic>,
    /// `radii[i]` bounds `‖y - head_i‖` over `y ∈ E_i`.
    pub radii: Vec<f64>,
}

impl BoundaryData {
    pub fn compute(g: &OrderedGifs) -> Result<Self, AddressingError> {
        let n = g.vertex_count();
        let lowest: Vec<_> = (0..n).map(|v| lowest_walk(g, v)).collect();
        let highest: Vec<_> = (0..n).map(|v| highest_walk(g, v)).collect();
        let heads = lowest
            .iter()
            .map(|w| limit_point(g, w))
            .collect::<Result<Vec<_>, _>>()?;
        let tails = highest
            .iter()
            .map(|w| limit_point(g, w))
            .collect::<Result<Vec<_>, _>>()?;
        let radii = radius_bounds(g, &heads)?;
        Ok(Self {
            heads,
            tails,
            lowest,
            highest,
            radii,
        })
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// `π_i(w)` approximated by `g_w(head_{t(w)})`, with a Euclidean bound on
    /// the distance to the projection of any infinite extension of `w`.
    pub fn project(&self, g: &OrderedGifs, w: &Walk) -> (Point, f64) {
        let t = w.terminal(g);
        let point = g.apply_walk(w, &self.heads[t]);
        let radius = g.inverse_power_norm(w.len()) * self.radii[t];
        (point, radius)
    }
}

/// Anchors `g_w(head_{t(w)})` of all walks of length `depth` from `vertex`,
/// visited in lexicographic order.
pub fn for_each_anchor(
    g: &OrderedGifs,
    heads: &[Point],
    vertex: usize,
    depth: usize,
    mut visit: impl FnMut(&[usize], Point),
) {
    let d = g.dimension();
    let mut powers = vec![DMatrix::<f64>::identity(d, d)];
    for k in 0..depth {
        let next = &powers[k] * g.inverse();
        powers.push(next);
    }
    // digit contribution A^{-k} d_e, precomputed per level and edge
    let contributions: Vec<Vec<Point>> = (1..=depth)
        .map(|k| g.edges().iter().map(|e| &powers[k] * &e.digit).collect())
        .collect();
    let mut stack = Vec::with_capacity(depth);
    let offset = DVector::zeros(d);
    anchor_dfs(
        g,
        heads,
        &powers,
        &contributions,
        vertex,
        depth,
        &offset,
        &mut stack,
        &mut visit,
    );
}

#[allow(clippy::too_many_arguments)]
fn anchor_dfs(
    g: &OrderedGifs,
    heads: &[Point],
    powers: &[DMatrix<f64>],
    contributions: &[Vec<Point>],
    at: usize,
    remaining: usize,
    offset: &Point,
    stack: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize], Point),
) {
    if remaining == 0 {
        let k = stack.len();
        visit(stack, offset + &powers[k] * &heads[at]);
        return;
    }
    let level = stack.len();
    for &e in g.outgoing(at) {
        stack.push(e);
        let next = offset + &contributions[level][e];
        anchor_dfs(
            g,
            heads,
            powers,
            contributions,
            g.edge(e).target,
            remaining - 1,
            &next,
            stack,
            visit,
        );
        stack.pop();
    }
}

/// Per-vertex bounds on `sup_{y ∈ E_i} ‖y - head_i‖`.
///
/// With `m_i` the largest anchor distance at sweep depth `k` and
/// `s = ‖A^{-k}‖ < 1`, every point of `E_i` lies within `m_i + s R` of
/// `head_i`, where `R = max_i m_i / (1 - s)`.
fn radius_bounds(g: &OrderedGifs, heads: &[Point]) -> Result<Vec<f64>, AddressingError> {
    let depth = sweep_depth(g)?;
    let s = g.inverse_power_norm(depth);
    let local: Vec<f64> = (0..g.vertex_count())
        .map(|i| {
            let mut m = 0.0f64;
            for_each_anchor(g, heads, i, depth, |_, p| {
                m = m.max((p - &heads[i]).norm());
            });
            m
        })
        .collect();
    let global = local.iter().copied().fold(0.0, f64::max) / (1.0 - s);
    Ok(local.iter().map(|m| m + s * global).collect())
}

fn sweep_depth(g: &OrderedGifs) -> Result<usize, AddressingError> {
    let mut best = None;
    for k in 1..=SWEEP_MAX_DEPTH {
        let count = g.walk_counts(k).into_iter().max().unwrap_or(0);
        if count > SWEEP_WALK_BUDGET {
            break;
        }
        if g.inverse_power_norm(k) < 1.0 {
            best = Some(k);
        }
    }
    if let Some(k) = best {
        return Ok(k);
    }
    (1..=256)
        .find(|&k| g.inverse_power_norm(k) < 1.0)
        .ok_or(AddressingError::NoContractingDepth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainViolation {
    pub vertex: usize,
    /// 1-based ranks of the adjacent pair.
    pub lower_rank: usize,
    pub upper_rank: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub tolerance: f64,
    pub pairs_checked: usize,
    pub max_gap: f64,
    pub violations: Vec<ChainViolation>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `g_ω(tail_{t(ω)}) = g_γ(head_{t(γ)})` for every adjacent pair
/// `ω ≺ γ` of outgoing edges.
pub fn check_chain_condition(g: &OrderedGifs, bd: &BoundaryData, tol: f64) -> ChainReport {
    let mut report = ChainReport {
        tolerance: tol,
        pairs_checked: 0,
        max_gap: 0.0,
        violations: Vec::new(),
    };
    for i in 0..g.vertex_count() {
        for pair in g.outgoing(i).windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let end = g.apply_edge(lo, &bd.tails[g.edge(lo).target]);
            let start = g.apply_edge(hi, &bd.heads[g.edge(hi).target]);
            let gap = (end - start).norm();
            report.pairs_checked += 1;
            report.max_gap = report.max_gap.max(gap);
            if gap.is_nan() || gap > tol {
                report.violations.push(ChainViolation {
                    vertex: i,
                    lower_rank: g.edge(lo).rank,
                    upper_rank: g.edge(hi).rank,
                    gap,
                });
            }
        }
    }
    report
}

/// Largest gap between the end of `E_w` and the start of `E_{w'}` over all
/// adjacent walks `w ≺ w'` of length `depth` from `vertex`, where the end
/// and start are `g_w(tail_{t(w)})` and `g_{w'}(head_{t(w')})`.
pub fn linearity_gap(g: &OrderedGifs, bd: &BoundaryData, vertex: usize, depth: usize) -> f64 {
    let mut worst = 0.0f64;
    let mut previous_end: Option<Point> = None;
    let d = g.dimension();
    g.for_each_walk(vertex, depth, |edges| {
        let map: AffineMap = {
            let mut power = DMatrix::<f64>::identity(d, d);
            let mut offset = DVector::<f64>::zeros(d);
            for &e in edges {
                power = &power * g.inverse();
                offset += &power * &g.edge(e).digit;
            }
            AffineMap {
                linear: power,
                offset,
            }
        };
        let t = edges.last().map_or(vertex, |&e| g.edge(e).target);
        let start = map.apply(&bd.heads[t]);
        if let Some(end) = &previous_end {
            worst = worst.max((end - &start).norm());
        }
        previous_end = Some(map.apply(&bd.tails[t]));
    });
    worst
}

/// `‖A^{-n}‖` for the radius of depth-`n` cylinders.
pub fn cylinder_scale(g: &OrderedGifs, n: usize) -> f64 {
    let mut p = DMatrix::<f64>::identity(g.dimension(), g.dimension());
    for _ in 0..n {
        p = &p * g.inverse();
    }
    operator_norm(&p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gifs::{EdgeSpec, SystemDescription};

    fn scalar_loop(a: f64, digit: f64) -> OrderedGifs {
        OrderedGifs::build(&SystemDescription {
            dimension: 1,
            matrix: vec![a],
            vertex_count: 1,
            edges: vec![EdgeSpec {
                source: 0,
                target: 0,
                rank: 1,
                digit: vec![digit],
            }],
            osc_asserted: true,
        })
        .unwrap()
    }

    #[test]
    fn single_self_loop_walks() {
        let g = scalar_loop(2.0, 0.0);
        let low = lowest_walk(&g, 0);
        assert!(low.preperiod.is_empty());
        assert_eq!(low.cycle, vec![0]);
        assert_eq!(highest_walk(&g, 0), low);
    }

    #[test]
    fn linear_contraction_head_is_origin() {
        let g = scalar_loop(3.0, 0.0);
        let bd = BoundaryData::compute(&g).unwrap();
        assert_eq!(bd.heads[0][0], 0.0);
        assert_eq!(bd.tails[0][0], 0.0);
    }

    #[test]
    fn fixed_point_of_shifted_loop() {
        // x = (x + 1) / 2 -> x = 1
        let g = scalar_loop(2.0, 1.0);
        let bd = BoundaryData::compute(&g).unwrap();
        assert!((bd.heads[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn preperiod_then_cycle() {
        // 0 -> 1 (rank 1), 1 -> 1 (rank 1)
        let g = OrderedGifs::build(&SystemDescription {
            dimension: 1,
            matrix: vec![2.0],
            vertex_count: 2,
            edges: vec![
                EdgeSpec {
                    source: 0,
                    target: 1,
                    rank: 1,
                    digit: vec![1.0],
                },
                EdgeSpec {
                    source: 1,
                    target: 1,
                    rank: 1,
                    digit: vec![0.0],
                },
                EdgeSpec {
                    source: 1,
                    target: 0,
                    rank: 2,
                    digit: vec![1.0],
                },
            ],
            osc_asserted: true,
        })
        .unwrap();
        let low = lowest_walk(&g, 0);
        assert_eq!(low.preperiod, vec![0]);
        assert_eq!(low.cycle, vec![1]);
        assert_eq!(low.prefix(4).edges, vec![0, 1, 1, 1]);
        let bd = BoundaryData::compute(&g).unwrap();
        // head_1 = 0, head_0 = (0 + 1) / 2
        assert_eq!(bd.heads[1][0], 0.0);
        assert_eq!(bd.heads[0][0], 0.5);
    }
}
