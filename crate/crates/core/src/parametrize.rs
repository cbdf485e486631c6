//! The optimal parametrization `ψ_i = π_i ∘ ρ_i^{-1}`, finite-generation
//! curve approximations, and Hölder-exponent estimates.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::addressing::{
    check_chain_condition, for_each_anchor, AddressingError, BoundaryData, ChainReport,
    DEFAULT_CHAIN_TOL,
};
use crate::gifs::{GifsError, OrderedGifs, Point, Walk, DEFAULT_WALK_CAP};
use crate::pseudonorm::{PseudoNorm, PseudoNormError};
use crate::recording::{RecordingError, RecordingSystem};
use crate::spectral::{PerronData, SpectralError};

/// Largest descent depth `psi` will use.
const MAX_DEPTH: usize = 2048;

/// Separation cut-off for the Euclidean Hölder regression.
pub const SMALL_SEPARATION: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("chain condition failed (max gap {max_gap:e}); refusing to parametrize")]
    ChainConditionUnverified { max_gap: f64 },
    #[error("parameter {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("vertex {vertex} out of range (system has {count} vertices)")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error(transparent)]
    Gifs(#[from] GifsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Addressing(#[from] AddressingError),
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error(transparent)]
    PseudoNorm(#[from] PseudoNormError),
}

/// Generation-`k` approximation of the curve through `E_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveApproximation {
    pub vertex: usize,
    pub depth: usize,
    /// Anchors `g_w(head_{t(w)})` in lexicographic walk order, then `tail_i`.
    pub points: Vec<Point>,
    pub labels: Vec<Walk>,
}

/// Everything needed to evaluate `ψ_i`, built once from a validated system.
#[derive(Debug, Clone)]
pub struct Parametrization {
    gifs: OrderedGifs,
    perron: PerronData,
    recording: RecordingSystem,
    boundary: BoundaryData,
    chain: ChainReport,
    /// `‖A^{-n}‖` for `n = 0..`.
    inverse_norms: Vec<f64>,
}

impl Parametrization {
    pub fn new(gifs: OrderedGifs) -> Result<Self, ParamError> {
        let perron = PerronData::compute(&gifs)?;
        let boundary = BoundaryData::compute(&gifs)?;
        let chain = check_chain_condition(&gifs, &boundary, DEFAULT_CHAIN_TOL);
        Self::from_parts(gifs, perron, boundary, chain)
    }

    pub fn from_parts(
        gifs: OrderedGifs,
        perron: PerronData,
        boundary: BoundaryData,
        chain: ChainReport,
    ) -> Result<Self, ParamError> {
        if !chain.passed() {
            return Err(ParamError::ChainConditionUnverified {
                max_gap: chain.max_gap,
            });
        }
        let recording = RecordingSystem::build(&gifs, &perron);
        let radius = boundary.max_radius();
        let d = gifs.dimension();
        let mut inverse_norms = vec![1.0];
        let mut power = DMatrix::<f64>::identity(d, d);
        while inverse_norms.len() <= MAX_DEPTH {
            power = &power * gifs.inverse();
            let norm = crate::gifs::operator_norm(&power);
            inverse_norms.push(norm);
            if norm * radius < 1e-300 || norm == 0.0 {
                break;
            }
        }
        Ok(Self {
            gifs,
            perron,
            recording,
            boundary,
            chain,
            inverse_norms,
        })
    }

    pub fn gifs(&self) -> &OrderedGifs {
        &self.gifs
    }

    pub fn perron(&self) -> &PerronData {
        &self.perron
    }

    pub fn recording(&self) -> &RecordingSystem {
        &self.recording
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn chain(&self) -> &ChainReport {
        &self.chain
    }

    fn check_vertex(&self, vertex: usize) -> Result<(), ParamError> {
        if vertex >= self.gifs.vertex_count() {
            return Err(ParamError::VertexOutOfRange {
                vertex,
                count: self.gifs.vertex_count(),
            });
        }
        Ok(())
    }

    /// Smallest depth whose cylinders have Euclidean radius at most `tol`.
    pub fn depth_for(&self, tol: f64) -> usize {
        let radius = self.boundary.max_radius();
        self.inverse_norms
            .iter()
            .position(|&s| s * radius <= tol)
            .unwrap_or(self.inverse_norms.len() - 1)
    }

    /// Euclidean radius bound of a depth-`n` cylinder ending at `terminal`.
    pub fn cylinder_radius(&self, n: usize, terminal: usize) -> f64 {
        let s = self
            .inverse_norms
            .get(n)
            .copied()
            .unwrap_or_else(|| self.gifs.inverse_power_norm(n));
        s * self.boundary.radii[terminal]
    }

    /// `g_w(anchor)`.
    pub fn anchor(&self, w: &Walk, anchor: &Point) -> Point {
        self.gifs.apply_walk(w, anchor)
    }

    /// `ψ_i(t)` for `t ∈ [0, 1]`, resolved until the cylinder radius bound
    /// drops below `tol`.
    pub fn psi(&self, vertex: usize, t: f64, tol: f64) -> Result<Point, ParamError> {
        let w = self.address(vertex, t, tol)?;
        Ok(self.anchor(&w, &self.boundary.heads[w.terminal(&self.gifs)]))
    }

    /// Address of `ψ_i(t)` at the resolution of `tol`.
    pub fn address(&self, vertex: usize, t: f64, tol: f64) -> Result<Walk, ParamError> {
        self.check_vertex(vertex)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(ParamError::OutOfRange(t));
        }
        if tol.is_nan() || tol <= 0.0 {
            return Err(ParamError::BadTolerance(tol));
        }
        let depth = self.depth_for(tol);
        let local = t * self.recording.length(vertex);
        Ok(self.recording.address_of(vertex, local, depth)?.walk)
    }

    /// Left and right limits of `ψ_i` at `t`. Away from breakpoints both
    /// equal `ψ_i(t)`.
    pub fn psi_sides(&self, vertex: usize, t: f64, tol: f64) -> Result<(Point, Point), ParamError> {
        self.check_vertex(vertex)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(ParamError::OutOfRange(t));
        }
        if tol.is_nan() || tol <= 0.0 {
            return Err(ParamError::BadTolerance(tol));
        }
        let depth = self.depth_for(tol);
        let local = t * self.recording.length(vertex);
        match self.recording.address_pair_extended(
            vertex,
            local,
            self.recording.reliable_seam_depth().min(depth),
            depth,
        ) {
            Ok((left, right)) => {
                let l = self.anchor(&left, &self.boundary.heads[left.terminal(&self.gifs)]);
                let r = self.anchor(&right, &self.boundary.heads[right.terminal(&self.gifs)]);
                Ok((l, r))
            }
            Err(RecordingError::NotABreakpoint { .. }) => {
                let p = self.psi(vertex, t, tol)?;
                Ok((p.clone(), p))
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Parametrization of `E_1 ∪ ... ∪ E_N` obtained by running through
    /// `ψ_1, ..., ψ_N` in vertex order, each on a share `v_i / Σ v` of `[0, 1]`.
    pub fn psi_union(&self, t: f64, tol: f64) -> Result<Point, ParamError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ParamError::OutOfRange(t));
        }
        let lengths = self.recording.lengths();
        let total: f64 = lengths.iter().sum();
        let mut acc = 0.0;
        for (i, &len) in lengths.iter().enumerate() {
            let share = len / total;
            if t <= acc + share || i + 1 == lengths.len() {
                let local = ((t - acc) / share).clamp(0.0, 1.0);
                return self.psi(i, local, tol);
            }
            acc += share;
        }
        unreachable!("lengths are non-empty")
    }

    /// Generation-`depth` polyline through `E_i`.
    pub fn curve(&self, vertex: usize, depth: usize) -> Result<CurveApproximation, ParamError> {
        self.check_vertex(vertex)?;
        let count = self.gifs.walk_counts(depth)[vertex];
        if count > DEFAULT_WALK_CAP as u128 {
            return Err(GifsError::DepthOverflow {
                count,
                cap: DEFAULT_WALK_CAP,
            }
            .into());
        }
        let mut points = Vec::with_capacity(count as usize + 1);
        let mut labels = Vec::with_capacity(count as usize);
        for_each_anchor(
            &self.gifs,
            &self.boundary.heads,
            vertex,
            depth,
            |edges, p| {
                points.push(p);
                labels.push(Walk {
                    start: vertex,
                    edges: edges.to_vec(),
                });
            },
        );
        let last = labels.last().expect("at least one walk");
        points.push(self.anchor(last, &self.boundary.tails[last.terminal(&self.gifs)]));
        Ok(CurveApproximation {
            vertex,
            depth,
            points,
            labels,
        })
    }

    /// `D̂`: the largest upper estimate of `diam_ω E_i` over all vertices.
    pub fn omega_diameter_bound(
        &self,
        norm: &PseudoNorm,
        depth: usize,
        beta_hat: f64,
    ) -> Result<f64, ParamError> {
        let mut worst = 0.0f64;
        for i in 0..self.gifs.vertex_count() {
            let d = norm.omega_diameter(&self.gifs, &self.boundary, i, depth, beta_hat)?;
            worst = worst.max(d.upper);
        }
        Ok(worst)
    }

    /// Samples parameter pairs and measures both Hölder channels.
    pub fn holder_empirical(
        &self,
        norm: &PseudoNorm,
        vertex: usize,
        config: &HolderConfig,
    ) -> Result<HolderEstimate, ParamError> {
        self.check_vertex(vertex)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Vec::with_capacity(config.pairs);
        while params.len() < config.pairs {
            let t: f64 = rng.random();
            let gap = 10f64.powf(rng.random_range(config.min_log_gap..config.max_log_gap));
            let s = if t + gap <= 1.0 {
                t + gap
            } else if t - gap >= 0.0 {
                t - gap
            } else {
                continue;
            };
            params.push((t, s));
        }

        let samples: Vec<(f64, Point, Point)> = params
            .par_iter()
            .map(|&(t, s)| -> Result<_, ParamError> {
                let a = self.psi(vertex, t, config.tol)?;
                let b = self.psi(vertex, s, config.tol)?;
                Ok(((t - s).abs(), a, b))
            })
            .collect::<Result<_, _>>()?;

        let length = self.recording.length(vertex);
        let inv_alpha = 1.0 / self.perron.alpha;
        let omega: Vec<f64> = samples
            .par_iter()
            .map(|(gap, a, b)| -> Result<f64, ParamError> {
                let dist = norm.distance(a, b)?;
                Ok(dist / (gap * length).powf(inv_alpha))
            })
            .collect::<Result<_, _>>()?;
        let omega_max_ratio = omega.iter().copied().fold(0.0, f64::max);

        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (gap, a, b) in &samples {
            let dist = (a - b).norm();
            if *gap <= SMALL_SEPARATION && dist > 0.0 {
                xs.push(gap.ln());
                ys.push(dist.ln());
            }
        }
        let euclid_slope = least_squares_slope(&xs, &ys);

        let envelope = self.envelope(&samples, config.eps);

        Ok(HolderEstimate {
            pairs: samples.len(),
            euclid_slope,
            euclid_pairs: xs.len(),
            omega_max_ratio,
            omega_ratios: omega,
            envelope,
        })
    }

    /// Ratios `‖ψ(x) - ψ(y)‖ / |x - y|^{ln(λ_min - ε) / ln λ}` over pairs
    /// whose images are at most 1 apart.
    fn envelope(&self, samples: &[(f64, Point, Point)], eps: f64) -> EnvelopeFit {
        let lambda_min = self
            .gifs
            .matrix()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        let exponent = (lambda_min - eps).ln() / self.perron.lambda.ln();
        let split = samples
            .iter()
            .map(|s| s.0)
            .fold(f64::INFINITY, f64::min)
            .max(f64::MIN_POSITIVE)
            * 1e3;
        let mut fit = EnvelopeFit {
            eps,
            exponent,
            constant: 0.0,
            small_separation_max: 0.0,
            large_separation_max: 0.0,
            pairs: 0,
            violations: 0,
        };
        for (gap, a, b) in samples {
            let dist = (a - b).norm();
            if dist > 1.0 {
                continue;
            }
            fit.pairs += 1;
            let ratio = dist / gap.powf(exponent);
            if !ratio.is_finite() {
                fit.violations += 1;
                continue;
            }
            fit.constant = fit.constant.max(ratio);
            if *gap < split {
                fit.small_separation_max = fit.small_separation_max.max(ratio);
            } else {
                fit.large_separation_max = fit.large_separation_max.max(ratio);
            }
        }
        fit
    }
}

/// Sampling setup for [`Parametrization::holder_empirical`].
#[derive(Debug, Clone, PartialEq)]
pub struct HolderConfig {
    pub pairs: usize,
    pub seed: u64,
    pub tol: f64,
    /// Separations are drawn log-uniformly from `[10^min, 10^max]`.
    pub min_log_gap: f64,
    pub max_log_gap: f64,
    pub eps: f64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        Self {
            pairs: 10_000,
            seed: 0,
            tol: 1e-10,
            min_log_gap: -7.0,
            max_log_gap: 0.0,
            eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub pairs: usize,
    /// Slope of `log ‖ψ(x) - ψ(y)‖` against `log |x - y|` over small separations.
    pub euclid_slope: f64,
    pub euclid_pairs: usize,
    /// Largest `‖ψ(x) - ψ(y)‖_ω / |x - y|^{1/α}` with `x, y` in `F_i` units.
    pub omega_max_ratio: f64,
    pub omega_ratios: Vec<f64>,
    pub envelope: EnvelopeFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub eps: f64,
    pub exponent: f64,
    pub constant: f64,
    /// Largest ratio among pairs within three decades of the smallest gap.
    pub small_separation_max: f64,
    pub large_separation_max: f64,
    pub pairs: usize,
    pub violations: usize,
}

/// `β̂ · D̂ · q^{1/d} · max((1/ĥ)^{d/α}, (1/ĥ)^{1/α})`.
pub fn holder_constant_bound(
    g: &OrderedGifs,
    pd: &PerronData,
    beta_hat: f64,
    diameter_hat: f64,
    h_min: f64,
) -> f64 {
    let d = g.dimension() as f64;
    let q = g.det_q();
    let inv_h = 1.0 / h_min;
    let factor = inv_h.powf(d / pd.alpha).max(inv_h.powf(1.0 / pd.alpha));
    beta_hat * diameter_hat * q.powf(1.0 / d) * factor
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Fraction of the cells of a `cells × cells` grid over `[lo, hi]^2` hit by
/// the given points, together with the list of missed cells.
pub fn grid_coverage(
    points: &[Point],
    lo: f64,
    hi: f64,
    cells: usize,
) -> (usize, Vec<(usize, usize)>) {
    let mut hit = vec![false; cells * cells];
    let width = (hi - lo) / cells as f64;
    for p in points {
        let cx = ((p[0] - lo) / width).floor();
        let cy = ((p[1] - lo) / width).floor();
        let clamp = |c: f64| (c.max(0.0) as usize).min(cells - 1);
        if p[0] >= lo && p[0] <= hi && p[1] >= lo && p[1] <= hi {
            hit[clamp(cy) * cells + clamp(cx)] = true;
        }
    }
    let missed: Vec<(usize, usize)> = (0..cells * cells)
        .filter(|&k| !hit[k])
        .map(|k| (k % cells, k / cells))
        .collect();
    (cells * cells - missed.len(), missed)
}

/// Applies `ψ_union` on the uniform grid `k / (n - 1)`.
pub fn sample_union(p: &Parametrization, n: usize, tol: f64) -> Result<Vec<Point>, ParamError> {
    (0..n)
        .into_par_iter()
        .map(|k| p.psi_union(k as f64 / (n - 1).max(1) as f64, tol))
        .collect()
}
