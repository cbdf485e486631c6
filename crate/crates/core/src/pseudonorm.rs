//! The A-homogeneous pseudo-norm `‖x‖_ω = Σ_n q^{-n/d} h(A^n x)`.
//!
//! `h` is the indicator of the annulus `V = A(B) \ B` for a reference ball
//! `B = {x : xᵀ P x < 1}`. `P` is the identity whenever the Euclidean unit
//! ball is nested inside its image under `A`; otherwise an adapted
//! ellipsoid is built from the pushforwards `A^{-k}`.
//!
//! With a nested ball the sequence `‖A^n x‖_P` is nondecreasing, so exactly
//! one term of the series fires and every sublevel set of `‖·‖_ω` is an
//! ellipsoid. The diameter routine relies on that.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::addressing::{for_each_anchor, BoundaryData};
use crate::gifs::{operator_norm, OrderedGifs, Point};

pub const DEFAULT_WINDOW: i32 = 64;

const MAX_PRESCALE_STEPS: usize = 100_000;
const MAX_ADAPTED_TERMS: usize = 1_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PseudoNormError {
    #[error("indicator still active at the edge of the ±{window} window")]
    WindowExhausted { window: i32 },
    #[error("eps = {eps} outside (0, λ_min - 1) = (0, {limit})")]
    EpsOutOfRange { eps: f64, limit: f64 },
    #[error("could not build a reference ball nested in its image")]
    NoNestedBall,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BallShape {
    Euclidean,
    /// `P = Σ_{k=0}^{terms-1} (A^{-k})ᵀ A^{-k}`.
    Adapted {
        terms: usize,
    },
}

#[derive(Debug, Clone)]
pub struct PseudoNorm {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    q: f64,
    dim: usize,
    window: i32,
    shape: BallShape,
    /// Gram matrix of the reference ball.
    gram: DMatrix<f64>,
    /// `Lᵀ` for `P = L Lᵀ`; maps P-norms to Euclidean norms.
    gram_factor: DMatrix<f64>,
}

impl PseudoNorm {
    pub fn new(g: &OrderedGifs) -> Result<Self, PseudoNormError> {
        Self::from_matrix(g.matrix().clone())
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, PseudoNormError> {
        let dim = matrix.nrows();
        let q = matrix.determinant().abs();
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(PseudoNormError::NoNestedBall)?;
        let (shape, gram) = if operator_norm(&inverse) <= 1.0 {
            (BallShape::Euclidean, DMatrix::identity(dim, dim))
        } else {
            adapted_gram(&inverse)?
        };
        let gram_factor = gram
            .clone()
            .cholesky()
            .ok_or(PseudoNormError::NoNestedBall)?
            .l()
            .transpose();
        Ok(Self {
            matrix,
            inverse,
            q,
            dim,
            window: DEFAULT_WINDOW,
            shape,
            gram,
            gram_factor,
        })
    }

    pub fn with_window(mut self, window: i32) -> Self {
        self.window = window;
        self
    }

    pub fn shape(&self) -> &BallShape {
        &self.shape
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `q^{1/d}`: the factor by which `A` scales the pseudo-norm.
    pub fn scale(&self) -> f64 {
        self.q.powf(1.0 / self.dim as f64)
    }

    fn ball_norm(&self, x: &Point) -> f64 {
        (&self.gram_factor * x).norm()
    }

    /// True when `x` lies in the reference ball `B`.
    pub fn in_ball(&self, x: &Point) -> bool {
        self.ball_norm(x) < 1.0
    }

    /// `‖x‖_ω`.
    pub fn eval(&self, x: &Point) -> Result<f64, PseudoNormError> {
        if x.len() != self.dim {
            return Err(PseudoNormError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().all(|&c| c == 0.0) {
            return Ok(0.0);
        }
        // centre the window on the index where A^m x leaves B
        let mut y = x.clone();
        let mut m: i64 = 0;
        let mut steps = 0;
        while self.ball_norm(&y) < 1.0 && steps < MAX_PRESCALE_STEPS {
            y = &self.matrix * &y;
            m += 1;
            steps += 1;
        }
        while self.ball_norm(&(&self.inverse * &y)) >= 1.0 && steps < MAX_PRESCALE_STEPS {
            y = &self.inverse * &y;
            m -= 1;
            steps += 1;
        }
        if steps >= MAX_PRESCALE_STEPS {
            return Err(PseudoNormError::WindowExhausted {
                window: self.window,
            });
        }

        let w = self.window;
        // norms[j + w + 1] = ‖A^{j} y‖_P for j in -w-1..=w
        let len = (2 * w + 2) as usize;
        let mut norms = vec![0.0; len];
        let centre = (w + 1) as usize;
        let mut z = y.clone();
        norms[centre] = self.ball_norm(&z);
        for idx in centre + 1..len {
            if norms[idx - 1] > 1e150 {
                norms[idx] = f64::INFINITY;
                continue;
            }
            z = &self.matrix * &z;
            norms[idx] = self.ball_norm(&z);
        }
        let mut z = y;
        for idx in (0..centre).rev() {
            if norms[idx + 1] < 1e-150 {
                norms[idx] = 0.0;
                continue;
            }
            z = &self.inverse * &z;
            norms[idx] = self.ball_norm(&z);
        }

        let exponent = 1.0 / self.dim as f64;
        let mut total = 0.0;
        for j in -w..=w {
            let idx = (j + w + 1) as usize;
            if norms[idx - 1] < 1.0 && norms[idx] >= 1.0 {
                if j == -w || j == w {
                    return Err(PseudoNormError::WindowExhausted { window: w });
                }
                let n = m + j as i64;
                total += self.q.powf(-(n as f64) * exponent);
            }
        }
        Ok(total)
    }

    /// `‖x - y‖_ω`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64, PseudoNormError> {
        self.eval(&(x - y))
    }

    /// Upper bound on `‖z‖_ω` over the Euclidean ball `‖z‖ <= r`.
    ///
    /// `‖A^n z‖_P <= ‖A^n‖_P ‖z‖_P`, so no index below the first `n` with
    /// `‖A^n‖_P r_P >= 1` can fire.
    pub fn ball_bound(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let sqrt_top = self
            .gram
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .sqrt();
        let r_p = r * sqrt_top;
        let factor_inv = self
            .gram_factor
            .clone()
            .try_inverse()
            .expect("cholesky factor is invertible");
        let p_norm = |m: &DMatrix<f64>| operator_norm(&(&self.gram_factor * m * &factor_inv));
        // walk n downwards from a power where the bound certainly exceeds 1
        let mut n: i64 = 0;
        let mut power = DMatrix::<f64>::identity(self.dim, self.dim);
        while p_norm(&power) * r_p < 1.0 {
            power = &self.matrix * &power;
            n += 1;
        }
        loop {
            let prev = &self.inverse * &power;
            if p_norm(&prev) * r_p < 1.0 {
                break;
            }
            power = prev;
            n -= 1;
        }
        self.q.powf(-(n as f64) / self.dim as f64)
    }

    /// Empirical quasi-triangle constant: max of `‖x+y‖_ω / max(‖x‖_ω, ‖y‖_ω)`.
    pub fn quasi_triangle_beta(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // y = 0 contributes ratio 1
        let mut beta = 1.0f64;
        for k in 0..samples {
            let x = random_vector(&mut rng, self.dim, -2.0, 2.0);
            let y = match k % 3 {
                0 => random_vector(&mut rng, self.dim, -2.0, 2.0),
                1 => &x * rng.random_range(-2.0..2.0),
                _ => {
                    let c = rng.random_range(0.25..2.0);
                    &x * c + random_vector(&mut rng, self.dim, -4.0, -1.0) * x.norm()
                }
            };
            let (Ok(nx), Ok(ny), Ok(nxy)) = (self.eval(&x), self.eval(&y), self.eval(&(&x + &y)))
            else {
                continue;
            };
            let den = nx.max(ny);
            if den > 0.0 {
                beta = beta.max(nxy / den);
            }
        }
        beta
    }

    /// Fits the constant `C` of the two-regime comparison with the
    /// Euclidean norm over log-uniform radii.
    pub fn comparability_check(
        &self,
        eps: f64,
        samples: usize,
        seed: u64,
    ) -> Result<ComparabilityReport, PseudoNormError> {
        let moduli: Vec<f64> = self
            .matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect();
        let lambda_max = moduli.iter().copied().fold(0.0, f64::max);
        let lambda_min = moduli.iter().copied().fold(f64::INFINITY, f64::min);
        let limit = lambda_min - 1.0;
        if !(eps > 0.0 && eps < limit) {
            return Err(PseudoNormError::EpsOutOfRange { eps, limit });
        }
        let d = self.dim as f64;
        let slow = self.q.ln() / (d * (lambda_max + eps).ln());
        let fast = self.q.ln() / (d * (lambda_min - eps).ln());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = ComparabilityReport {
            eps,
            exponent_slow: slow,
            exponent_fast: fast,
            constant: 1.0,
            samples: 0,
            violations: 0,
        };
        for k in 0..samples {
            let mut x = random_vector(&mut rng, self.dim, -6.0, 6.0);
            if k % 100 == 0 {
                // exercise the ‖x‖ = 1 branch boundary
                let n = x.norm();
                x /= n;
            }
            report.record(&x, self.eval(&x).ok());
        }
        Ok(report)
    }

    /// Lower and upper estimates of `diam_ω E_i` from the depth-`depth`
    /// cylinder anchors.
    pub fn omega_diameter(
        &self,
        g: &OrderedGifs,
        bd: &BoundaryData,
        vertex: usize,
        depth: usize,
        beta_hat: f64,
    ) -> Result<OmegaDiameter, PseudoNormError> {
        let radius = bd
            .radii
            .iter()
            .map(|&r| self.ball_bound(r))
            .fold(0.0, f64::max);
        let mut upper = f64::INFINITY;
        let mut lower = 0.0;
        for level in 1..=depth.max(1) {
            let mut anchors = Vec::new();
            for_each_anchor(g, &bd.heads, vertex, level, |_, p| anchors.push(p));
            lower = self.max_pairwise(&anchors)?;
            let cylinder = self.q.powf(-(level as f64) / self.dim as f64) * radius;
            upper = upper.min(beta_hat * (lower + 2.0 * cylinder));
        }
        Ok(OmegaDiameter {
            depth,
            lower,
            upper,
        })
    }

    /// Largest `‖a - b‖_ω` over pairs of points.
    pub fn max_pairwise(&self, points: &[Point]) -> Result<f64, PseudoNormError> {
        let candidates = if self.dim <= 2 {
            convex_hull(points)
        } else {
            points.to_vec()
        };
        let mut best = 0.0f64;
        for (i, a) in candidates.iter().enumerate() {
            for b in &candidates[i + 1..] {
                best = best.max(self.distance(a, b)?);
            }
        }
        Ok(best)
    }
}

fn adapted_gram(inverse: &DMatrix<f64>) -> Result<(BallShape, DMatrix<f64>), PseudoNormError> {
    let dim = inverse.nrows();
    let mut power = DMatrix::<f64>::identity(dim, dim);
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for terms in 1..=MAX_ADAPTED_TERMS {
        gram += power.transpose() * &power;
        power = &power * inverse;
        if operator_norm(&power) < 1.0 {
            return Ok((BallShape::Adapted { terms }, gram));
        }
    }
    Err(PseudoNormError::NoNestedBall)
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, log_lo: f64, log_hi: f64) -> Point {
    let dir = loop {
        let v = DVector::from_fn(dim, |_, _| gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            break v / n;
        }
    };
    dir * 10f64.powf(rng.random_range(log_lo..log_hi))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaDiameter {
    pub depth: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparabilityReport {
    pub eps: f64,
    /// `ln q / (d ln(λ_max + ε))`.
    pub exponent_slow: f64,
    /// `ln q / (d ln(λ_min - ε))`.
    pub exponent_fast: f64,
    /// Smallest constant making every sampled inequality hold.
    pub constant: f64,
    pub samples: usize,
    /// Samples for which no finite constant works.
    pub violations: usize,
}

impl ComparabilityReport {
    fn record(&mut self, x: &Point, omega: Option<f64>) {
        self.samples += 1;
        let r = x.norm();
        let Some(w) = omega.filter(|w| w.is_finite() && *w > 0.0) else {
            self.violations += 1;
            return;
        };
        let (lo, hi) = if r > 1.0 {
            (r.powf(self.exponent_slow), r.powf(self.exponent_fast))
        } else {
            (r.powf(self.exponent_fast), r.powf(self.exponent_slow))
        };
        let needed = (lo / w).max(w / hi);
        if needed.is_finite() {
            self.constant = self.constant.max(needed);
        } else {
            self.violations += 1;
        }
    }

    /// Whether `C^{-1} lo <= ‖x‖_ω <= C hi` holds with the fitted constant.
    pub fn holds(&self, r: f64, omega: f64) -> bool {
        let (lo, hi) = if r > 1.0 {
            (r.powf(self.exponent_slow), r.powf(self.exponent_fast))
        } else {
            (r.powf(self.exponent_fast), r.powf(self.exponent_slow))
        };
        let c = self.constant * (1.0 + 1e-12);
        lo / c <= omega && omega <= c * hi
    }
}

/// Extreme points of a set of points in dimension 1 or 2.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    if points.len() <= 3 {
        return points.to_vec();
    }
    if points[0].len() == 1 {
        let lo = points.iter().min_by(|a, b| a[0].total_cmp(&b[0])).unwrap();
        let hi = points.iter().max_by(|a, b| a[0].total_cmp(&b[0])).unwrap();
        return vec![lo.clone(), hi.clone()];
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts
            .iter()
            .map(|&(x, y)| DVector::from_vec(vec![x, y]))
            .collect();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower
        .into_iter()
        .chain(upper)
        .map(|(x, y)| DVector::from_vec(vec![x, y]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag32() -> PseudoNorm {
        PseudoNorm::from_matrix(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0])).unwrap()
    }

    #[test]
    fn zero_has_zero_norm() {
        assert_eq!(diag32().eval(&DVector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn unit_vectors() {
        let ev = diag32();
        // A^0 e_1 = e_1 has norm 1 (not in the open ball), A^{-1} e_1 does
        assert_eq!(ev.eval(&DVector::from_vec(vec![1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(ev.eval(&DVector::from_vec(vec![0.0, 1.0])).unwrap(), 1.0);
        // 0.5 e_1: first n with 3^n/2 >= 1 is n = 1
        let v = ev.eval(&DVector::from_vec(vec![0.5, 0.0])).unwrap();
        assert!((v - 6f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn euclidean_ball_for_diagonal_expanding() {
        assert_eq!(diag32().shape(), &BallShape::Euclidean);
    }

    #[test]
    fn shear_needs_adapted_ball() {
        // eigenvalues 1.5, 1.5 but a large shear: ‖A^{-1}‖ > 1
        let a = DMatrix::from_row_slice(2, 2, &[1.5, 10.0, 0.0, 1.5]);
        let ev = PseudoNorm::from_matrix(a.clone()).unwrap();
        assert!(matches!(ev.shape(), BallShape::Adapted { .. }));
        // nesting: boundary of B mapped by A^{-1} stays inside B
        let inv = a.clone().try_inverse().unwrap();
        let l = ev.gram().clone().cholesky().unwrap().l();
        let l_inv_t = l.transpose().try_inverse().unwrap();
        for k in 0..360 {
            let t = (k as f64).to_radians();
            let on_sphere = &l_inv_t * DVector::from_vec(vec![t.cos(), t.sin()]);
            let image = &inv * on_sphere;
            assert!((image.transpose() * ev.gram() * &image)[(0, 0)] < 1.0);
        }
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let ratio = ev.eval(&(&a * &x)).unwrap() / ev.eval(&x).unwrap();
        assert!((ratio - 1.5).abs() < 1e-12);
    }

    #[test]
    fn eps_out_of_range() {
        assert!(matches!(
            diag32().comparability_check(1.5, 10, 1),
            Err(PseudoNormError::EpsOutOfRange { .. })
        ));
        assert!(diag32().comparability_check(0.0, 10, 1).is_err());
    }

    #[test]
    fn comparability_exponents() {
        let r = diag32().comparability_check(0.1, 10, 7).unwrap();
        assert!((r.exponent_slow - 6f64.ln() / (2.0 * 3.1f64.ln())).abs() < 1e-15);
        assert!((r.exponent_fast - 6f64.ln() / (2.0 * 1.9f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn hull_keeps_extremes() {
        let pts: Vec<Point> = [
            (0.0, 0.0),
            (1.0, 0.0),
            (0.5, 0.2),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.5, 0.5),
        ]
        .iter()
        .map(|&(x, y)| DVector::from_vec(vec![x, y]))
        .collect();
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
    }

    #[test]
    fn ball_bound_dominates_samples() {
        let ev = diag32();
        let bound = ev.ball_bound(0.37);
        for k in 0..720 {
            let t = (k as f64 / 2.0).to_radians();
            let z = DVector::from_vec(vec![t.cos(), t.sin()]) * 0.37;
            assert!(ev.eval(&z).unwrap() <= bound);
        }
    }
}
