//! Perron eigendata of the graph, the pseudo-norm dimension and the Markov
//! cylinder weights.
//!
//! The measure vector solves `v_i = λ^{-1} Σ_{e: i -> j} v_j`, i.e. it is the
//! Perron vector of the outgoing-count matrix (the transpose of the
//! associated matrix). This is the balance the interval tiling of the
//! recording system consumes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::gifs::{is_primitive, OrderedGifs, Walk};

const RESIDUAL_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100_000;
const INTEGER_SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("associated matrix is not primitive")]
    NotPrimitive,
    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    /// Spectral radius of the associated matrix.
    pub lambda: f64,
    /// Positive measure vector, normalised so its largest entry is 1.
    pub measure: Vec<f64>,
    /// `α = d ln λ / ln q`.
    pub alpha: f64,
    /// Markov weight `p_e` for each edge id.
    pub weights: Vec<f64>,
    /// Whether `λ` and `v` were confirmed by exact rational arithmetic.
    pub exact: bool,
}

impl PerronData {
    pub fn compute(g: &OrderedGifs) -> Result<Self, SpectralError> {
        let m = g.associated_matrix();
        let (lambda, measure, exact) = perron_detailed(&m)?;
        let alpha = dimension(g, lambda);
        let weights = markov_weights(g, lambda, &measure);
        Ok(Self {
            lambda,
            measure,
            alpha,
            weights,
            exact,
        })
    }

    /// `P_i([w]) = v_i p_{w_1} ... p_{w_n}`.
    pub fn cylinder_measure(&self, vertex: usize, w: &Walk) -> f64 {
        debug_assert_eq!(w.start, vertex);
        w.edges
            .iter()
            .fold(self.measure[vertex], |acc, &e| acc * self.weights[e])
    }

    pub fn min_measure(&self) -> f64 {
        self.measure.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Perron root and measure vector of the associated matrix `M`.
pub fn perron(m: &[Vec<u64>]) -> Result<(f64, Vec<f64>), SpectralError> {
    perron_detailed(m).map(|(l, v, _)| (l, v))
}

fn perron_detailed(m: &[Vec<u64>]) -> Result<(f64, Vec<f64>, bool), SpectralError> {
    if !is_primitive(m) {
        return Err(SpectralError::NotPrimitive);
    }
    let n = m.len();
    // outgoing[i][j] = m[j][i]
    let outgoing: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[j][i] as f64).collect())
        .collect();

    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let w = mat_vec(&outgoing, &v);
        let top = w.iter().copied().fold(0.0, f64::max);
        let next: Vec<f64> = w.iter().map(|x| x / top).collect();
        // Rayleigh quotient of the normalised iterate
        let ow = mat_vec(&outgoing, &next);
        let num: f64 = ow.iter().zip(&next).map(|(a, b)| a * b).sum();
        let den: f64 = next.iter().map(|b| b * b).sum();
        lambda = num / den;
        let residual = ow
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        v = next;
        if residual <= RESIDUAL_TOL * lambda {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpectralError::NoConvergence {
            iterations: MAX_ITERATIONS,
        });
    }

    let rounded = lambda.round();
    if (lambda - rounded).abs() <= INTEGER_SNAP && rounded >= 1.0 {
        if let Some(exact) = exact_kernel_vector(m, rounded as i64) {
            let close = exact.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-6);
            if close {
                return Ok((rounded, exact, true));
            }
        }
    }
    Ok((lambda, v, false))
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Exact positive kernel vector of `O - L I` (O the outgoing-count matrix),
/// normalised to max 1. `None` unless the kernel is one-dimensional and
/// spanned by a strictly positive vector.
fn exact_kernel_vector(m: &[Vec<u64>], eigenvalue: i64) -> Option<Vec<f64>> {
    let n = m.len();
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut x = m[j][i] as i64;
                    if i == j {
                        x -= eigenvalue;
                    }
                    BigRational::from_integer(BigInt::from(x))
                })
                .collect()
        })
        .collect();

    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..n).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let pivot = rows[r].clone();
                for (x, p) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    if pivots.len() != n - 1 {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut kernel = vec![BigRational::zero(); n];
    kernel[free] = BigRational::one();
    for (row, &c) in pivots.iter().enumerate() {
        kernel[c] = -rows[row][free].clone();
    }
    if kernel.iter().any(|x| !x.is_positive()) {
        return None;
    }
    let max = kernel.iter().max()?.clone();
    kernel
        .iter()
        .map(|x| (x / &max).to_f64())
        .collect::<Option<Vec<f64>>>()
}

/// `α = d · ln λ / ln q`.
pub fn dimension(g: &OrderedGifs, lambda: f64) -> f64 {
    g.dimension() as f64 * lambda.ln() / g.det_q().ln()
}

/// `p_e = (v_{t(e)} / v_{s(e)}) λ^{-1}` for every edge.
pub fn markov_weights(g: &OrderedGifs, lambda: f64, measure: &[f64]) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|e| measure[e.target] / measure[e.source] / lambda)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn not_primitive() {
        assert_eq!(
            perron(&[vec![1, 0], vec![0, 1]]).unwrap_err(),
            SpectralError::NotPrimitive
        );
    }

    #[test]
    fn single_vertex() {
        let (l, v) = perron(&[vec![5]]).unwrap();
        assert_eq!(l, 5.0);
        assert_eq!(v, vec![1.0]);
    }

    #[test]
    fn irrational_root_stays_iterative() {
        // golden mean shift: λ = (1 + √5) / 2
        let (l, v) = perron(&[vec![1, 1], vec![1, 0]]).unwrap();
        assert!((l - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
        // v_0 = λ^{-1}(v_0 + v_1), v_1 = λ^{-1} v_0
        assert!((v[0] - (v[0] + v[1]) / l).abs() < 1e-10);
        assert!((v[1] - v[0] / l).abs() < 1e-10);
    }

    #[test]
    fn exact_kernel_of_square_outgoing_matrix() {
        let m = vec![vec![4, 1, 1], vec![1, 3, 2], vec![1, 1, 4]];
        let v = exact_kernel_vector(&m, 6).unwrap();
        assert_eq!(v, vec![0.8, 0.6, 1.0]);
        assert!(exact_kernel_vector(&m, 5).is_none());
    }
}
