//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use lgifs::gifs::Point;
use nalgebra::{DMatrix, DVector};

/// Solves `(O - λI) v = 0` with `v_0 = 1` by a dense f64 solve, where `O`
/// is the outgoing-count matrix (transpose of the associated matrix `m`).
/// Normalised to max 1.
pub fn measure_oracle(m: &[Vec<u64>], lambda: f64) -> Vec<f64> {
    let n = m.len();
    if n == 1 {
        return vec![1.0];
    }
    let a = DMatrix::from_fn(n - 1, n - 1, |r, c| {
        let (i, j) = (r + 1, c + 1);
        m[j][i] as f64 - if i == j { lambda } else { 0.0 }
    });
    let b = DVector::from_fn(n - 1, |r, _| -(m[0][r + 1] as f64));
    let x = a.lu().solve(&b).expect("regular reduced system");
    let mut v = vec![1.0];
    v.extend(x.iter());
    let max = v.iter().copied().fold(0.0, f64::max);
    v.iter().map(|x| x / max).collect()
}

pub fn pt(xs: &[f64]) -> Point {
    Point::from_vec(xs.to_vec())
}

pub fn close(a: &Point, b: &Point, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Spec text of the McMullen system with the digits exactly as printed
/// in the source (`d_5 = e_1 + e_2`).
pub fn mcmullen_printed() -> String {
    lgifs::corpus::source("mcmullen")
        .unwrap()
        .replace("digit = [2.0, 1.0]", "digit = [1.0, 1.0]")
}
