mod common;

use lgifs::pseudonorm::{BallShape, PseudoNormError};
use lgifs::{corpus, BoundaryData, PseudoNorm};
use nalgebra::DMatrix;

use common::pt;

/// Direct scan: Σ 6^{-n/2} over n ∈ [-64, 64] with A^n x ∈ A(B) \ B, B the
/// open unit disc, A = diag(3, 2). Powers are formed coordinate-wise.
fn scan_oracle(x: [f64; 2]) -> f64 {
    let inside = |n: i32| (3f64.powi(n) * x[0]).hypot(2f64.powi(n) * x[1]) < 1.0;
    (-64..=64)
        .filter(|&n| !inside(n) && inside(n - 1))
        .map(|n| 6f64.powf(-(n as f64) / 2.0))
        .sum()
}

fn diag32() -> PseudoNorm {
    PseudoNorm::from_matrix(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0])).unwrap()
}

#[test]
fn matches_direct_scan() {
    let n = diag32();
    assert_eq!(*n.shape(), BallShape::Euclidean);
    assert_eq!(n.eval(&pt(&[1.0, 0.0])).unwrap(), 1.0);
    assert_eq!(scan_oracle([1.0, 0.0]), 1.0);
    for x in [
        [0.3, -0.2],
        [5.0, 1e-3],
        [-1e-4, 2e-5],
        [0.7, 0.7],
        [123.0, -45.0],
        [0.0, 0.9],
    ] {
        let got = n.eval(&pt(&x)).unwrap();
        let want = scan_oracle(x);
        assert!((got - want).abs() <= 1e-12 * want, "{x:?}: {got} vs {want}");
    }
}

#[test]
fn zero_and_scaling() {
    let n = diag32();
    assert_eq!(n.eval(&pt(&[0.0, 0.0])).unwrap(), 0.0);
    let x = pt(&[0.37, -0.81]);
    let ax = n.matrix() * &x;
    assert!((n.eval(&ax).unwrap() - 6f64.sqrt() * n.eval(&x).unwrap()).abs() < 1e-12);
    assert!(matches!(
        n.eval(&pt(&[1.0])),
        Err(PseudoNormError::DimensionMismatch { .. })
    ));
}

#[test]
fn quasi_triangle_regression() {
    let n = diag32();
    let beta = n.quasi_triangle_beta(100_000, 42);
    assert!(beta >= 1.0);
    assert_eq!(beta, 2.4494897427831783);
}

#[test]
fn omega_diameter_regression_and_nesting() {
    let g = corpus::load("square");
    let n = PseudoNorm::new(&g).unwrap();
    let bd = BoundaryData::compute(&g).unwrap();
    let beta = 2.4494897427831783;
    let d6 = n.omega_diameter(&g, &bd, 0, 6, beta).unwrap();
    assert_eq!((d6.lower, d6.upper), (1.0, 1.8164965809277263));
    let mut prev = n.omega_diameter(&g, &bd, 0, 1, beta).unwrap();
    for k in 2..=6 {
        let cur = n.omega_diameter(&g, &bd, 0, k, beta).unwrap();
        assert!(prev.lower <= cur.lower + 1e-9);
        assert!(cur.lower <= cur.upper + 1e-9);
        assert!(cur.upper <= prev.upper + 1e-9);
        prev = cur;
    }
}

#[test]
fn single_point_set_has_vanishing_diameter() {
    let text = "dimension = 2\nmatrix = [3, 0, 0, 2]\nvertices = 1\n[[edges]]\nfrom = 1\nto = 1\ndigit = [0, 0]\n";
    let g = lgifs::parse_spec_str(text).unwrap();
    let n = PseudoNorm::new(&g).unwrap();
    let bd = BoundaryData::compute(&g).unwrap();
    let d = n.omega_diameter(&g, &bd, 0, 8, 1.0).unwrap();
    assert_eq!(d.lower, 0.0);
    assert!(d.upper <= 6f64.powf(-4.0) * 10.0);
}

#[test]
fn comparability() {
    let n = diag32();
    let r = n.comparability_check(0.1, 10_000, 7).unwrap();
    assert!((r.exponent_slow - 6f64.ln() / (2.0 * 3.1f64.ln())).abs() < 1e-15);
    assert!((r.exponent_fast - 6f64.ln() / (2.0 * 1.9f64.ln())).abs() < 1e-15);
    assert_eq!(r.violations, 0);
    assert!(r.constant.is_finite());
    // both branches agree on the unit circle
    for x in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
        let x = pt(&x);
        assert!(r.holds(1.0, n.eval(&x).unwrap()));
    }
    assert!(matches!(
        n.comparability_check(1.5, 10, 0),
        Err(PseudoNormError::EpsOutOfRange { .. })
    ));
}

#[test]
fn every_example_has_a_nested_ball() {
    for name in corpus::EXAMPLES {
        let g = corpus::load(name);
        let n = PseudoNorm::new(&g).unwrap();
        assert_eq!(*n.shape(), BallShape::Euclidean, "{name}");
    }
}
