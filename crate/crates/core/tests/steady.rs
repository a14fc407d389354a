use kpp_core::optimize::bisect;
use kpp_core::steady::*;
use kpp_core::zoo::{toads_local, ToadsParams};
use kpp_core::{Model, SquareMatrix};

#[test]
fn symmetric_toads_uniform_state() {
    // θ_max - θ_min = N - 1 gives θ_N = 1, so C = 1_N and v* = (r/N) 1
    let p = ToadsParams {
        n: 8,
        theta_min: 1.0,
        theta_max: 8.0,
        r: 1.3,
        alpha: 0.7,
    };
    let m = toads_local(&p).unwrap();
    let s = find_constant_steady(&m, 1e-13).unwrap();
    for v in &s.v {
        assert!((v - p.r / p.n as f64).abs() < 1e-12);
    }
    assert!(s.residual < 1e-10);
}

// v2 on the first nullcline as a function of v1, then bisection on the second equation
fn nullcline_oracle(l: &SquareMatrix, c: &SquareMatrix) -> (f64, f64) {
    let v2 = |v1: f64| (c[(0, 0)] * v1 * v1 - l[(0, 0)] * v1) / (l[(0, 1)] - c[(0, 1)] * v1);
    let g = |v1: f64| {
        let w = v2(v1);
        Ok(l[(1, 0)] * v1 + l[(1, 1)] * w - (c[(1, 0)] * v1 + c[(1, 1)] * w) * w)
    };
    // v2 > 0 exactly between the numerator root and the pole; it runs from 0 to infinity there
    let (a, b) = (l[(0, 0)] / c[(0, 0)], l[(0, 1)] / c[(0, 1)]);
    let (lo, hi) = (a.min(b) + 1e-12, a.max(b) - 1e-12);
    let v1 = bisect(g, lo, hi, 1e-15).unwrap();
    (v1, v2(v1))
}

#[test]
fn asymmetric_two_component_matches_nullcline_oracle() {
    let l = SquareMatrix::from_rows(&[vec![0.8, 0.3], vec![0.5, 0.1]]).unwrap();
    let c = SquareMatrix::from_rows(&[vec![1.0, 0.4], vec![0.7, 1.5]]).unwrap();
    let m = Model::lotka_volterra(vec![1.0, 2.0], l.clone(), c.clone()).unwrap();
    let s = find_constant_steady(&m, 1e-13).unwrap();
    assert!(s.residual < 1e-12);
    let (a, b) = nullcline_oracle(&l, &c);
    assert!(
        (s.v[0] - a).abs() < 1e-10 && (s.v[1] - b).abs() < 1e-10,
        "{:?} vs ({a}, {b})",
        s.v
    );
    assert!(s
        .v
        .iter()
        .zip(&s.search_set.upper_corner)
        .all(|(v, u)| *v < *u - 1.0 + 1e-12));
}

#[test]
fn scaling_leaves_state_unchanged() {
    let l = SquareMatrix::from_rows(&[vec![0.8, 0.3, 0.0], vec![0.5, 0.1, 0.2], vec![0.1, 0.2, 0.4]]).unwrap();
    let c = SquareMatrix::from_rows(&[vec![1.0, 0.4, 0.3], vec![0.7, 1.5, 0.2], vec![0.3, 0.3, 0.9]]).unwrap();
    let a = find_constant_steady(
        &Model::lotka_volterra(vec![1.0; 3], l.clone(), c.clone()).unwrap(),
        1e-13,
    )
    .unwrap();
    let b = find_constant_steady(
        &Model::lotka_volterra(vec![1.0; 3], l.scaled(3.0), c.scaled(3.0)).unwrap(),
        1e-13,
    )
    .unwrap();
    for (x, y) in a.v.iter().zip(&b.v) {
        assert!((x - y).abs() < 1e-11);
    }
}

#[test]
fn regimes_from_lambda_sign() {
    let base = SquareMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let c = SquareMatrix::from_fn(2, |_, _| 1.0);
    let r = |s: f64| {
        nonexistence_certificate(&Model::lotka_volterra(vec![1.0; 2], base.shifted(s), c.clone()).unwrap()).unwrap()
    };
    assert_eq!(r(-0.3).regime, Regime::Subcritical);
    assert!(r(-0.3).nonexistence());
    assert_eq!(r(0.0).regime, Regime::CriticalSpanCondition);
    assert_eq!(r(0.5).regime, Regime::Existence);
}
