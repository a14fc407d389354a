use approx::assert_abs_diff_eq;
use kpp_core::dispersion::minimal_speed;
use kpp_core::spectral::*;
use kpp_core::zoo::{laplacian_matrix, random_essentially_nonnegative};
use kpp_core::{Model, SquareMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dense(a: &SquareMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n(), a.n(), a.as_slice())
}

// Largest real part over the full spectrum.
fn oracle_lambda(a: &SquareMatrix) -> f64 {
    dense(a)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn matches_dense_eigensolver_on_random_matrices() {
    for seed in 0..100 {
        let a = random_essentially_nonnegative(5, seed);
        let p = perron_frobenius(&a, 1e-12).unwrap();
        let expected = oracle_lambda(&a);
        assert!(
            (p.value - expected).abs() < 1e-10,
            "seed {seed}: {} vs {expected}",
            p.value
        );
        assert!(p.vector.iter().all(|v| *v > 0.0));
        let r: f64 = a
            .matvec(&p.vector)
            .iter()
            .zip(&p.vector)
            .map(|(x, v)| (x - p.value * v).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(r <= 1e-12 * a.norm_inf().max(1.0), "seed {seed}: residual {r}");
    }
}

#[test]
fn laplacian_family_closed_form() {
    for n in [2, 3, 7, 12] {
        let a = laplacian_matrix(n).unwrap().scaled(0.7 / 4.0).shifted(1.3);
        let p = perron_frobenius(&a, 1e-12).unwrap();
        assert_abs_diff_eq!(p.value, 1.3, epsilon = 1e-12);
        for v in &p.vector {
            assert_abs_diff_eq!(*v, 1.0 / (n as f64).sqrt(), epsilon = 1e-10);
        }
    }
}

#[test]
fn invariance_suite_on_seeded_matrices() {
    for seed in 0..100 {
        let n = 2 + (seed as usize % 5);
        let a = random_essentially_nonnegative(n, 1000 + seed);
        let p = perron_frobenius(&a, 1e-12).unwrap();
        let s = (seed as f64 * 0.37).sin() * 3.0;
        let shifted = perron_frobenius(&a.shifted(s), 1e-12).unwrap();
        assert!((shifted.value - p.value - s).abs() < 1e-10);
        for (x, y) in shifted.vector.iter().zip(&p.vector) {
            assert!((x - y).abs() < 1e-10);
        }
        let t = perron_frobenius(&a.transpose(), 1e-12).unwrap();
        assert!((t.value - p.value).abs() < 1e-10);
        let bigger = SquareMatrix::from_fn(n, |i, j| {
            a[(i, j)]
                + if (i + j + seed as usize).is_multiple_of(3) {
                    0.2
                } else {
                    0.0
                }
        });
        assert!(perron_frobenius(&bigger, 1e-12).unwrap().value >= p.value - 1e-12);
        let perm: Vec<usize> = (0..n).map(|i| (i + 1 + seed as usize) % n).collect();
        let pp = perron_frobenius(&a.permuted(&perm), 1e-12).unwrap();
        assert!((pp.value - p.value).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn pf_residual_within_tolerance(seed in 0u64..1_000_000, n in 2usize..8) {
        let a = random_essentially_nonnegative(n, seed);
        let p = perron_frobenius(&a, 1e-12).unwrap();
        let r: f64 = a.matvec(&p.vector).iter().zip(&p.vector).map(|(x, v)| (x - p.value * v).powi(2)).sum::<f64>().sqrt();
        prop_assert!(r <= 1e-12 * a.norm_inf().max(1.0));
    }
}

fn coupled() -> (Vec<f64>, SquareMatrix) {
    (
        vec![1.0, 1.0],
        SquareMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
    )
}

#[test]
fn dirichlet_decreases_to_generalized_eigenvalue() {
    let (d, l) = coupled();
    let mut prev = f64::INFINITY;
    for r in [5.0, 10.0, 20.0, 50.0] {
        let v = dirichlet_principal_eigenvalue(&d, 0.0, &l, r, 2000).unwrap().value;
        assert!(v < prev);
        prev = v;
    }
    assert!(prev.abs() < 0.05 && prev > 0.0);
}

#[test]
fn dirichlet_matches_lambda1_for_several_speeds() {
    let l = laplacian_matrix(2).unwrap().scaled(0.1).shifted(1.0);
    let d = vec![1.0, 1.0];
    let model = Model::lotka_volterra(d.clone(), l.clone(), SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap();
    let cs = minimal_speed(&model, 1e-12).unwrap().c_star;
    for c in [0.0, 0.5 * cs, cs] {
        let target = generalized_lambda1(&d, c, &l).unwrap();
        let v30 = dirichlet_principal_eigenvalue(&d, c, &l, 30.0, 2000).unwrap().value;
        let v50 = dirichlet_principal_eigenvalue(&d, c, &l, 50.0, 2000).unwrap().value;
        assert!(v50 < v30);
        assert!((v50 - target).abs() < 0.05, "c={c}: {v50} vs {target}");
    }
}

#[test]
fn generalized_lambda1_sign_flips_at_c_star() {
    let l = SquareMatrix::from_rows(&[vec![0.5, 0.3], vec![0.7, -0.2]]).unwrap();
    let d = vec![0.4, 2.0];
    let model = Model::lotka_volterra(d.clone(), l.clone(), SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap();
    let cs = minimal_speed(&model, 1e-12).unwrap().c_star;
    assert!(generalized_lambda1(&d, cs - 1e-6, &l).unwrap() < 0.0);
    assert!(generalized_lambda1(&d, cs + 1e-6, &l).unwrap() > 0.0);
    assert!(generalized_lambda1(&d, cs, &l).unwrap().abs() < 1e-8);
    let kappa0 = generalized_lambda1(&d, 0.0, &l).unwrap();
    assert_abs_diff_eq!(kappa0, -model.lambda_pf().unwrap(), epsilon = 1e-12);
    let mut prev = kappa0;
    for k in 1..20 {
        let v = generalized_lambda1(&d, k as f64 * 0.2, &l).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}
