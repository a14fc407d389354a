use kpp_core::dispersion::*;
use kpp_core::zoo::{
    gurtin_maccamy, laplacian_matrix, random_lv_model, toads_local, toads_nonlocal, GurtinParams, Sampled, ToadsParams,
};
use kpp_core::{Model, SquareMatrix};

fn equal_diffusion(n: usize) -> Model {
    let l = laplacian_matrix(n).unwrap().scaled(0.1).shifted(1.0);
    Model::lotka_volterra(vec![1.0; n], l, SquareMatrix::from_fn(n, |_, _| 1.0)).unwrap()
}

#[test]
fn equal_diffusion_speed_is_two() {
    for n in [2, 3, 5, 10] {
        let r = minimal_speed(&equal_diffusion(n), 1e-12).unwrap();
        assert!((r.c_star - 2.0).abs() < 1e-8, "N={n}: {}", r.c_star);
        assert!((r.mu_star - 1.0).abs() < 1e-6, "N={n}: {}", r.mu_star);
        assert!((r.lower_bound - r.c_star).abs() < 1e-8 && (r.upper_bound - r.c_star).abs() < 1e-8);
        assert!(speed_bounds_check(&r).iter().all(|b| b.holds));
    }
}

#[test]
fn bounds_on_random_models() {
    for seed in 0..50 {
        let n = 2 + (seed as usize % 5);
        let m = random_lv_model(n, seed).unwrap();
        let r = minimal_speed(&m, 1e-12).unwrap();
        for b in speed_bounds_check(&r) {
            assert!(b.holds, "seed {seed}: {b:?}");
        }
        assert!(r.lower_bound < r.c_star && r.c_star < r.upper_bound);
    }
}

#[test]
fn negative_average_growth_drops_average_bound() {
    // a slow grower feeding a fast diffuser that dies: the weight at μ* sits on the diffuser
    let l = SquareMatrix::from_rows(&[vec![0.5, 0.01], vec![0.5, -1.0]]).unwrap();
    let m = Model::lotka_volterra(vec![0.01, 10.0], l, SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap();
    let r = minimal_speed(&m, 1e-12).unwrap();
    assert!(r.r_avg < 0.0, "{}", r.r_avg);
    assert!(r.avg_bound.is_none());
    assert!(speed_bounds_check(&r).iter().all(|b| b.holds));
}

#[test]
fn permutation_invariance() {
    let m = random_lv_model(4, 7).unwrap();
    let a = minimal_speed(&m, 1e-12).unwrap().c_star;
    let b = minimal_speed(&m.permuted(&[2, 0, 3, 1]).unwrap(), 1e-12)
        .unwrap()
        .c_star;
    assert!((a - b).abs() < 1e-9);
}

fn zoo_models() -> Vec<Model> {
    vec![
        toads_local(&ToadsParams::default()).unwrap(),
        toads_nonlocal(
            &ToadsParams {
                r: 1.0,
                alpha: 0.5,
                ..ToadsParams::default()
            },
            &Sampled::Gaussian {
                amplitude: 1.0,
                width: 1.0,
            },
        )
        .unwrap(),
        gurtin_maccamy(&GurtinParams::default()).unwrap(),
        equal_diffusion(3),
    ]
}

#[test]
fn dispersion_curve_is_convex_on_zoo() {
    for m in zoo_models() {
        let r = minimal_speed(&m, 1e-12).unwrap();
        let grid = default_curve_grid(r.mu_star, 200);
        let curve = dispersion_curve(&m, &grid).unwrap();
        assert!(curve.second_differences().iter().all(|v| *v > 0.0));
        let min = curve.speed.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= r.c_star - 1e-9);
    }
}

#[test]
fn toads_speed_exceeds_slowest_bound_and_tends_to_fastest() {
    let p = ToadsParams::default();
    let r = minimal_speed(&toads_local(&p).unwrap(), 1e-12).unwrap();
    assert!(r.c_star > 2.0 * (p.theta_min * p.r).sqrt());
    let mut prev = 0.0;
    for alpha in [1e-2, 1e-4, 1e-6] {
        let m = toads_local(&ToadsParams { alpha, ..p.clone() }).unwrap();
        let c = minimal_speed(&m, 1e-12).unwrap().c_star;
        assert!(c > prev);
        prev = c;
    }
    assert!((prev - 2.0 * (p.theta_max * p.r).sqrt()).abs() < 1e-2);
}

#[test]
fn csv_row_round_trips() {
    let r = minimal_speed(&equal_diffusion(2), 1e-12).unwrap();
    let row = r.csv_row();
    let first: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, r.c_star);
    assert_eq!(row.split(',').count(), SpeedReport::CSV_HEADER.split(',').count());
}

// Closed form for D = diag(1, 2), L = [[1, 0.1], [0.1, -0.2]]: the fast component has a
// negative diagonal, so the speed behaves like 2μ - 0.2/μ and is concave for large μ.
#[test]
fn negative_fast_diagonal_breaks_convexity_but_not_unimodality() {
    let l = SquareMatrix::from_rows(&[vec![1.0, 0.1], vec![0.1, -0.2]]).unwrap();
    let m = Model::lotka_volterra(vec![1.0, 2.0], l, SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap();
    let exact = |mu: f64| {
        let (a, b) = (mu * mu + 1.0, 2.0 * mu * mu - 0.2);
        ((a + b) / 2.0 + (((a - b) / 2.0).powi(2) + 0.01).sqrt()) / mu
    };
    let r = minimal_speed(&m, 1e-12).unwrap();
    let curve = dispersion_curve(&m, &default_curve_grid(r.mu_star, 200)).unwrap();
    for (mu, s) in curve.mu.iter().zip(&curve.speed) {
        assert!((s - exact(*mu)).abs() < 1e-10 * s.max(1.0));
    }
    let (mu, h) = (10.0, 1e-2);
    assert!(exact(mu + h) - 2.0 * exact(mu) + exact(mu - h) < 0.0);
    assert!(!curve.second_differences().iter().all(|v| *v > 0.0));
    assert!(curve.is_unimodal());
}

#[test]
fn random_curves_are_unimodal() {
    for seed in 0..50 {
        let m = random_lv_model(2 + seed as usize % 5, seed).unwrap();
        let r = minimal_speed(&m, 1e-12).unwrap();
        let curve = dispersion_curve(&m, &default_curve_grid(r.mu_star, 200)).unwrap();
        assert!(curve.is_unimodal(), "seed {seed}");
    }
}
