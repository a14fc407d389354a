use kpp_core::zoo::*;
use kpp_core::{KppError, SquareMatrix};

#[test]
fn toads_local_structure() {
    for n in [2, 5, 10, 25] {
        let p = ToadsParams {
            n,
            ..ToadsParams::default()
        };
        let m = toads_local(&p).unwrap();
        assert!((m.lambda_pf().unwrap() - p.r).abs() < 1e-10);
        assert!(m.l().is_symmetric(0.0));
        assert!(m.d().windows(2).all(|w| w[0] < w[1]));
        assert!(m.validate().all_ok());
    }
}

#[test]
fn toads_nonlocal_constant_kernel_closed_form() {
    let p = ToadsParams {
        n: 6,
        r: 1.0,
        alpha: 0.5,
        ..ToadsParams::default()
    };
    let k = 0.8;
    let m = toads_nonlocal(&p, &Sampled::Constant { value: k }).unwrap();
    // (r - α) I + α θ_N K 1_N has PF value r - α + α θ_N K N
    let expected = p.r - p.alpha + p.alpha * p.step() * k * p.n as f64;
    assert!((m.lambda_pf().unwrap() - expected).abs() < 1e-10);

    let g = toads_nonlocal(
        &p,
        &Sampled::Gaussian {
            amplitude: 1.0,
            width: 1.0,
        },
    )
    .unwrap();
    assert!(g.lambda_pf().unwrap() >= p.r - p.alpha);

    let err = toads_nonlocal(&p, &Sampled::Step { from: 1e9, value: 1.0 }).unwrap_err();
    assert!(matches!(err, KppError::HypothesisViolation(_)));
}

#[test]
fn gurtin_assembly() {
    let p = GurtinParams {
        n: 4,
        max_age: 1.0,
        a_m: 0.5,
        ..GurtinParams::default()
    };
    let parts = gurtin_matrices(&p).unwrap();
    let cols = parts.aging.col_sums();
    // first row is zero, so column 0 only gains the sub-diagonal
    assert!((cols[0] - 1.0 / p.step()).abs() < 1e-12);
    for s in &cols[1..3] {
        assert!(s.abs() < 1e-12);
    }
    assert!((cols[3] + 1.0 / p.step()).abs() < 1e-12);
    assert!(parts.birth.row(0)[..2].iter().all(|v| *v == 0.0));
    assert!(parts.birth.row(0)[2..].iter().all(|v| *v > 0.0));
    assert!((1..4).all(|i| parts.birth.row(i).iter().all(|v| *v == 0.0)));
}

#[test]
fn gurtin_defaults_are_asymmetric_and_supercritical() {
    let p = GurtinParams::default();
    let m = gurtin_maccamy(&p).unwrap();
    assert!(asymmetry_index(m.l()) > 0.5);
    for n in [5, 10, 20, 40, 80] {
        let m = gurtin_maccamy(&GurtinParams { n, ..p.clone() }).unwrap();
        assert!(m.lambda_pf().unwrap() > 0.0);
    }
}

#[test]
fn gurtin_without_births_is_rejected() {
    let p = GurtinParams {
        k: Sampled::Constant { value: 0.0 },
        ..GurtinParams::default()
    };
    assert!(matches!(gurtin_maccamy(&p), Err(KppError::HypothesisViolation(_))));
}

#[test]
fn lv_mutation_builder() {
    let m = lv_mutation(
        vec![1.0, 2.0, 3.0],
        &[1.0, 0.5, -0.2],
        0.1,
        SquareMatrix::from_fn(3, |_, _| 1.0),
    )
    .unwrap();
    assert_eq!(m.l()[(0, 1)], 0.1);
    assert!((m.l()[(1, 1)] - 0.3).abs() < 1e-15);
}

#[test]
fn random_models_validate() {
    for seed in 0..20 {
        let m = random_lv_model(2 + seed as usize % 5, seed).unwrap();
        assert!(m.lambda_pf().unwrap() > 0.0);
    }
}
