use kpp_core::dispersion::minimal_speed;
use kpp_core::model::saturation_vector;
use kpp_core::simulate::*;
use kpp_core::steady::find_constant_steady;
use kpp_core::zoo::laplacian_matrix;
use kpp_core::{Model, SquareMatrix};

fn two_component() -> Model {
    let l = laplacian_matrix(2).unwrap().scaled(0.1).shifted(1.0);
    Model::lotka_volterra(vec![1.0, 1.0], l, SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap()
}

#[test]
fn zero_stays_zero() {
    let m = two_component();
    let grid = Grid1D::new(-10.0, 10.0, 101).unwrap();
    let cfg = RunConfig {
        t_end: 1.0,
        dt: 0.05,
        boundary_guard_cells: None,
        ..RunConfig::default()
    };
    let rep = run(&m, grid, constant(&grid, &[0.0, 0.0]), &cfg).unwrap();
    assert!(rep.state.u.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn spreading_speed_matches_c_star() {
    let m = two_component();
    let grid = Grid1D::new(-50.0, 450.0, 4096).unwrap();
    let steady = find_constant_steady(&m, 1e-13).unwrap();
    let cfg = RunConfig {
        t_end: 200.0,
        dt: 0.02,
        record_every: 50,
        frame_stride: Some(20),
        ..RunConfig::default()
    };
    let init = front_like(&grid, &steady.v, 0.0);
    let rep = run(&m, grid, init.clone(), &cfg).unwrap();
    let fit = rep.right.fit.unwrap();
    println!("fitted speed {} ± {} (R² {})", fit.speed, fit.halfwidth, fit.r_squared);
    assert!((fit.speed - 2.0).abs() / 2.0 < 0.05);

    let (ch, mu) = scheme_minimal_speed(&m, grid.h(), cfg.dt).unwrap();
    let sup = SuperSolution::fit(&m, &grid, cfg.dt, mu, &init).unwrap();
    println!("scheme speed {ch}");
    for f in &rep.frames {
        let e = sup.excess(&grid, f);
        assert!(e <= 1e-9, "t={} excess {e}", f.t);
    }
}

#[test]
fn bump_spreads_both_ways() {
    let m = two_component();
    let grid = Grid1D::new(-250.0, 250.0, 4096).unwrap();
    let cfg = RunConfig {
        t_end: 100.0,
        dt: 0.02,
        record_every: 50,
        track_left_front: true,
        ..RunConfig::default()
    };
    let rep = run(&m, grid, bump(&grid, &[0.5, 0.5], 0.0, 2.0), &cfg).unwrap();
    let r = rep.right.fit.unwrap().speed;
    let l = rep.left.unwrap().fit.unwrap().speed;
    println!("right {r} left {l}");
    assert!((r - 2.0).abs() < 0.1 && (l + 2.0).abs() < 0.1);
}

#[test]
fn extinction_rate() {
    let l = laplacian_matrix(2).unwrap().scaled(0.1).shifted(-0.3);
    let m = Model::lotka_volterra(vec![1.0, 1.0], l, SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap();
    let grid = Grid1D::new(-20.0, 20.0, 401).unwrap();
    let init: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            grid.nodes()
                .iter()
                .map(|x| 0.5 + 0.3 * (x / 7.0 + i as f64).sin())
                .collect()
        })
        .collect();
    let cfg = RunConfig {
        t_end: 50.0,
        dt: 0.01,
        record_every: 10,
        boundary_guard_cells: None,
        ..RunConfig::default()
    };
    let rep = run(&m, grid, init, &cfg).unwrap();
    let fit = log_sup_slope(&rep.state.history, 10.0, 50.0).unwrap();
    println!("decay slope {}", fit.speed);
    assert!((fit.speed + 0.3).abs() < 0.03);
}

#[test]
fn persistence_floor() {
    let m = two_component();
    let grid = Grid1D::new(-100.0, 100.0, 2001).unwrap();
    let cfg = RunConfig {
        t_end: 40.0,
        dt: 0.02,
        record_every: 25,
        boundary_guard_cells: None,
        ..RunConfig::default()
    };
    let rep = run(&m, grid, bump(&grid, &[0.01, 0.02], 0.0, 3.0), &cfg).unwrap();
    let floors: Vec<f64> = rep
        .state
        .history
        .iter()
        .map(|e| e.probe_inf.iter().cloned().fold(f64::INFINITY, f64::min))
        .collect();
    let half = &floors[floors.len() / 2..];
    println!("{:?}", &half[half.len() - 3..]);
    assert!(half.iter().all(|v| *v > 0.0));
    for w in half.windows(2) {
        assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn absorbing_set() {
    let m = two_component();
    let sat = saturation_vector(&m, 8).unwrap();
    let grid = Grid1D::new(-30.0, 30.0, 601).unwrap();
    let init: Vec<Vec<f64>> = sat
        .k
        .iter()
        .enumerate()
        .map(|(i, k)| {
            grid.nodes()
                .iter()
                .map(|x| 3.0 * k * (0.6 + 0.4 * (x / 5.0 + i as f64).cos()).max(0.0))
                .collect()
        })
        .collect();
    let dt = 0.9
        * max_stable_dt(
            &m,
            &sat,
            &init
                .iter()
                .map(|r| r.iter().cloned().fold(0.0, f64::max))
                .collect::<Vec<_>>(),
        );
    let cfg = RunConfig {
        t_end: 100.0,
        dt,
        boundary_guard_cells: None,
        absorbing_after: Some(100.0),
        ..RunConfig::default()
    };
    let rep = run_with_saturation(&m, grid, init, &cfg, sat.clone()).unwrap();
    for (e, g) in rep.sup_envelope.iter().zip(&rep.absorbing_bound) {
        assert!(*e <= 1.001 * g);
    }
    assert!(rep.absorbing.unwrap().holds);
}

#[test]
fn steady_state_is_fixed_point() {
    let m = two_component();
    let s = find_constant_steady(&m, 1e-13).unwrap();
    let grid = Grid1D::new(-10.0, 10.0, 201).unwrap();
    let cfg = RunConfig {
        t_end: 10.0,
        dt: 0.01,
        boundary_guard_cells: None,
        ..RunConfig::default()
    };
    let rep = run(&m, grid, constant(&grid, &s.v), &cfg).unwrap();
    for (row, v) in rep.state.u.iter().zip(&s.v) {
        for x in row {
            assert!((x - v).abs() < 1e-8);
        }
    }
}

#[test]
fn mass_conserved_without_reaction_growth() {
    // zero column sums and no competition: the trapezoid integral of Σ u_i is invariant
    let l = laplacian_matrix(3).unwrap().scaled(0.5);
    let m = Model::lotka_volterra(vec![0.5, 1.0, 2.0], l, SquareMatrix::zeros(3)).unwrap();
    let grid = Grid1D::new(-10.0, 10.0, 201).unwrap();
    let sat = kpp_core::model::SaturationData {
        k: vec![1.0; 3],
        sampled_sup: vec![1.0; 3],
        alpha_half: None,
    };
    let init = bump(&grid, &[1.0, 0.5, 0.2], 1.0, 3.0);
    let mass = |u: &[Vec<f64>]| -> f64 {
        u.iter()
            .map(|row| row.iter().sum::<f64>() - 0.5 * (row[0] + row[row.len() - 1]))
            .sum::<f64>()
            * grid.h()
    };
    let m0 = mass(&init);
    let mut state = SimState::new(grid, init).unwrap();
    let mut sim = Simulator::new(&m, grid, 0.01, &sat, &[1.0; 3]).unwrap();
    for _ in 0..500 {
        sim.step(&mut state).unwrap();
    }
    assert!((mass(&state.u) - m0).abs() < 1e-8 * 5.0);
}

#[test]
fn stability_budget_enforced() {
    let m = two_component();
    let sat = saturation_vector(&m, 8).unwrap();
    let grid = Grid1D::new(-10.0, 10.0, 101).unwrap();
    let max = max_stable_dt(&m, &sat, &[1.0, 1.0]);
    assert!(matches!(
        Simulator::new(&m, grid, 2.0 * max, &sat, &[1.0, 1.0]),
        Err(kpp_core::KppError::StabilityBudgetExceeded { .. })
    ));
    let _ = minimal_speed(&m, 1e-12).unwrap();
}
