//! The six `kpp-lab` commands. Each returns an in-memory [`Outcome`]; nothing
//! here touches the file system.

use anyhow::Result;
use rayon::prelude::*;
use serde_json::{json, Value};

use kpp_core::dispersion::{default_curve_grid, dispersion_curve, minimal_speed, speed_bounds_check};
use kpp_core::model::saturation_vector;
use kpp_core::simulate::{self, Grid1D, RunConfig};
use kpp_core::spectral::{dirichlet_principal_eigenvalue, generalized_lambda1, perron_frobenius};
use kpp_core::steady::{find_constant_steady, nonexistence_certificate, Regime};
use kpp_core::waves::{
    discrete_residual, probe_speed, solve_wave, wave_diagnostics, wave_shape, WaveProfile, WaveSolveOptions,
};
use kpp_core::zoo::random_essentially_nonnegative;
use kpp_core::{KppError, Model, SquareMatrix};

use crate::config::*;
use crate::output::{fmt_f64, to_sorted, Cell, Outcome, Summary, Table};

/// Runtime knobs that are not part of the experiment itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads for sweeps; `None` uses every core.
    pub threads: Option<usize>,
}

pub fn execute(cmd: CommandName, loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = &loaded.config;
    let hash = &loaded.hash;
    let mut out = match cmd {
        CommandName::Speed => cmd_speed(cfg, hash),
        CommandName::Simulate => cmd_simulate(cfg, hash),
        CommandName::Wave => cmd_wave(cfg, hash),
        CommandName::Steady => cmd_steady(cfg, hash),
        CommandName::Spectra => cmd_spectra(cfg, hash),
        CommandName::Sweep => run_sweep(loaded, opts).map(|(o, _)| o),
    }?;
    if out.lines.is_empty() {
        out.lines = out
            .summary
            .keys()
            .zip(out.summary.cells())
            .map(|(k, v)| format!("{k} = {}", v.csv()))
            .collect();
    }
    Ok(out)
}

fn build_model(cfg: &ExperimentConfig) -> Result<Model> {
    let model = cfg.model.build(cfg.seed)?;
    model.require_valid()?;
    Ok(model)
}

fn summary_table(summary: &Summary) -> Table {
    let mut t = Table::new(summary.keys());
    t.push(summary.cells().map(Cell::csv).collect());
    t
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::INFINITY, f64::min)
}

pub const SPEED_KEYS: &[&str] = &[
    "c_star",
    "mu_star",
    "lambda_pf",
    "lower_bound",
    "upper_bound",
    "d_avg",
    "r_avg",
    "avg_bound",
    "max_component_bound",
    "identity_error",
    "equal_diffusion",
    "bounds_hold",
    "curve_convex",
    "curve_unimodal",
    "curve_min_excess",
];

fn cmd_speed(cfg: &ExperimentConfig, hash: &str) -> Result<Outcome> {
    let block = cfg.speed.clone().unwrap_or_default();
    let model = build_model(cfg)?;
    let rep = minimal_speed(&model, cfg.tolerances.speed)?;
    let checks = speed_bounds_check(&rep);
    let grid = default_curve_grid(rep.mu_star, block.curve_points.max(3));
    let curve = dispersion_curve(&model, &grid)?;

    let mu = rep.mu_star;
    let mut s = Summary::new(SPEED_KEYS);
    s.set("c_star", rep.c_star);
    s.set("mu_star", mu);
    s.set("lambda_pf", rep.lambda_pf);
    s.set("lower_bound", rep.lower_bound);
    s.set("upper_bound", rep.upper_bound);
    s.set("d_avg", rep.d_avg);
    s.set("r_avg", rep.r_avg);
    s.set("avg_bound", rep.avg_bound);
    let comp = rep.per_component_bounds.iter().map(|(_, b)| *b);
    s.set(
        "max_component_bound",
        (!rep.per_component_bounds.is_empty()).then(|| max_of(comp)),
    );
    s.set(
        "identity_error",
        (mu * mu * rep.d_avg + rep.r_avg - mu * rep.c_star).abs(),
    );
    s.set("equal_diffusion", rep.equal_diffusion);
    s.set("bounds_hold", checks.iter().all(|c| c.holds));
    s.set("curve_convex", curve.second_differences().iter().all(|v| *v > 0.0));
    s.set("curve_unimodal", curve.is_unimodal());
    s.set("curve_min_excess", min_of(curve.speed.iter().copied()) - rep.c_star);

    let mut out = Outcome::new("speed", hash, s.clone());
    out.add_json(
        "speed.json",
        json!({
            "summary": s.to_json(),
            "report": to_sorted(&rep)?,
            "bounds": to_sorted(&checks)?,
            "hypotheses": to_sorted(&model.validate())?,
        }),
    )?;
    out.add_csv("speed.csv", &summary_table(&s))?;
    let mut t = Table::new(["mu", "speed"]);
    for (m, v) in curve.mu.iter().zip(&curve.speed) {
        t.push_nums(&[*m, *v]);
    }
    out.add_csv("dispersion.csv", &t)?;
    let mut bt = Table::new(["bound", "lhs", "rhs", "slack", "strict", "holds"]);
    for c in &checks {
        bt.push(vec![
            c.name.clone(),
            fmt_f64(c.lhs),
            fmt_f64(c.rhs),
            fmt_f64(c.slack),
            c.strict.to_string(),
            c.holds.to_string(),
        ]);
    }
    out.add_csv("bounds.csv", &bt)?;
    Ok(out)
}

fn resolve_level(level: &Level, model: &Model, k: &[f64], tol: f64) -> Result<Vec<f64>> {
    let v = match level {
        Level::Values(v) => v.clone(),
        Level::Named(NamedLevel::Saturation) => k.to_vec(),
        Level::Named(NamedLevel::Steady) => find_constant_steady(model, tol)?.v,
    };
    if v.len() != model.n() {
        return Err(config_err(format!(
            "level has {} entries for {} components",
            v.len(),
            model.n()
        )));
    }
    Ok(v)
}

fn initial_data(spec: &InitialSpec, model: &Model, grid: &Grid1D, k: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = model.n();
    Ok(match spec {
        InitialSpec::FrontLike { level, x0 } => simulate::front_like(grid, &resolve_level(level, model, k, tol)?, *x0),
        InitialSpec::Bump {
            level,
            center,
            halfwidth,
        } => simulate::bump(grid, &resolve_level(level, model, k, tol)?, *center, *halfwidth),
        InitialSpec::Constant { level } => simulate::constant(grid, &resolve_level(level, model, k, tol)?),
        InitialSpec::Oscillating {
            base,
            amplitude,
            wavelength,
        } => (0..n)
            .map(|i| {
                grid.nodes()
                    .iter()
                    .map(|x| base + amplitude * (x / wavelength + i as f64).sin())
                    .collect()
            })
            .collect(),
        InitialSpec::SaturationMultiple {
            factor,
            base,
            amplitude,
            wavelength,
        } => (0..n)
            .map(|i| {
                grid.nodes()
                    .iter()
                    .map(|x| factor * k[i] * (base + amplitude * (x / wavelength + i as f64).cos()).max(0.0))
                    .collect()
            })
            .collect(),
    })
}

pub const SIMULATE_KEYS: &[&str] = &[
    "lambda_pf",
    "c_star",
    "t_end",
    "dt",
    "steps",
    "fitted_speed",
    "speed_halfwidth",
    "speed_r_squared",
    "speed_rel_error",
    "left_speed",
    "decay_slope",
    "decay_rel_error",
    "floor_final",
    "floor_positive",
    "floor_nondecreasing",
    "envelope_ratio",
    "envelope_ok",
    "absorbing_ok",
    "final_sup_ratio",
    "drift",
];

fn cmd_simulate(cfg: &ExperimentConfig, hash: &str) -> Result<Outcome> {
    let block = cfg.simulate.clone().unwrap_or_default();
    let model = build_model(cfg)?;
    let lambda_pf = model.lambda_pf()?;
    let sat = saturation_vector(&model, block.run.grid_density)?;
    let grid = Grid1D::new(block.domain.0, block.domain.1, block.m)?;
    let init = initial_data(&block.initial, &model, &grid, &sat.k, cfg.tolerances.steady)?;
    let mut run_cfg: RunConfig = block.run.clone();
    if let Some(f) = block.dt_fraction {
        let sup0: Vec<f64> = init.iter().map(|r| max_of(r.iter().copied()).max(0.0)).collect();
        run_cfg.dt = f * simulate::max_stable_dt(&model, &sat, &sup0);
    }
    let rep = simulate::run_with_saturation(&model, grid, init.clone(), &run_cfg, sat.clone())?;
    let c_star = if lambda_pf > 0.0 {
        Some(minimal_speed(&model, cfg.tolerances.speed)?.c_star)
    } else {
        None
    };

    let mut s = Summary::new(SIMULATE_KEYS);
    s.set("lambda_pf", lambda_pf);
    s.set("c_star", c_star);
    s.set("t_end", rep.state.t);
    s.set("dt", run_cfg.dt);
    s.set("steps", rep.steps);
    // a level set that covers the whole domain has no front to fit
    let xmax = rep.state.grid.x(rep.state.grid.m - 1);
    let right_fit = rep
        .right
        .fit
        .filter(|_| rep.right.samples.iter().any(|(_, x)| *x < xmax));
    if let Some(fit) = &right_fit {
        s.set("fitted_speed", fit.speed);
        s.set("speed_halfwidth", fit.halfwidth);
        s.set("speed_r_squared", fit.r_squared);
        s.set("speed_rel_error", c_star.map(|c| (fit.speed - c).abs() / c));
    }
    s.set("left_speed", rep.left.as_ref().and_then(|l| l.fit.map(|f| f.speed)));

    let window = block
        .decay_window
        .or((lambda_pf < 0.0).then(|| (run_cfg.t_end / 5.0, run_cfg.t_end)));
    if let Some((t0, t1)) = window {
        let fit = simulate::log_sup_slope(&rep.state.history, t0, t1)?;
        s.set("decay_slope", fit.speed);
        s.set("decay_rel_error", (fit.speed - lambda_pf).abs() / lambda_pf.abs());
    }

    let floors: Vec<f64> = rep
        .state
        .history
        .iter()
        .map(|e| min_of(e.probe_inf.iter().copied()))
        .collect();
    if let Some(last) = floors.last() {
        let half = &floors[floors.len() / 2..];
        s.set("floor_final", *last);
        s.set("floor_positive", half.iter().all(|v| *v > 0.0));
        s.set("floor_nondecreasing", half.windows(2).all(|w| w[1] >= w[0]));
    }
    let ratio = max_of(rep.sup_envelope.iter().zip(&rep.absorbing_bound).map(|(e, b)| e / b));
    s.set("envelope_ratio", ratio);
    s.set("envelope_ok", ratio <= 1.001);
    s.set("absorbing_ok", rep.absorbing.as_ref().map(|a| a.holds));
    s.set(
        "final_sup_ratio",
        max_of(rep.state.sup().iter().zip(&sat.k).map(|(u, k)| u / k)),
    );
    let drift = max_of(
        rep.state
            .u
            .iter()
            .zip(&init)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())),
    );
    s.set("drift", drift);

    let mut out = Outcome::new("simulate", hash, s.clone());
    if let (Some(fit), Some(c)) = (&right_fit, c_star) {
        out.lines.push(format!(
            "measured speed {} ± {} vs c* {} (relative error {})",
            fmt_f64(fit.speed),
            fmt_f64(fit.halfwidth),
            fmt_f64(c),
            fmt_f64((fit.speed - c).abs() / c)
        ));
    }
    out.lines
        .extend(s.keys().zip(s.cells()).map(|(k, v)| format!("{k} = {}", v.csv())));
    out.add_json(
        "simulate.json",
        json!({
            "summary": s.to_json(),
            "right_front": to_sorted(&rep.right)?,
            "left_front": to_sorted(&rep.left)?,
            "absorbing": to_sorted(&rep.absorbing)?,
            "saturation": to_sorted(&rep.saturation)?,
            "sup_envelope": rep.sup_envelope,
            "absorbing_bound": rep.absorbing_bound,
        }),
    )?;
    out.add_csv("simulate.csv", &summary_table(&s))?;

    let n = model.n();
    let comp_cols = |p: &'static str| (0..n).map(move |i| format!("{p}{i}"));
    let mut ht = Table::new(
        ["t".to_string(), "front".to_string()]
            .into_iter()
            .chain(comp_cols("sup_u"))
            .chain(comp_cols("probe_inf_u")),
    );
    for e in &rep.state.history {
        let mut row = vec![fmt_f64(e.t), e.front.map(fmt_f64).unwrap_or_default()];
        row.extend(e.sup.iter().chain(&e.probe_inf).map(|x| fmt_f64(*x)));
        ht.push(row);
    }
    out.add_csv("history.csv", &ht)?;

    let mut ft = Table::new(["t", "x"]);
    for (t, x) in &rep.right.samples {
        ft.push_nums(&[*t, *x]);
    }
    out.add_csv("front.csv", &ft)?;
    if let Some(left) = &rep.left {
        let mut lt = Table::new(["t", "x"]);
        for (t, x) in &left.samples {
            lt.push_nums(&[*t, *x]);
        }
        out.add_csv("left_front.csv", &lt)?;
    }

    let mut fin = Table::new(std::iter::once("x".to_string()).chain(comp_cols("u")));
    for (j, x) in grid.nodes().iter().enumerate() {
        fin.push(
            std::iter::once(*x)
                .chain(rep.state.u.iter().map(|r| r[j]))
                .map(fmt_f64)
                .collect(),
        );
    }
    out.add_csv("final.csv", &fin)?;
    if !rep.frames.is_empty() {
        let mut fr = Table::new(["t".to_string(), "x".to_string()].into_iter().chain(comp_cols("u")));
        for f in &rep.frames {
            for (j, x) in grid.nodes().iter().enumerate() {
                fr.push(
                    [f.t, *x]
                        .into_iter()
                        .chain(f.u.iter().map(|r| r[j]))
                        .map(fmt_f64)
                        .collect(),
                );
            }
        }
        out.add_csv("frames.csv", &fr)?;
    }
    Ok(out)
}

pub const WAVE_KEYS: &[&str] = &[
    "mode",
    "c",
    "c_star",
    "c_ratio",
    "radius",
    "grid_size",
    "residual",
    "iterations",
    "method",
    "mu1",
    "bracket_violation",
    "is_wave",
    "nonnegative",
    "back_positive",
    "front",
    "orientation",
    "bounded_by_k",
    "decreasing_tail",
    "back_floor_ratio",
    "tail_rate_error",
    "failure",
];

fn profile_table(p: &WaveProfile) -> Table {
    let n = p.p.len();
    let mut t = Table::new(std::iter::once("xi".to_string()).chain((0..n).map(|i| format!("p{i}"))));
    for (j, x) in p.xi.iter().enumerate() {
        t.push(
            std::iter::once(*x)
                .chain(p.p.iter().map(|r| r[j]))
                .map(fmt_f64)
                .collect(),
        );
    }
    t
}

fn enum_name(v: &impl serde::Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn cmd_wave(cfg: &ExperimentConfig, hash: &str) -> Result<Outcome> {
    let block = cfg.wave.clone().unwrap_or_default();
    let model = build_model(cfg)?;
    let c_star = minimal_speed(&model, cfg.tolerances.speed)?.c_star;
    let c = block.c.unwrap_or(block.c_factor * c_star);
    let opts = WaveSolveOptions {
        tol: cfg.tolerances.wave,
        ..WaveSolveOptions::default()
    };
    let k = saturation_vector(&model, 8)?.k;
    let theta = 0.01 * min_of(k.iter().copied());

    let mut s = Summary::new(WAVE_KEYS);
    s.set("c", c);
    s.set("c_star", c_star);
    s.set("c_ratio", c / c_star);
    let mut out;
    match block.mode {
        WaveMode::Solve => {
            let (profile, env) = solve_wave(&model, c, block.radius, block.m, &opts)?;
            let steady = find_constant_steady(&model, cfg.tolerances.steady)?;
            let residual = discrete_residual(&model, c, &profile.xi, &profile.p);
            let mut violation = f64::NEG_INFINITY;
            for (j, x) in profile.xi.iter().enumerate() {
                let (lo, hi) = (env.sub(*x), env.sup(*x));
                for i in 0..model.n() {
                    let p = profile.p[i][j];
                    violation = violation.max(lo[i] - p).max(p - hi[i]);
                }
            }
            let diag = wave_diagnostics(&profile, &k, env.mu1, Some(&steady.v));
            let shape = wave_shape(&profile, theta);
            s.set("mode", "solve");
            s.set("radius", profile.radius);
            s.set("grid_size", profile.xi.len());
            s.set("residual", residual);
            s.set("iterations", profile.iterations);
            s.set("method", enum_name(&profile.method));
            s.set("mu1", env.mu1);
            s.set("bracket_violation", violation);
            s.set("is_wave", shape.is_wave);
            s.set("nonnegative", shape.nonnegative);
            s.set("back_positive", shape.back_positive);
            s.set("front", shape.front);
            s.set("orientation", enum_name(&diag.orientation));
            s.set("bounded_by_k", diag.bounded_by_saturation);
            s.set("decreasing_tail", diag.decreasing_tail);
            s.set("back_floor_ratio", diag.back_floor_ratio);
            s.set("tail_rate_error", diag.tail_rate_error);

            out = Outcome::new("wave", hash, s.clone());
            out.add_json(
                "wave.json",
                json!({
                    "summary": s.to_json(),
                    "envelope": to_sorted(&env)?,
                    "diagnostics": to_sorted(&diag)?,
                    "shape": to_sorted(&shape)?,
                    "steady_state": steady.v,
                }),
            )?;
            out.add_csv("profile.csv", &profile_table(&profile))?;
            let n = model.n();
            let mut et = Table::new(
                std::iter::once("xi".to_string())
                    .chain((0..n).map(|i| format!("sub{i}")))
                    .chain((0..n).map(|i| format!("sup{i}"))),
            );
            for x in &profile.xi {
                et.push(
                    std::iter::once(*x)
                        .chain(env.sub(*x))
                        .chain(env.sup(*x))
                        .map(fmt_f64)
                        .collect(),
                );
            }
            out.add_csv("envelope.csv", &et)?;
        }
        WaveMode::Probe => {
            let probe = probe_speed(&model, c, block.radius, block.m, &opts)?;
            s.set("mode", "probe");
            s.set("radius", probe.radius);
            s.set("grid_size", probe.grid_size);
            s.set("residual", probe.residual);
            s.set("is_wave", probe.found_wave());
            if let Some(shape) = &probe.shape {
                s.set("nonnegative", shape.nonnegative);
                s.set("back_positive", shape.back_positive);
                s.set("front", shape.front);
            }
            s.set("failure", probe.failure.clone());
            if let Some(p) = &probe.profile {
                s.set("iterations", p.iterations);
                s.set("method", enum_name(&p.method));
            }
            out = Outcome::new("wave", hash, s.clone());
            out.add_json(
                "wave.json",
                json!({ "summary": s.to_json(), "probe": to_sorted(&probe)? }),
            )?;
            if let Some(p) = &probe.profile {
                out.add_csv("profile.csv", &profile_table(p))?;
            }
        }
    }
    Ok(out)
}

pub const STEADY_KEYS: &[&str] = &[
    "lambda_pf",
    "regime",
    "v_min",
    "v_max",
    "residual",
    "start",
    "others",
    "in_search_set",
    "drift",
];

fn cmd_steady(cfg: &ExperimentConfig, hash: &str) -> Result<Outcome> {
    let block = cfg.steady.clone().unwrap_or_default();
    let model = build_model(cfg)?;
    let cert = nonexistence_certificate(&model)?;
    if cert.regime != Regime::Existence {
        let why = match cert.regime {
            Regime::Subcritical => "λ_PF(L) < 0, so every solution decays to zero",
            Regime::CriticalSpanCondition => "λ_PF(L) = 0 and c does not vanish on the ray of n_PF(L)",
            _ => "λ_PF(L) = 0: existence is undetermined",
        };
        return Err(KppError::HypothesisViolation(format!(
            "no positive steady state (λ_PF(L) = {}): {why}",
            cert.lambda_pf
        ))
        .into());
    }
    let st = find_constant_steady(&model, cfg.tolerances.steady)?;
    let mut s = Summary::new(STEADY_KEYS);
    s.set("lambda_pf", cert.lambda_pf);
    s.set("regime", enum_name(&cert.regime));
    s.set("v_min", min_of(st.v.iter().copied()));
    s.set("v_max", max_of(st.v.iter().copied()));
    s.set("residual", st.residual);
    s.set("start", st.start);
    s.set("others", st.others.len());
    s.set("in_search_set", st.search_set.contains(&st.v, 1e-12));
    if let Some(d) = block.drift {
        let grid = Grid1D::new(-d.halfwidth, d.halfwidth, d.m)?;
        let run_cfg = RunConfig {
            t_end: d.t_end,
            dt: d.dt,
            boundary_guard_cells: None,
            ..RunConfig::default()
        };
        let rep = simulate::run(&model, grid, simulate::constant(&grid, &st.v), &run_cfg)?;
        let drift = max_of(
            rep.state
                .u
                .iter()
                .zip(&st.v)
                .flat_map(|(row, v)| row.iter().map(move |x| (x - v).abs())),
        );
        s.set("drift", drift);
    }
    let mut out = Outcome::new("steady", hash, s.clone());
    out.add_json(
        "steady.json",
        json!({
            "summary": s.to_json(),
            "v": st.v,
            "search_set": to_sorted(&st.search_set)?,
            "others": st.others,
            "certificate": to_sorted(&cert)?,
        }),
    )?;
    let mut t = Table::new(["component", "v"]);
    for (i, v) in st.v.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(*v)]);
    }
    out.add_csv("steady.csv", &t)?;
    Ok(out)
}

pub const SPECTRA_KEYS: &[&str] = &[
    "lambda_pf",
    "c_star",
    "dirichlet_rows",
    "dirichlet_monotone",
    "max_gap_at_largest_radius",
    "sign_below",
    "sign_at",
    "sign_above",
    "sign_flip_ok",
    "invariance_cases",
    "invariance_failures",
];

fn cmd_spectra(cfg: &ExperimentConfig, hash: &str) -> Result<Outcome> {
    let block = cfg.spectra.clone().unwrap_or_default();
    let model = build_model(cfg)?;
    let (d, l) = (model.d(), model.l());
    let pf = perron_frobenius(l, cfg.tolerances.pf)?;
    let c_star = if pf.value > 0.0 {
        Some(minimal_speed(&model, cfg.tolerances.speed)?.c_star)
    } else {
        None
    };
    let speeds: Vec<f64> = match (&block.speeds, c_star) {
        (Some(v), _) => v.clone(),
        (None, _) if block.c_factors.is_empty() => Vec::new(),
        (None, Some(cs)) => block.c_factors.iter().map(|f| f * cs).collect(),
        (None, None) => {
            return Err(KppError::HypothesisViolation(format!(
                "λ_PF(L) = {} <= 0: there is no c* to scale `c_factors` by; give absolute `speeds`",
                pf.value
            ))
            .into())
        }
    };
    let mut radii = block.radii.clone();
    radii.sort_by(f64::total_cmp);

    let mut s = Summary::new(SPECTRA_KEYS);
    s.set("lambda_pf", pf.value);
    s.set("c_star", c_star);
    let mut table = Table::new(["c", "radius", "lambda_dirichlet", "lambda1", "gap"]);
    let mut monotone = true;
    let mut max_gap: Option<f64> = None;
    for &c in &speeds {
        let lambda1 = generalized_lambda1(d, c, l)?;
        let mut prev = f64::INFINITY;
        for (idx, &r) in radii.iter().enumerate() {
            let v = dirichlet_principal_eigenvalue(d, c, l, r, block.m)?.value;
            monotone &= v < prev;
            prev = v;
            if idx + 1 == radii.len() {
                max_gap = Some(max_gap.unwrap_or(0.0).max((v - lambda1).abs()));
            }
            table.push_nums(&[c, r, v, lambda1, v - lambda1]);
        }
    }
    s.set("dirichlet_rows", table.len());
    if !table.is_empty() {
        s.set("dirichlet_monotone", monotone);
    }
    s.set("max_gap_at_largest_radius", max_gap);
    if let Some(cs) = c_star {
        let below = generalized_lambda1(d, cs - block.sign_delta, l)?;
        let at = generalized_lambda1(d, cs, l)?;
        let above = generalized_lambda1(d, cs + block.sign_delta, l)?;
        s.set("sign_below", below);
        s.set("sign_at", at);
        s.set("sign_above", above);
        s.set("sign_flip_ok", below < 0.0 && above > 0.0);
    }
    let failures = invariance_suite(
        cfg.seed,
        block.invariance_cases,
        block.invariance_n_max,
        cfg.tolerances.pf,
    )?;
    s.set("invariance_cases", block.invariance_cases);
    s.set("invariance_failures", failures.len());

    let mut out = Outcome::new("spectra", hash, s.clone());
    out.add_json(
        "spectra.json",
        json!({
            "summary": s.to_json(),
            "pf": to_sorted(&pf)?,
            "invariance_failures": failures,
        }),
    )?;
    out.add_csv("spectra.csv", &table)?;
    Ok(out)
}

/// Shift, transpose, monotonicity and permutation checks of the
/// Perron–Frobenius eigenpair on seeded random matrices; returns the failures.
pub fn invariance_suite(seed: u64, cases: usize, n_max: usize, tol: f64) -> Result<Vec<String>> {
    let n_max = n_max.max(2);
    let mut failures = Vec::new();
    for k in 0..cases {
        let s = seed.wrapping_add(k as u64);
        let n = 2 + k % (n_max - 1);
        let a = random_essentially_nonnegative(n, s);
        let p = perron_frobenius(&a, tol)?;
        let mut fail = |what: &str| failures.push(format!("case {k} (seed {s}, n {n}): {what}"));

        let res: f64 = a
            .matvec(&p.vector)
            .iter()
            .zip(&p.vector)
            .map(|(x, v)| (x - p.value * v).powi(2))
            .sum::<f64>()
            .sqrt();
        if res > tol * a.norm_inf().max(1.0) {
            fail("residual");
        }
        let shift = ((k as f64) * 0.37).sin() * 3.0;
        let sp = perron_frobenius(&a.shifted(shift), tol)?;
        let same_vec = sp.vector.iter().zip(&p.vector).all(|(x, y)| (x - y).abs() < 1e-10);
        if (sp.value - p.value - shift).abs() >= 1e-10 || !same_vec {
            fail("shift");
        }
        if (perron_frobenius(&a.transpose(), tol)?.value - p.value).abs() >= 1e-10 {
            fail("transpose");
        }
        let bigger = SquareMatrix::from_fn(n, |i, j| a[(i, j)] + if (i + j + k) % 3 == 0 { 0.2 } else { 0.0 });
        if perron_frobenius(&bigger, tol)?.value < p.value - 1e-12 {
            fail("monotonicity");
        }
        let perm: Vec<usize> = (0..n).map(|i| (i + 1 + k) % n).collect();
        if (perron_frobenius(&a.permuted(&perm), tol)?.value - p.value).abs() >= 1e-10 {
            fail("permutation");
        }
    }
    Ok(failures)
}

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub values: Vec<Value>,
    /// `ok`, or the failure category.
    pub status: &'static str,
    pub error: Option<String>,
    /// One summary per command, `None` for commands that did not complete.
    pub summaries: Vec<Option<Summary>>,
    pub point_hash: String,
}

fn keys_of(cmd: CommandName) -> &'static [&'static str] {
    match cmd {
        CommandName::Speed => SPEED_KEYS,
        CommandName::Simulate => SIMULATE_KEYS,
        CommandName::Wave => WAVE_KEYS,
        CommandName::Steady => STEADY_KEYS,
        CommandName::Spectra => SPECTRA_KEYS,
        CommandName::Sweep => &[],
    }
}

fn axis_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n
            .as_f64()
            .filter(|_| n.is_f64())
            .map(fmt_f64)
            .unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every grid point, in parallel on a pool of `opts.threads` workers,
/// and aggregates rows in grid order.
pub fn run_sweep(loaded: &LoadedConfig, opts: &RunOptions) -> Result<(Outcome, Vec<PointResult>)> {
    let block = loaded
        .config
        .sweep
        .clone()
        .ok_or_else(|| config_err("the sweep command needs a [sweep] block"))?;
    if block.axes.is_empty() || block.axes.len() > 2 {
        return Err(config_err("a sweep needs one or two axes"));
    }
    if block.commands.is_empty() || block.commands.contains(&CommandName::Sweep) {
        return Err(config_err("sweep commands must be a nonempty list without `sweep`"));
    }
    let axis_points: Vec<Vec<Value>> = block.axes.iter().map(Axis::points).collect::<Result<_>>()?;
    let mut grid: Vec<Vec<Value>> = vec![Vec::new()];
    for pts in &axis_points {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                pts.iter().map(move |p| {
                    let mut row = prefix.clone();
                    row.push(p.clone());
                    row
                })
            })
            .collect();
    }
    let mut base = loaded.raw.clone();
    if let Value::Object(m) = &mut base {
        m.remove("sweep");
    }

    let run_point = |values: &Vec<Value>| -> PointResult {
        let mut doc = base.clone();
        let mut result = PointResult {
            values: values.clone(),
            status: "ok",
            error: None,
            summaries: vec![None; block.commands.len()],
            point_hash: String::new(),
        };
        for (axis, v) in block.axes.iter().zip(values) {
            if let Err(e) = set_path(&mut doc, &axis.path, v.clone()) {
                result.status = status_name(&e);
                result.error = Some(format!("{e:#}"));
                return result;
            }
        }
        result.point_hash = crate::config::config_hash(&doc);
        let point = match LoadedConfig::from_value(doc) {
            Ok(p) => p,
            Err(e) => {
                result.status = status_name(&e);
                result.error = Some(format!("{e:#}"));
                return result;
            }
        };
        for (slot, cmd) in result.summaries.iter_mut().zip(&block.commands) {
            match execute(*cmd, &point, &RunOptions::default()) {
                Ok(o) => *slot = Some(o.summary),
                Err(e) => {
                    result.status = status_name(&e);
                    result.error = Some(format!("{}: {e:#}", cmd.as_str()));
                    break;
                }
            }
        }
        result
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()?;
    let results: Vec<PointResult> = pool.install(|| grid.par_iter().map(run_point).collect());

    let prefixed = block.commands.len() > 1;
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(block.axes.iter().map(|a| a.path.clone()));
    header.extend(["status".into(), "error".into()]);
    for cmd in &block.commands {
        for k in keys_of(*cmd) {
            header.push(if prefixed {
                format!("{}.{k}", cmd.as_str())
            } else {
                k.to_string()
            });
        }
    }
    header.push("point_hash".into());
    let mut table = Table::new(header);
    for (idx, r) in results.iter().enumerate() {
        let mut row = vec![idx.to_string()];
        row.extend(r.values.iter().map(axis_cell));
        row.push(r.status.to_string());
        row.push(r.error.clone().unwrap_or_default());
        for (cmd, sum) in block.commands.iter().zip(&r.summaries) {
            match sum {
                Some(s) => row.extend(s.cells().map(Cell::csv)),
                None => row.extend(keys_of(*cmd).iter().map(|_| String::new())),
            }
        }
        row.push(r.point_hash.clone());
        table.push(row);
    }

    let failed = results.iter().filter(|r| r.status != "ok").count();
    let mut s = Summary::new(&["points", "ok", "failed"]);
    s.set("points", results.len());
    s.set("ok", results.len() - failed);
    s.set("failed", failed);
    let mut out = Outcome::new("sweep", &loaded.hash, s.clone());
    out.lines.push(format!("{} points, {} failed", results.len(), failed));
    for (idx, r) in results.iter().enumerate().filter(|(_, r)| r.status != "ok") {
        out.lines.push(format!(
            "point {idx}: {} ({})",
            r.status,
            r.error.clone().unwrap_or_default()
        ));
    }
    let failures: Vec<Value> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.status != "ok")
        .map(|(i, r)| json!({"point": i, "status": r.status, "error": r.error}))
        .collect();
    out.add_json("sweep.json", json!({"summary": s.to_json(), "failures": failures}))?;
    out.add_csv("sweep.csv", &table)?;
    Ok((out, results))
}

/// Process exit code for an error: 2 hypothesis, 3 convergence, 4 config, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(k) = cause.downcast_ref::<KppError>() {
            return kpp_exit_code(k);
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 4;
        }
    }
    1
}

pub fn kpp_exit_code(err: &KppError) -> i32 {
    match err {
        KppError::HypothesisViolation(_) | KppError::SpeedBelowCritical { .. } => 2,
        KppError::NoConvergence { .. }
        | KppError::SamplingInconclusive(_)
        | KppError::BracketingViolation(_)
        | KppError::PositivityBreach { .. }
        | KppError::InsufficientSamples { .. } => 3,
        KppError::InvalidInput(_)
        | KppError::StabilityBudgetExceeded { .. }
        | KppError::FrontReachedBoundary { .. } => 4,
    }
}

fn status_name(err: &anyhow::Error) -> &'static str {
    match exit_code(err) {
        2 => "hypothesis_violation",
        3 => "no_convergence",
        4 => "config_error",
        _ => "error",
    }
}
