//! IMEX finite-difference integration of the KPP system on a bounded interval
//! with homogeneous Neumann boundaries, plus the diagnostics built on top of
//! it: front tracking, spreading-speed regression, decay and persistence
//! measurements, and comparison with the exponential super-solution.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::banded::Tridiagonal;
use crate::dispersion::{require_supercritical_speed, Symbol};
use crate::error::{KppError, Result};
use crate::matrix::SquareMatrix;
use crate::model::{absorbing_bound, saturation_vector, Model, SaturationData};
use crate::optimize::{expand_positive_bracket, golden_section};
use crate::spectral::{perron_frobenius, DEFAULT_PF_TOL};

/// Values in `[-NEGATIVE_CLAMP, 0)` are roundoff and get clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-13;
/// `dt (‖L‖_∞ + max_i c_i(g)) <= STABILITY_BUDGET`.
pub const STABILITY_BUDGET: f64 = 0.5;

/// Uniform grid of `m` nodes on `[xmin, xmax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub xmin: f64,
    pub xmax: f64,
    pub m: usize,
}

impl Grid1D {
    pub fn new(xmin: f64, xmax: f64, m: usize) -> Result<Self> {
        let g = Self { xmin, xmax, m };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.m < 64 || !(self.xmax > self.xmin) || !self.xmin.is_finite() || !self.xmax.is_finite() {
            return Err(KppError::InvalidInput(format!(
                "grid needs m >= 64 and xmin < xmax, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.xmax - self.xmin) / (self.m - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.xmin + j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.x(j)).collect()
    }

    /// Indices of the nodes inside `[a, b]`.
    pub fn indices_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = ((a - self.xmin) / self.h()).ceil().max(0.0) as usize;
        let hi = (((b - self.xmin) / self.h()).floor() as isize + 1).clamp(0, self.m as isize) as usize;
        lo.min(hi)..hi
    }
}

/// One recorded snapshot summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub t: f64,
    pub front: Option<f64>,
    /// `sup_x u_i`.
    pub sup: Vec<f64>,
    /// `inf_{x ∈ probe} u_i`.
    pub probe_inf: Vec<f64>,
}

/// Solution state `u[i][j] = u_i(t, x_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimState {
    pub grid: Grid1D,
    pub t: f64,
    pub u: Vec<Vec<f64>>,
    pub history: VecDeque<HistoryEntry>,
    pub history_capacity: usize,
}

impl SimState {
    pub fn new(grid: Grid1D, u: Vec<Vec<f64>>) -> Result<Self> {
        grid.check()?;
        if u.is_empty() || u.iter().any(|row| row.len() != grid.m) {
            return Err(KppError::InvalidInput("initial data must be N rows of m values".into()));
        }
        for (i, row) in u.iter().enumerate() {
            if let Some((j, v)) = row.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
                return Err(KppError::PositivityBreach {
                    value: *v,
                    component: i,
                    node: j,
                });
            }
        }
        Ok(Self {
            grid,
            t: 0.0,
            u,
            history: VecDeque::new(),
            history_capacity: 1 << 16,
        })
    }

    pub fn sup(&self) -> Vec<f64> {
        self.u
            .iter()
            .map(|row| row.iter().cloned().fold(0.0, f64::max))
            .collect()
    }

    pub fn inf_on(&self, a: f64, b: f64) -> Vec<f64> {
        let r = self.grid.indices_in(a, b);
        self.u
            .iter()
            .map(|row| row[r.clone()].iter().cloned().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// `sup {x : max_i u_i(x) >= θ}`, linearly interpolated between nodes.
    pub fn right_front(&self, theta: f64) -> Option<f64> {
        let m = self.grid.m;
        let level = |j: usize| self.u.iter().map(|row| row[j]).fold(0.0, f64::max);
        let j = (0..m).rev().find(|&j| level(j) >= theta)?;
        if j + 1 == m {
            return Some(self.grid.x(j));
        }
        let (a, b) = (level(j), level(j + 1));
        Some(self.grid.x(j) + self.grid.h() * (a - theta) / (a - b))
    }

    /// `inf {x : max_i u_i(x) >= θ}`, linearly interpolated between nodes.
    pub fn left_front(&self, theta: f64) -> Option<f64> {
        let level = |j: usize| self.u.iter().map(|row| row[j]).fold(0.0, f64::max);
        let j = (0..self.grid.m).find(|&j| level(j) >= theta)?;
        if j == 0 {
            return Some(self.grid.x(0));
        }
        let (a, b) = (level(j), level(j - 1));
        Some(self.grid.x(j) - self.grid.h() * (a - theta) / (a - b))
    }

    fn push_history(&mut self, entry: HistoryEntry) {
        if self.history.len() == self.history_capacity {
            self.history.pop_front();
        }
        self.history.push_back(entry);
    }
}

/// `v 1_{(-∞, x0)}`.
pub fn front_like(grid: &Grid1D, v: &[f64], x0: f64) -> Vec<Vec<f64>> {
    v.iter()
        .map(|vi| grid.nodes().iter().map(|&x| if x < x0 { *vi } else { 0.0 }).collect())
        .collect()
}

/// `v 1_{[center - halfwidth, center + halfwidth]}`.
pub fn bump(grid: &Grid1D, v: &[f64], center: f64, halfwidth: f64) -> Vec<Vec<f64>> {
    v.iter()
        .map(|vi| {
            grid.nodes()
                .iter()
                .map(|&x| if (x - center).abs() <= halfwidth { *vi } else { 0.0 })
                .collect()
        })
        .collect()
}

/// `v` at every node.
pub fn constant(grid: &Grid1D, v: &[f64]) -> Vec<Vec<f64>> {
    v.iter().map(|vi| vec![*vi; grid.m]).collect()
}

/// Largest stable time step for data bounded by `sup0`.
pub fn max_stable_dt(model: &Model, sat: &SaturationData, sup0: &[f64]) -> f64 {
    let g = absorbing_bound(sat, sup0);
    let cmax = model.competition_at(&g).iter().fold(0.0, |m: f64, c| m.max(*c));
    STABILITY_BUDGET / (model.l().norm_inf() + cmax)
}

/// IMEX Euler integrator: explicit pointwise reaction, then one implicit
/// diffusion solve per component.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a Model,
    grid: Grid1D,
    dt: f64,
    solvers: Vec<Tridiagonal>,
    v: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> Simulator<'a> {
    /// Checks the stability budget for data bounded by `sup0` and factors the
    /// diffusion systems.
    pub fn new(model: &'a Model, grid: Grid1D, dt: f64, sat: &SaturationData, sup0: &[f64]) -> Result<Self> {
        grid.check()?;
        if !(dt > 0.0) {
            return Err(KppError::InvalidInput("dt must be positive".into()));
        }
        let max_dt = max_stable_dt(model, sat, sup0);
        if dt > max_dt {
            return Err(KppError::StabilityBudgetExceeded { dt, max_dt });
        }
        let h = grid.h();
        let m = grid.m;
        let solvers = model
            .d()
            .iter()
            .map(|&d| {
                let r = dt * d / (h * h);
                let mut lower = vec![-r; m];
                let mut upper = vec![-r; m];
                // mirror ghost nodes: u_{-1} = u_1, u_m = u_{m-2}
                upper[0] = -2.0 * r;
                lower[m - 1] = -2.0 * r;
                lower[0] = 0.0;
                upper[m - 1] = 0.0;
                Tridiagonal::new(&lower, &vec![1.0 + 2.0 * r; m], &upper)
            })
            .collect::<Result<_>>()?;
        let n = model.n();
        Ok(Self {
            model,
            grid,
            dt,
            solvers,
            v: vec![0.0; n],
            r: vec![0.0; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        if state.grid != self.grid || state.u.len() != self.model.n() {
            return Err(KppError::InvalidInput("state does not match the simulator grid".into()));
        }
        let n = self.model.n();
        for j in 0..self.grid.m {
            for i in 0..n {
                self.v[i] = state.u[i][j];
            }
            self.model.reaction_into(&self.v, &mut self.r);
            for i in 0..n {
                state.u[i][j] += self.dt * self.r[i];
            }
        }
        for (row, solver) in state.u.iter_mut().zip(&self.solvers) {
            solver.solve_in_place(row);
        }
        for (i, row) in state.u.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                if *x < 0.0 {
                    if *x >= -NEGATIVE_CLAMP {
                        *x = 0.0;
                    } else {
                        return Err(KppError::PositivityBreach {
                            value: *x,
                            component: i,
                            node: j,
                        });
                    }
                } else if !x.is_finite() {
                    return Err(KppError::PositivityBreach {
                        value: *x,
                        component: i,
                        node: j,
                    });
                }
            }
        }
        state.t += self.dt;
        Ok(())
    }
}

/// One IMEX step with the saturation data recomputed from the model.
///
/// Convenient for one-off steps; loops should build a [`Simulator`] once.
pub fn step(model: &Model, state: &mut SimState, dt: f64) -> Result<()> {
    let sat = saturation_vector(model, 8)?;
    Simulator::new(model, state.grid, dt, &sat, &state.sup())?.step(state)
}

/// What [`run`] records and checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Record a history entry every this many steps.
    pub record_every: usize,
    /// Front level `θ`; defaults to `0.01 min_i k_i`.
    pub threshold: Option<f64>,
    pub probe: (f64, f64),
    /// Fraction of front samples discarded before the speed regression.
    pub burn_in_fraction: f64,
    /// Abort once the right front is within this many cells of `xmax`; `0` disables.
    pub boundary_guard_cells: Option<usize>,
    pub track_left_front: bool,
    /// Keep the full solution every this many records.
    pub frame_stride: Option<usize>,
    /// Check `sup_x u_i(T) <= 1.05 k_i` when `T` is at least this.
    pub absorbing_after: Option<f64>,
    pub grid_density: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 0.01,
            record_every: 10,
            threshold: None,
            probe: (-5.0, 5.0),
            burn_in_fraction: 0.25,
            boundary_guard_cells: Some(10),
            track_left_front: false,
            frame_stride: None,
            absorbing_after: None,
            grid_density: 8,
        }
    }
}

/// Front positions `(t, X(t))` and their linear fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrace {
    pub threshold: f64,
    pub samples: Vec<(f64, f64)>,
    pub fit: Option<SpeedFit>,
}

/// Least-squares line through the front samples after burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub intercept: f64,
    /// 95% normal-approximation halfwidth of the slope.
    pub halfwidth: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum number of post-burn-in samples for a speed fit.
pub const MIN_FIT_SAMPLES: usize = 20;

/// Ordinary least squares on `(t, y)` pairs.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<SpeedFit> {
    let n = points.len();
    if n < 3 {
        return Err(KppError::InsufficientSamples { needed: 3, got: n });
    }
    let nf = n as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(KppError::InvalidInput("regression needs distinct times".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(SpeedFit {
        speed: slope,
        intercept,
        halfwidth: 1.96 * se,
        r_squared: if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 },
        window: (points[0].0, points[n - 1].0),
        samples: n,
    })
}

/// Slope of the front trace after discarding the first `burn_in_fraction` of samples.
pub fn measure_spreading_speed(trace: &FrontTrace, burn_in_fraction: f64) -> Result<SpeedFit> {
    let skip = (trace.samples.len() as f64 * burn_in_fraction.clamp(0.0, 1.0)).floor() as usize;
    let kept = &trace.samples[skip.min(trace.samples.len())..];
    if kept.len() < MIN_FIT_SAMPLES {
        return Err(KppError::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: kept.len(),
        });
    }
    linear_fit(kept)
}

/// Slope of `ln max_i sup_x u_i` against `t` over the recorded history in `[t0, t1]`.
pub fn log_sup_slope(history: &VecDeque<HistoryEntry>, t0: f64, t1: f64) -> Result<SpeedFit> {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .filter(|e| e.t >= t0 - 1e-12 && e.t <= t1 + 1e-12)
        .filter_map(|e| {
            let s = e.sup.iter().cloned().fold(0.0, f64::max);
            (s > 0.0).then(|| (e.t, s.ln()))
        })
        .collect();
    linear_fit(&pts)
}

/// Outcome of the absorbing-set check at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingCheck {
    pub k: Vec<f64>,
    pub final_sup: Vec<f64>,
    pub holds: bool,
}

/// Full solution at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub u: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub state: SimState,
    pub right: FrontTrace,
    pub left: Option<FrontTrace>,
    /// `max_t sup_x u_i(t)` over every step.
    pub sup_envelope: Vec<f64>,
    /// `g(sup u_0)`, the bound the envelope must respect.
    pub absorbing_bound: Vec<f64>,
    pub absorbing: Option<AbsorbingCheck>,
    pub frames: Vec<Frame>,
    pub saturation: SaturationData,
    pub steps: usize,
}

/// Integrates from `initial` to `cfg.t_end`, tracking fronts and bounds.
pub fn run(model: &Model, grid: Grid1D, initial: Vec<Vec<f64>>, cfg: &RunConfig) -> Result<RunReport> {
    model.require_valid()?;
    let sat = saturation_vector(model, cfg.grid_density)?;
    run_with_saturation(model, grid, initial, cfg, sat)
}

/// [`run`] with precomputed saturation data.
pub fn run_with_saturation(
    model: &Model,
    grid: Grid1D,
    initial: Vec<Vec<f64>>,
    cfg: &RunConfig,
    sat: SaturationData,
) -> Result<RunReport> {
    if initial.len() != model.n() {
        return Err(KppError::InvalidInput(
            "initial data has the wrong number of components".into(),
        ));
    }
    if !(cfg.t_end > 0.0) || cfg.record_every == 0 {
        return Err(KppError::InvalidInput("need t_end > 0 and record_every >= 1".into()));
    }
    let mut state = SimState::new(grid, initial)?;
    let sup0 = state.sup();
    let mut sim = Simulator::new(model, grid, cfg.dt, &sat, &sup0)?;
    let theta = cfg
        .threshold
        .unwrap_or_else(|| 0.01 * sat.k.iter().cloned().fold(f64::INFINITY, f64::min));
    let guard = cfg.boundary_guard_cells.map(|c| grid.xmax - c as f64 * grid.h());
    let steps = (cfg.t_end / cfg.dt).round() as usize;

    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut frames = Vec::new();
    let mut envelope = sup0.clone();
    let mut records = 0usize;
    let mut record = |state: &mut SimState, right: &mut Vec<(f64, f64)>, left: &mut Vec<(f64, f64)>| -> Result<()> {
        let front = state.right_front(theta);
        if let (Some(x), Some(g)) = (front, guard) {
            if x > g {
                return Err(KppError::FrontReachedBoundary { t: state.t, x });
            }
        }
        if let Some(x) = front {
            right.push((state.t, x));
        }
        if cfg.track_left_front {
            if let Some(x) = state.left_front(theta) {
                left.push((state.t, x));
            }
        }
        if let Some(stride) = cfg.frame_stride {
            if records.is_multiple_of(stride.max(1)) {
                frames.push(Frame {
                    t: state.t,
                    u: state.u.clone(),
                });
            }
        }
        records += 1;
        let entry = HistoryEntry {
            t: state.t,
            front,
            sup: state.sup(),
            probe_inf: state.inf_on(cfg.probe.0, cfg.probe.1),
        };
        state.push_history(entry);
        Ok(())
    };
    record(&mut state, &mut right, &mut left)?;
    for k in 1..=steps {
        sim.step(&mut state)?;
        for (e, s) in envelope.iter_mut().zip(state.sup()) {
            *e = e.max(s);
        }
        if k % cfg.record_every == 0 || k == steps {
            record(&mut state, &mut right, &mut left)?;
        }
    }

    let fit = |samples: Vec<(f64, f64)>| {
        let mut trace = FrontTrace {
            threshold: theta,
            samples,
            fit: None,
        };
        trace.fit = measure_spreading_speed(&trace, cfg.burn_in_fraction).ok();
        trace
    };
    let absorbing = cfg.absorbing_after.filter(|t| state.t >= *t - 0.5 * cfg.dt).map(|_| {
        let final_sup = state.sup();
        AbsorbingCheck {
            holds: final_sup.iter().zip(&sat.k).all(|(s, k)| *s <= 1.05 * k),
            k: sat.k.clone(),
            final_sup,
        }
    });
    Ok(RunReport {
        right: fit(right),
        left: cfg.track_left_front.then(|| fit(left)),
        sup_envelope: envelope,
        absorbing_bound: absorbing_bound(&sat, &sup0),
        absorbing,
        frames,
        saturation: sat,
        steps,
        state,
    })
}

/// Per-step amplification of `e^{-μx} n` under the linearized IMEX scheme:
/// `G(μ) = (I - dt s(μ) D)^{-1} (I + dt L)` with the grid symbol `s`.
pub fn scheme_amplification(model: &Model, mu: f64, h: f64, dt: f64) -> Result<SquareMatrix> {
    let s = Symbol::Grid { h }.second(mu);
    let mut g = model.l().scaled(dt).shifted(1.0);
    for (i, d) in model.d().iter().enumerate() {
        let denom = 1.0 - dt * d * s;
        if !(denom > 0.0) {
            return Err(KppError::InvalidInput(format!(
                "decay rate {mu} too steep for the implicit diffusion step"
            )));
        }
        for j in 0..model.n() {
            g[(i, j)] /= denom;
        }
    }
    Ok(g)
}

/// Speed of `e^{-μx} n` under the linearized scheme: `ln ρ(G(μ)) / (μ dt)`.
pub fn scheme_speed(model: &Model, mu: f64, h: f64, dt: f64) -> Result<f64> {
    let g = scheme_amplification(model, mu, h, dt)?;
    Ok(perron_frobenius(&g, DEFAULT_PF_TOL)?.value.ln() / (mu * dt))
}

/// Minimal speed of the linearized scheme and its decay rate.
pub fn scheme_minimal_speed(model: &Model, h: f64, dt: f64) -> Result<(f64, f64)> {
    require_supercritical_speed(model)?;
    let dmax = model.d().iter().cloned().fold(0.0, f64::max);
    // keep 1 - dt d s(μ) > 0 inside the search interval
    let mu_cap = (1.0 + 0.45 * h * h / (dt * dmax)).acosh() / h;
    let f = |mu: f64| scheme_speed(model, mu.min(mu_cap), h, dt);
    let (a, b) = expand_positive_bracket(f, 1e-3, 10f64.min(mu_cap), 4.0, 60)?;
    let m = golden_section(f, a, b, 1e-10)?;
    Ok((m.fx, m.x))
}

/// The discrete super-solution `w_i(t, x) = e^{-μ (x - c_h t - ξ)} n_i` of the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperSolution {
    pub mu: f64,
    pub speed: f64,
    pub shift: f64,
    pub n: Vec<f64>,
}

impl SuperSolution {
    /// Smallest shift `ξ` making `w(0, ·)` dominate `initial`.
    pub fn fit(model: &Model, grid: &Grid1D, dt: f64, mu: f64, initial: &[Vec<f64>]) -> Result<Self> {
        let g = scheme_amplification(model, mu, grid.h(), dt)?;
        let pair = perron_frobenius(&g, DEFAULT_PF_TOL)?;
        let speed = pair.value.ln() / (mu * dt);
        let mut shift = f64::NEG_INFINITY;
        for (row, ni) in initial.iter().zip(&pair.vector) {
            for (j, u) in row.iter().enumerate() {
                if *u > 0.0 {
                    shift = shift.max(grid.x(j) + (u / ni).ln() / mu);
                }
            }
        }
        Ok(Self {
            mu,
            speed,
            shift,
            n: pair.vector,
        })
    }

    pub fn value(&self, i: usize, t: f64, x: f64) -> f64 {
        (-self.mu * (x - self.speed * t - self.shift)).exp() * self.n[i]
    }

    /// `max_{i,j} (u_i - w_i) / w_i` over a frame; nonpositive when dominated.
    pub fn excess(&self, grid: &Grid1D, frame: &Frame) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (i, row) in frame.u.iter().enumerate() {
            for (j, u) in row.iter().enumerate() {
                let w = self.value(i, frame.t, grid.x(j));
                if w.is_finite() && w > 0.0 {
                    worst = worst.max((u - w) / w);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (0..40).map(|k| (k as f64, 2.0 * k as f64 + 3.0)).collect();
        let trace = FrontTrace {
            threshold: 0.1,
            samples: pts,
            fit: None,
        };
        let fit = measure_spreading_speed(&trace, 0.25).unwrap();
        assert!((fit.speed - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let trace = FrontTrace {
            threshold: 0.1,
            samples: (0..10).map(|k| (k as f64, k as f64)).collect(),
            fit: None,
        };
        assert!(matches!(
            measure_spreading_speed(&trace, 0.25),
            Err(KppError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn grid_indices() {
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let r = g.indices_in(-5.0, 5.0);
        assert_eq!((r.start, r.end), (50, 151));
        assert!(Grid1D::new(0.0, 1.0, 10).is_err());
    }
}
