//! Traveling-wave profiles `-D p'' - c p' = L p - c(p) ∘ p` for `c > c*`.
//!
//! For `c > c*` the dispersion relation has two roots `0 < μ₁ < μ₂`. The
//! exponential `p̄(ξ) = e^{-μ₁ξ} n_{μ₁}` is a super-solution, and
//! `p̲ = max(p̄ - A_ε e^{-(μ₁+ε)ξ} n_{μ₁+ε}, 0)` is a sub-solution. The
//! truncated problem on `(-R, R)` with `p(±R) = p̲(±R)` is solved by damped
//! Newton with a Picard fallback, and the result is checked against the pair.
//!
//! The envelope used by the solver is built from the grid dispersion symbol
//! (see [`Symbol::Grid`]), so that it brackets the discrete solution exactly
//! rather than up to the `O(h²)` discretization error.

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::dispersion::{critical_pair, kappa_pair, mu_roots_with, require_supercritical_speed, MuRoots, Symbol};
use crate::error::{KppError, Result};
use crate::matrix::SquareMatrix;
use crate::model::{CompetitionField, Model};

/// Default solver tolerance on the discrete sup-norm residual.
pub const DEFAULT_WAVE_TOL: f64 = 1e-10;

/// Super- and sub-solution pair for one speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveEnvelope {
    pub c: f64,
    pub symbol: Symbol,
    pub mu1: f64,
    pub mu2: f64,
    pub eps: f64,
    pub eps_bar: f64,
    pub a_eps: f64,
    /// `M_i = sup_{α ∈ (0,1)} c_i(α n_{μ₁}) / α`.
    pub m: Vec<f64>,
    pub n_mu1: Vec<f64>,
    pub n_mu1_eps: Vec<f64>,
}

impl WaveEnvelope {
    /// `p̄(ξ) = e^{-μ₁ξ} n_{μ₁}`.
    pub fn sup(&self, xi: f64) -> Vec<f64> {
        let e = (-self.mu1 * xi).exp();
        self.n_mu1.iter().map(|n| e * n).collect()
    }

    /// `p̲(ξ) = max(e^{-μ₁ξ} n_{μ₁} - A_ε e^{-(μ₁+ε)ξ} n_{μ₁+ε}, 0)`.
    pub fn sub(&self, xi: f64) -> Vec<f64> {
        let e1 = (-self.mu1 * xi).exp();
        let e2 = self.a_eps * (-(self.mu1 + self.eps) * xi).exp();
        self.n_mu1
            .iter()
            .zip(&self.n_mu1_eps)
            .map(|(a, b)| (e1 * a - e2 * b).max(0.0))
            .collect()
    }

    /// Largest `ξ` at which a component of `p̲` switches on.
    pub fn crossing_point(&self) -> f64 {
        self.n_mu1
            .iter()
            .zip(&self.n_mu1_eps)
            .map(|(a, b)| (self.a_eps * b / a).ln() / self.eps)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `e^{-μ₁ξ} n_{μ₁}` for the continuous dispersion relation.
pub fn super_solution(model: &Model, c: f64, xi: f64) -> Result<Vec<f64>> {
    let (mu1, _) = roots(model, c, Symbol::Continuous)?;
    let n = kappa_pair(model, mu1, Symbol::Continuous)?.vector;
    Ok(n.iter().map(|v| v * (-mu1 * xi).exp()).collect())
}

fn roots(model: &Model, c: f64, symbol: Symbol) -> Result<(f64, f64)> {
    match mu_roots_with(model, c, symbol)? {
        MuRoots::Pair(a, b) => Ok((a, b)),
        _ => Err(KppError::SpeedBelowCritical {
            speed: c,
            c_star: critical_pair(model, symbol)?.0,
        }),
    }
}

/// Envelope for the continuous problem.
pub fn build_envelope(model: &Model, c: f64, eps: Option<f64>) -> Result<WaveEnvelope> {
    build_envelope_with(model, c, eps, Symbol::Continuous)
}

/// Envelope for the central-difference problem on a grid of step `h`.
pub fn build_grid_envelope(model: &Model, c: f64, eps: Option<f64>, h: f64) -> Result<WaveEnvelope> {
    build_envelope_with(model, c, eps, Symbol::Grid { h })
}

fn build_envelope_with(model: &Model, c: f64, eps: Option<f64>, symbol: Symbol) -> Result<WaveEnvelope> {
    require_supercritical_speed(model)?;
    let (mu1, mu2) = roots(model, c, symbol)?;
    let eps_bar = (mu2 - mu1).min(mu1);
    let eps = eps.unwrap_or(0.5 * eps_bar);
    if !(eps > 0.0 && eps < eps_bar) {
        return Err(KppError::InvalidInput(format!(
            "ε must lie in (0, {eps_bar}), got {eps}"
        )));
    }
    let p1 = kappa_pair(model, mu1, symbol)?;
    let p2 = kappa_pair(model, mu1 + eps, symbol)?;
    let m = competition_slopes(model.competition(), &p1.vector)?;
    // c - (speed at μ₁+ε), times the drift symbol: the gap of the linear operator on e^{-(μ₁+ε)ξ}
    let gap = c * symbol.first(mu1 + eps) - p2.value;
    let mut a_eps: f64 = 0.0;
    for i in 0..model.n() {
        let ratio = p2.vector[i] / p1.vector[i];
        let growth = m[i] * p1.vector[i] / (gap * p2.vector[i]);
        a_eps = a_eps.max(ratio.max(growth));
    }
    Ok(WaveEnvelope {
        c,
        symbol,
        mu1,
        mu2,
        eps,
        eps_bar,
        a_eps,
        m,
        n_mu1: p1.vector,
        n_mu1_eps: p2.vector,
    })
}

fn competition_slopes(comp: &CompetitionField, n: &[f64]) -> Result<Vec<f64>> {
    match comp {
        CompetitionField::LotkaVolterra { c } => Ok(c.matvec(n)),
        CompetitionField::GrossPitaevskii { c } => {
            let sq: Vec<f64> = n.iter().map(|x| x * x).collect();
            Ok(c.matvec(&sq))
        }
        CompetitionField::Custom(_) => {
            let sample = |count: usize| -> Vec<f64> {
                let mut best = vec![0.0f64; n.len()];
                for k in 1..count {
                    let a = k as f64 / count as f64;
                    let v: Vec<f64> = n.iter().map(|x| a * x).collect();
                    for (b, ci) in best.iter_mut().zip(comp.eval(&v)) {
                        *b = b.max(ci / a);
                    }
                }
                best
            };
            let coarse = sample(1000);
            let fine = sample(2000);
            for (a, b) in coarse.iter().zip(&fine) {
                if (a - b).abs() > 1e-3 * b.abs().max(1e-12) {
                    return Err(KppError::SamplingInconclusive(
                        "competition slope sup_α c_i(α n)/α did not settle under refinement".into(),
                    ));
                }
            }
            Ok(fine)
        }
    }
}

/// How a profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Newton,
    PicardThenNewton,
}

/// A discrete wave profile on `ξ_j = -R + j h`, `j = 0..m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveProfile {
    pub c: f64,
    pub radius: f64,
    pub xi: Vec<f64>,
    /// `p[i][j] = p_i(ξ_j)`, boundary values included.
    pub p: Vec<Vec<f64>>,
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

impl WaveProfile {
    pub fn h(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }

    pub fn at(&self, j: usize) -> Vec<f64> {
        self.p.iter().map(|row| row[j]).collect()
    }
}

/// Radius with `e^{-μ₁R} = 1e-10`.
pub fn default_radius(mu1: f64) -> f64 {
    1e10f64.ln() / mu1
}

/// Grid size keeping the cell Péclet number `c h / min d` at most 1 and `h <= 0.05`.
pub fn default_grid_size(model: &Model, c: f64, radius: f64) -> usize {
    let dmin = model.d().iter().cloned().fold(f64::INFINITY, f64::min);
    let h = 0.05f64.min(dmin / c.max(1e-12));
    ((2.0 * radius / h).ceil() as usize + 1).max(201)
}

/// Sup-norm of the central-difference residual at interior nodes.
pub fn discrete_residual(model: &Model, c: f64, xi: &[f64], p: &[Vec<f64>]) -> f64 {
    let n = model.n();
    let m = xi.len();
    let h = xi[1] - xi[0];
    let flat: Vec<f64> = (0..m).flat_map(|j| p.iter().map(move |row| row[j])).collect();
    let f = bvp_residual(model, c, h, &flat[..n], &flat[(m - 1) * n..], &flat[n..(m - 1) * n]);
    f.iter().fold(0.0, |a, b| a.max(b.abs()))
}

// Residual at interior nodes of the interleaved vector x (index j*n + i).
fn bvp_residual(model: &Model, c: f64, h: f64, left: &[f64], right: &[f64], x: &[f64]) -> Vec<f64> {
    let n = model.n();
    let mi = x.len() / n;
    let d = model.d();
    let mut out = vec![0.0; x.len()];
    let mut react = vec![0.0; n];
    for j in 0..mi {
        let cur = &x[j * n..(j + 1) * n];
        let prev = if j == 0 { left } else { &x[(j - 1) * n..j * n] };
        let next = if j + 1 == mi {
            right
        } else {
            &x[(j + 1) * n..(j + 2) * n]
        };
        model.reaction_into(cur, &mut react);
        for i in 0..n {
            out[j * n + i] =
                -d[i] * (next[i] - 2.0 * cur[i] + prev[i]) / (h * h) - c * (next[i] - prev[i]) / (2.0 * h) - react[i];
        }
    }
    out
}

fn assemble(model: &Model, c: f64, h: f64, mi: usize, diag_block: impl Fn(usize) -> SquareMatrix) -> BandedMatrix {
    let n = model.n();
    let d = model.d();
    let mut a = BandedMatrix::zeros(n * mi, n, n);
    for j in 0..mi {
        let block = diag_block(j);
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                a.add(row, j * n + k, block[(i, k)]);
            }
            a.add(row, row, 2.0 * d[i] / (h * h));
            if j + 1 < mi {
                a.add(row, (j + 1) * n + i, -d[i] / (h * h) - c / (2.0 * h));
            }
            if j > 0 {
                a.add(row, (j - 1) * n + i, -d[i] / (h * h) + c / (2.0 * h));
            }
        }
    }
    a
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

struct BvpOutcome {
    x: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

fn newton(
    model: &Model,
    c: f64,
    h: f64,
    left: &[f64],
    right: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<BvpOutcome> {
    let n = model.n();
    let mi = x.len() / n;
    let mut f = bvp_residual(model, c, h, left, right, &x);
    let mut res = sup_norm(&f);
    let mut merit: f64 = f.iter().map(|v| v * v).sum();
    for it in 0..max_iter {
        if res <= tol {
            return Ok(BvpOutcome {
                x,
                residual: res,
                iterations: it,
                converged: true,
            });
        }
        let jac = assemble(model, c, h, mi, |j| {
            model.reaction_jacobian(&x[j * n..(j + 1) * n]).scaled(-1.0)
        });
        let step = jac.factor()?.solve(&f);
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-10 {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let fc = bvp_residual(model, c, h, left, right, &cand);
            let mc: f64 = fc.iter().map(|v| v * v).sum();
            if mc.is_finite() && mc <= (1.0 - 1e-4 * t) * merit {
                x = cand;
                f = fc;
                merit = mc;
                res = sup_norm(&f);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(BvpOutcome {
                x,
                residual: res,
                iterations: it,
                converged: res <= tol,
            });
        }
    }
    Ok(BvpOutcome {
        x,
        residual: res,
        iterations: max_iter,
        converged: res <= tol,
    })
}

// Relaxed iteration of v ↦ solution of -Dp'' - cp' - Lp + c(v)∘p = 0.
fn picard(
    model: &Model,
    c: f64,
    h: f64,
    left: &[f64],
    right: &[f64],
    mut x: Vec<f64>,
    target: f64,
    max_iter: usize,
) -> Result<BvpOutcome> {
    let n = model.n();
    let mi = x.len() / n;
    let d = model.d();
    let l = model.l();
    let mut res = sup_norm(&bvp_residual(model, c, h, left, right, &x));
    for it in 0..max_iter {
        if res <= target {
            return Ok(BvpOutcome {
                x,
                residual: res,
                iterations: it,
                converged: true,
            });
        }
        let a = assemble(model, c, h, mi, |j| {
            let cv = model.competition_at(&x[j * n..(j + 1) * n]);
            l.scaled(-1.0).plus_diag(&cv)
        });
        let mut rhs = vec![0.0; x.len()];
        for i in 0..n {
            rhs[i] += (d[i] / (h * h) - c / (2.0 * h)) * left[i];
            rhs[(mi - 1) * n + i] += (d[i] / (h * h) + c / (2.0 * h)) * right[i];
        }
        let next = a.factor()?.solve(&rhs);
        for (xv, nv) in x.iter_mut().zip(&next) {
            *xv = 0.5 * (*xv + nv);
        }
        res = sup_norm(&bvp_residual(model, c, h, left, right, &x));
    }
    Ok(BvpOutcome {
        x,
        residual: res,
        iterations: max_iter,
        converged: res <= target,
    })
}

/// Solver knobs for the truncated problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSolveOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub max_picard: usize,
    /// Residual at which the Picard fallback hands over to Newton.
    pub picard_handover: f64,
}

impl Default for WaveSolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_WAVE_TOL,
            max_newton: 100,
            max_picard: 5000,
            picard_handover: 1e-4,
        }
    }
}

fn require_monotone_competition(model: &Model) -> Result<()> {
    match model.competition().monotone_on_cone() {
        Some(true) => Ok(()),
        Some(false) => Err(KppError::HypothesisViolation(
            "wave existence needs Dc(v) >= 0 on the cone; the competition matrix has a negative entry".into(),
        )),
        None => {
            let n = model.n();
            for k in 0..64 {
                let v: Vec<f64> = (0..n).map(|i| (((k * (i + 3)) % 17) as f64 + 0.5) / 8.0).collect();
                if model.competition().jacobian(&v).as_slice().iter().any(|x| *x < -1e-8) {
                    return Err(KppError::HypothesisViolation(format!(
                        "wave existence needs Dc(v) >= 0 on the cone; violated at v = {v:?}"
                    )));
                }
            }
            Ok(())
        }
    }
}

fn solve_bvp(
    model: &Model,
    c: f64,
    radius: f64,
    m: usize,
    left: &[f64],
    right: &[f64],
    initial: Vec<Vec<f64>>,
    opts: &WaveSolveOptions,
) -> Result<WaveProfile> {
    let n = model.n();
    if m < 16 || initial.len() != n || initial.iter().any(|r| r.len() != m) {
        return Err(KppError::InvalidInput(
            "initial iterate must be N rows of m >= 16 values".into(),
        ));
    }
    let h = 2.0 * radius / (m - 1) as f64;
    let x0: Vec<f64> = (1..m - 1).flat_map(|j| initial.iter().map(move |row| row[j])).collect();
    let mut out = newton(model, c, h, left, right, x0.clone(), opts.tol, opts.max_newton)?;
    let mut method = SolveMethod::Newton;
    let mut iterations = out.iterations;
    if !out.converged {
        let pic = picard(model, c, h, left, right, x0, opts.picard_handover, opts.max_picard)?;
        iterations = out.iterations + pic.iterations;
        out = newton(model, c, h, left, right, pic.x, opts.tol, opts.max_newton)?;
        iterations += out.iterations;
        method = SolveMethod::PicardThenNewton;
    }
    if !out.converged {
        return Err(KppError::NoConvergence {
            method: "wave Newton with Picard fallback",
            iterations,
            residual: out.residual,
        });
    }
    let mut p = vec![vec![0.0; m]; n];
    for i in 0..n {
        p[i][0] = left[i];
        p[i][m - 1] = right[i];
        for j in 1..m - 1 {
            p[i][j] = out.x[(j - 1) * n + i];
        }
    }
    Ok(WaveProfile {
        c,
        radius,
        xi: (0..m).map(|j| -radius + j as f64 * h).collect(),
        p,
        residual: out.residual,
        iterations,
        method,
    })
}

/// Solves the truncated problem on `(-R, R)` with `m` nodes and boundary data
/// `p(±R) = p̲(±R)`, starting from `p̲`, and checks `p̲ <= p <= p̄` at every node.
pub fn solve_truncated(
    model: &Model,
    c: f64,
    radius: f64,
    m: usize,
    envelope: &WaveEnvelope,
    opts: &WaveSolveOptions,
) -> Result<WaveProfile> {
    require_supercritical_speed(model)?;
    require_monotone_competition(model)?;
    if (envelope.c - c).abs() > 1e-12 * c.abs().max(1.0) {
        return Err(KppError::InvalidInput("envelope was built for another speed".into()));
    }
    let h = 2.0 * radius / (m - 1) as f64;
    let dmin = model.d().iter().cloned().fold(f64::INFINITY, f64::min);
    if c * h / dmin >= 2.0 {
        return Err(KppError::InvalidInput(format!(
            "cell Péclet number {} >= 2; use more grid points",
            c * h / dmin
        )));
    }
    let xi: Vec<f64> = (0..m).map(|j| -radius + j as f64 * h).collect();
    let subs: Vec<Vec<f64>> = xi.iter().map(|x| envelope.sub(*x)).collect();
    let initial: Vec<Vec<f64>> = (0..model.n()).map(|i| subs.iter().map(|s| s[i]).collect()).collect();
    let profile = solve_bvp(model, c, radius, m, &subs[0], &subs[m - 1], initial, opts)?;
    check_bracket(&profile, envelope)?;
    Ok(profile)
}

/// Verifies `p̲ <= p <= p̄` at every node, up to roundoff.
pub fn check_bracket(profile: &WaveProfile, envelope: &WaveEnvelope) -> Result<()> {
    for (j, x) in profile.xi.iter().enumerate() {
        let (lo, hi) = (envelope.sub(*x), envelope.sup(*x));
        for (i, row) in profile.p.iter().enumerate() {
            let v = row[j];
            let slack = 1e-9 * hi[i].min(1.0) + 1e-14;
            if v < lo[i] - slack || v > hi[i] + slack {
                return Err(KppError::BracketingViolation(format!(
                    "component {i} at ξ = {x}: {} <= {v} <= {} fails",
                    lo[i], hi[i]
                )));
            }
        }
    }
    Ok(())
}

/// Builds the grid envelope, picks default `R` and `m` when absent, and solves.
pub fn solve_wave(
    model: &Model,
    c: f64,
    radius: Option<f64>,
    m: Option<usize>,
    opts: &WaveSolveOptions,
) -> Result<(WaveProfile, WaveEnvelope)> {
    require_supercritical_speed(model)?;
    let (mu1, _) = roots(model, c, Symbol::Continuous)?;
    let radius = radius.unwrap_or_else(|| default_radius(mu1));
    let m = m.unwrap_or_else(|| default_grid_size(model, c, radius));
    let h = 2.0 * radius / (m - 1) as f64;
    let env = build_grid_envelope(model, c, None, h)?;
    let profile = solve_truncated(model, c, radius, m, &env, opts)?;
    Ok((profile, env))
}

/// Solves the truncated problem with arbitrary boundary data and initial
/// iterate, with no envelope and no speed restriction. Used to probe speeds
/// below `c*`, where no wave exists.
pub fn attempt_wave(
    model: &Model,
    c: f64,
    radius: f64,
    left: &[f64],
    right: &[f64],
    initial: Vec<Vec<f64>>,
    opts: &WaveSolveOptions,
) -> Result<WaveProfile> {
    let m = initial.first().map_or(0, |r| r.len());
    solve_bvp(model, c, radius, m, left, right, initial, opts)
}

/// Whether a profile looks like a front: nonnegative, each component at least
/// 1% of its maximum at the back, and dropping below `θ` well inside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveShape {
    pub nonnegative: bool,
    pub back_positive: bool,
    /// Last `ξ` with `max_i p_i >= θ`.
    pub front: Option<f64>,
    /// `(R - front) / (2R)`.
    pub front_clearance: f64,
    pub is_wave: bool,
}

/// Required clearance between the front and the right end, as a fraction of the domain.
pub const FRONT_CLEARANCE: f64 = 0.1;

pub fn wave_shape(profile: &WaveProfile, theta: f64) -> WaveShape {
    let m = profile.xi.len();
    let scale = profile
        .p
        .iter()
        .flatten()
        .fold(0.0f64, |a, b| a.max(b.abs()))
        .max(1e-300);
    let nonnegative = profile.p.iter().flatten().all(|v| *v >= -1e-9 * scale);
    let back = (m / 10).max(1);
    // skip the left boundary layer: look at the second tenth of the domain.
    // Relative per component, since a steady state may have a component below θ.
    let back_positive = profile.p.iter().all(|row| {
        let top = row.iter().cloned().fold(0.0f64, f64::max);
        top > 0.0 && row[back..2 * back].iter().all(|v| *v >= 0.01 * top)
    });
    let level = |j: usize| profile.p.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max);
    let front = (0..m).rev().find(|&j| level(j) >= theta).map(|j| profile.xi[j]);
    let front_clearance = front.map_or(0.0, |f| (profile.radius - f) / (2.0 * profile.radius));
    WaveShape {
        nonnegative,
        back_positive,
        front,
        front_clearance,
        is_wave: nonnegative && back_positive && front_clearance >= FRONT_CLEARANCE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// High state on the left, null state on the right.
    Wave,
    /// Limits swapped.
    Reflected,
    /// Essentially constant.
    NotAWave,
}

/// Diagnostics of a solved profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveDiagnostics {
    pub orientation: Orientation,
    /// `p <= k` componentwise (up to roundoff).
    pub bounded_by_saturation: bool,
    /// `ξ` beyond which every component is strictly decreasing.
    pub tail_start: Option<f64>,
    /// Every component decreases once `max_i p_i` is below `θ`.
    pub decreasing_tail: bool,
    /// `min_i` over the leftmost 10% (after the boundary layer) of `p_i`.
    pub back_floor: f64,
    /// `back_floor / min_i p*_i` when a steady state is supplied.
    pub back_floor_ratio: Option<f64>,
    /// Fitted decay rate of each component on the right tail.
    pub tail_rates: Vec<f64>,
    /// `max_i |rate_i - μ₁| / μ₁`.
    pub tail_rate_error: f64,
}

/// Orientation, boundedness, tail monotonicity, back floor and tail decay rate.
pub fn wave_diagnostics(profile: &WaveProfile, k: &[f64], mu1: f64, steady: Option<&[f64]>) -> WaveDiagnostics {
    let m = profile.xi.len();
    let n = profile.p.len();
    let tenth = (m / 10).max(1);
    let mean = |range: std::ops::Range<usize>| -> f64 {
        let len = range.len() as f64;
        profile
            .p
            .iter()
            .map(|row| row[range.clone()].iter().sum::<f64>())
            .sum::<f64>()
            / len
    };
    let (back_mean, front_mean) = (mean(tenth..2 * tenth), mean(m - tenth..m));
    let spread = profile
        .p
        .iter()
        .map(|row| {
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max);
    let scale = back_mean.abs().max(front_mean.abs()).max(1e-300);
    let orientation = if spread <= 1e-8 * scale {
        Orientation::NotAWave
    } else if back_mean > front_mean {
        Orientation::Wave
    } else {
        Orientation::Reflected
    };

    let bounded_by_saturation = profile
        .p
        .iter()
        .zip(k)
        .all(|(row, ki)| row.iter().all(|v| *v <= ki * (1.0 + 1e-12)));

    let decreasing_from = |j: usize| profile.p.iter().all(|row| row[j + 1] < row[j]);
    let tail_idx = if orientation == Orientation::NotAWave {
        None
    } else {
        let mut j = m - 1;
        while j > 0 && decreasing_from(j - 1) {
            j -= 1;
        }
        (j < m - 1).then_some(j)
    };
    let theta = 0.01 * k.iter().cloned().fold(f64::INFINITY, f64::min);
    let level = |j: usize| profile.p.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max);
    let below_theta = (0..m).find(|&j| j > tenth && level(j) < theta);
    let decreasing_tail = match (tail_idx, below_theta) {
        (Some(t), Some(b)) => t <= b,
        _ => false,
    };

    let back_floor = profile
        .p
        .iter()
        .map(|row| row[tenth..2 * tenth].iter().cloned().fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    let back_floor_ratio = steady.map(|s| back_floor / s.iter().cloned().fold(f64::INFINITY, f64::min));

    // decay fit on the part of the tail where every component is below 1e-3 θ,
    // stopping 5% short of the right end
    let start = (0..m).find(|&j| j > tenth && level(j) < 1e-3 * theta).unwrap_or(m);
    let stop = m - (m / 20).max(2);
    let tail_rates: Vec<f64> = (0..n)
        .map(|i| {
            let pts: Vec<(f64, f64)> = (start..stop)
                .filter(|&j| profile.p[i][j] > 0.0)
                .map(|j| (profile.xi[j], profile.p[i][j].ln()))
                .collect();
            crate::simulate::linear_fit(&pts).map(|f| -f.speed).unwrap_or(f64::NAN)
        })
        .collect();
    let tail_rate_error = tail_rates
        .iter()
        .map(|r| ((r - mu1) / mu1).abs())
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });

    WaveDiagnostics {
        orientation,
        bounded_by_saturation,
        tail_start: tail_idx.map(|j| profile.xi[j]),
        decreasing_tail,
        back_floor,
        back_floor_ratio,
        tail_rates,
        tail_rate_error,
    }
}

/// Result of trying to connect the steady state to zero at a given speed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedProbe {
    pub c: f64,
    pub radius: f64,
    pub grid_size: usize,
    pub theta: f64,
    /// `None` when the solver did not converge.
    pub shape: Option<WaveShape>,
    pub residual: Option<f64>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub profile: Option<WaveProfile>,
}

impl SpeedProbe {
    /// A converged solution that passes the shape test.
    pub fn found_wave(&self) -> bool {
        self.shape.as_ref().is_some_and(|s| s.is_wave)
    }
}

/// Solves the truncated problem at any `c` with the positive steady state on
/// the left, zero on the right and a `tanh` initial iterate, then applies
/// [`wave_shape`]. Defaults: `R = 2 ln(1e10) / μ_{c*}` and the usual grid.
pub fn probe_speed(
    model: &Model,
    c: f64,
    radius: Option<f64>,
    m: Option<usize>,
    opts: &WaveSolveOptions,
) -> Result<SpeedProbe> {
    require_supercritical_speed(model)?;
    let (_, mu_star) = critical_pair(model, Symbol::Continuous)?;
    let radius = radius.unwrap_or_else(|| 2.0 * default_radius(mu_star));
    let m = m.unwrap_or_else(|| default_grid_size(model, c, radius));
    let steady = crate::steady::find_constant_steady(model, 1e-13)?;
    let k = crate::model::saturation_vector(model, 8)?.k;
    let theta = 0.01 * k.iter().cloned().fold(f64::INFINITY, f64::min);
    let h = 2.0 * radius / (m - 1) as f64;
    let initial: Vec<Vec<f64>> = steady
        .v
        .iter()
        .map(|v| {
            (0..m)
                .map(|j| v * 0.5 * (1.0 - (-radius + j as f64 * h).tanh()))
                .collect()
        })
        .collect();
    let zero = vec![0.0; model.n()];
    let (shape, residual, failure, profile) = match attempt_wave(model, c, radius, &steady.v, &zero, initial, opts) {
        Ok(p) => (Some(wave_shape(&p, theta)), Some(p.residual), None, Some(p)),
        Err(e @ KppError::NoConvergence { .. }) => (None, None, Some(e.to_string()), None),
        Err(e) => return Err(e),
    };
    Ok(SpeedProbe {
        c,
        radius,
        grid_size: m,
        theta,
        shape,
        residual,
        failure,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_component() -> Model {
        let l = SquareMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        Model::lotka_volterra(vec![1.0, 1.0], l, SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap()
    }

    #[test]
    fn envelope_constants() {
        let env = build_envelope(&two_component(), 2.5, None).unwrap();
        assert!((env.mu1 - 0.5).abs() < 1e-10);
        assert!((env.mu2 - 2.0).abs() < 1e-10);
        assert!((env.eps_bar - 0.5).abs() < 1e-10);
        assert!(env.crossing_point() >= 0.0);
        assert_eq!(env.sub(-3.0), vec![0.0, 0.0]);
    }

    #[test]
    fn below_critical_is_rejected() {
        assert!(matches!(
            build_envelope(&two_component(), 1.5, None),
            Err(KppError::SpeedBelowCritical { .. })
        ));
    }
}
