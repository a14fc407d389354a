//! Dispersion relation of the linearization at zero and the minimal wave speed.
//!
//! An exponential `ξ ↦ e^{-μξ} n` with `n ≫ 0` solves the linearized wave
//! equation `-D p'' - c p' = L p` exactly when `n = n_PF(μ² D + L)` and
//! `μ c = λ_PF(μ² D + L) = -κ_μ`. Since `μ ↦ -κ_μ` is strictly convex, the map
//! `μ ↦ -κ_μ / μ` is strictly decreasing then strictly increasing on `(0, ∞)`
//! and blows up at both ends; its minimum is the minimal wave speed `c*`,
//! attained at `μ_{c*}`. It is convex as well when every diagonal entry of `L`
//! is nonnegative or all diffusion rates agree, but not in general: a fastest
//! diffuser with negative diagonal entry makes it concave for large `μ`.
//!
//! The same construction applies to the central-difference discretization on a
//! uniform grid of step `h`, with `μ²` replaced by `2 (cosh(μh) - 1) / h²` and
//! the drift factor `μ` by `sinh(μh) / h`. [`Symbol`] selects between the two.

use serde::{Deserialize, Serialize};

use crate::error::{KppError, Result};
use crate::matrix::SquareMatrix;
use crate::model::Model;
use crate::optimize::{bisect, expand_positive_bracket, golden_section, log_grid};
use crate::spectral::{perron_frobenius, SpectralPair, DEFAULT_PF_TOL};

/// Continuous or grid-consistent Fourier symbols of `d²/dξ²` and `-d/dξ`
/// evaluated on `e^{-μξ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Symbol {
    Continuous,
    Grid { h: f64 },
}

impl Symbol {
    /// Multiplier of `D` in the dispersion matrix.
    pub fn second(&self, mu: f64) -> f64 {
        match *self {
            Symbol::Continuous => mu * mu,
            Symbol::Grid { h } => 2.0 * ((mu * h).cosh() - 1.0) / (h * h),
        }
    }

    /// Multiplier of the speed `c`.
    pub fn first(&self, mu: f64) -> f64 {
        match *self {
            Symbol::Continuous => mu,
            Symbol::Grid { h } => (mu * h).sinh() / h,
        }
    }
}

/// `(κ_μ, n_μ)` with `κ_μ = -λ_PF(μ² D + L)` and `n_μ = n_PF(μ² D + L)`.
pub fn kappa(model: &Model, mu: f64) -> Result<(f64, Vec<f64>)> {
    let p = kappa_pair(model, mu, Symbol::Continuous)?;
    Ok((-p.value, p.vector))
}

/// Perron–Frobenius pair of `s(μ) D + L` for the given symbol, i.e. `(-κ_μ, n_μ)`.
pub fn kappa_pair(model: &Model, mu: f64, symbol: Symbol) -> Result<SpectralPair> {
    let s = symbol.second(mu);
    let diag: Vec<f64> = model.d().iter().map(|d| s * d).collect();
    perron_frobenius(&model.l().plus_diag(&diag), DEFAULT_PF_TOL)
}

/// Speed of the exponential with decay rate `μ > 0`: `-κ_μ / μ`.
pub fn speed_of_rate(model: &Model, mu: f64, symbol: Symbol) -> Result<f64> {
    Ok(kappa_pair(model, mu, symbol)?.value / symbol.first(mu))
}

/// Sampled curve `μ ↦ -κ_μ / μ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionCurve {
    pub mu: Vec<f64>,
    pub speed: Vec<f64>,
}

impl DispersionCurve {
    /// Second differences in `μ` (non-uniform three-point formula).
    pub fn second_differences(&self) -> Vec<f64> {
        self.mu
            .windows(3)
            .zip(self.speed.windows(3))
            .map(|(x, y)| {
                let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
                2.0 * (h1 * y[2] - (h1 + h2) * y[1] + h2 * y[0]) / (h1 * h2 * (h1 + h2))
            })
            .collect()
    }

    /// Strictly decreasing, then strictly increasing (either part may be empty).
    pub fn is_unimodal(&self) -> bool {
        let mut rising = false;
        for w in self.speed.windows(2) {
            if w[1] > w[0] {
                rising = true;
            } else if rising || w[1] == w[0] {
                return false;
            }
        }
        true
    }
}

pub fn dispersion_curve(model: &Model, mu: &[f64]) -> Result<DispersionCurve> {
    let speed = mu
        .iter()
        .map(|&m| speed_of_rate(model, m, Symbol::Continuous))
        .collect::<Result<_>>()?;
    Ok(DispersionCurve { mu: mu.to_vec(), speed })
}

/// `L = diag(r) + M` with `Mᵀ 1 = 0`: `r` holds the column sums of `L`.
pub fn growth_mutation_split(l: &SquareMatrix) -> (Vec<f64>, SquareMatrix) {
    let r = l.col_sums();
    let mut m = l.clone();
    for (j, rj) in r.iter().enumerate() {
        m[(j, j)] -= rj;
    }
    (r, m)
}

/// Minimal speed, its decay rate and every speed estimate derivable from them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedReport {
    pub c_star: f64,
    pub mu_star: f64,
    pub lambda_pf: f64,
    /// `n_PF(μ_{c*}² D + L)`.
    pub n_mu_star: Vec<f64>,
    /// `2 sqrt(min_i d_i λ_PF(L))`.
    pub lower_bound: f64,
    /// `2 sqrt(max_i d_i λ_PF(L))`.
    pub upper_bound: f64,
    /// `(i, 2 sqrt(d_i l_ii))` for every `i` with `l_ii > 0`.
    pub per_component_bounds: Vec<(usize, f64)>,
    pub r: Vec<f64>,
    pub m: SquareMatrix,
    pub d_avg: f64,
    pub r_avg: f64,
    /// `2 sqrt(<d><r>)`, present only when `<r> >= 0`.
    pub avg_bound: Option<f64>,
    pub equal_diffusion: bool,
}

impl SpeedReport {
    pub const CSV_HEADER: &'static str =
        "c_star,mu_star,lambda_pf,lower_bound,upper_bound,d_avg,r_avg,avg_bound,max_component_bound";

    /// One CSV row matching [`SpeedReport::CSV_HEADER`]; floats use shortest round-trip formatting.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let comp = self
            .per_component_bounds
            .iter()
            .map(|b| b.1)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
            self.c_star,
            self.mu_star,
            self.lambda_pf,
            self.lower_bound,
            self.upper_bound,
            self.d_avg,
            self.r_avg,
            opt(self.avg_bound),
            opt(comp)
        )
    }
}

/// Minimizer of `μ ↦ -κ_μ / s₁(μ)` for the given symbol: `(c*, μ_{c*})`.
pub fn critical_pair(model: &Model, symbol: Symbol) -> Result<(f64, f64)> {
    let f = |mu: f64| speed_of_rate(model, mu, symbol);
    let (a, b) = expand_positive_bracket(f, 1e-3, 10.0, 4.0, 60)?;
    let m = golden_section(f, a, b, 1e-10)?;
    Ok((m.fx, m.x))
}

/// Validates the model and returns `λ_PF(L)`, rejecting `λ_PF(L) <= 0`.
pub fn require_supercritical_speed(model: &Model) -> Result<f64> {
    model.require_valid()?;
    let lam = model.lambda_pf()?;
    if !(lam > 0.0) {
        return Err(KppError::HypothesisViolation(format!(
            "λ_PF(L) = {lam} <= 0: the null state is stable and no positive steady state exists, so there is no minimal wave speed"
        )));
    }
    Ok(lam)
}

/// Minimal wave speed `c* = min_{μ>0} -κ_μ/μ` by golden-section search, plus
/// the sandwich, per-component and averaged estimates.
///
/// `tol` bounds the Perron–Frobenius residual used at `μ_{c*}`.
pub fn minimal_speed(model: &Model, tol: f64) -> Result<SpeedReport> {
    let lambda_pf = require_supercritical_speed(model)?;
    let (_, mu_star) = critical_pair(model, Symbol::Continuous)?;
    let d = model.d();
    let l = model.l();
    let diag: Vec<f64> = d.iter().map(|di| mu_star * mu_star * di).collect();
    let pair = perron_frobenius(&l.plus_diag(&diag), tol.min(DEFAULT_PF_TOL))?;
    let c_star = pair.value / mu_star;
    let n = pair.vector;

    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let per_component_bounds = (0..model.n())
        .filter(|&i| l[(i, i)] > 0.0)
        .map(|i| (i, 2.0 * (d[i] * l[(i, i)]).sqrt()))
        .collect();
    let (r, m) = growth_mutation_split(l);
    let mass: f64 = n.iter().sum();
    let d_avg = d.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>() / mass;
    let r_avg = r.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>() / mass;
    Ok(SpeedReport {
        c_star,
        mu_star,
        lambda_pf,
        n_mu_star: n,
        lower_bound: 2.0 * (dmin * lambda_pf).sqrt(),
        upper_bound: 2.0 * (dmax * lambda_pf).sqrt(),
        per_component_bounds,
        r,
        m,
        d_avg,
        r_avg,
        avg_bound: (r_avg >= 0.0).then(|| 2.0 * (d_avg * r_avg).sqrt()),
        equal_diffusion: dmin == dmax,
    })
}

/// Positive solutions of `-κ_μ / μ = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MuRoots {
    None,
    Double(f64),
    Pair(f64, f64),
}

/// Relative width of the window in which `c` is treated as equal to `c*`.
pub const CRITICAL_WINDOW: f64 = 1e-8;

pub fn mu_roots(model: &Model, c: f64) -> Result<MuRoots> {
    require_supercritical_speed(model)?;
    mu_roots_with(model, c, Symbol::Continuous)
}

/// [`mu_roots`] for an arbitrary symbol; the model is assumed validated and supercritical.
pub fn mu_roots_with(model: &Model, c: f64, symbol: Symbol) -> Result<MuRoots> {
    if c < 0.0 {
        return Err(KppError::InvalidInput("speed must be nonnegative".into()));
    }
    let (c_star, mu_star) = critical_pair(model, symbol)?;
    if (c - c_star).abs() <= CRITICAL_WINDOW * c_star.max(1.0) {
        return Ok(MuRoots::Double(mu_star));
    }
    if c < c_star {
        return Ok(MuRoots::None);
    }
    let g = |mu: f64| speed_of_rate(model, mu, symbol).map(|s| s - c);
    let mut lo = mu_star;
    let mut steps = 0;
    while g(lo)? <= 0.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 200 {
            return Err(KppError::NoConvergence {
                method: "mu root bracket",
                iterations: steps,
                residual: f64::NAN,
            });
        }
    }
    let mut hi = mu_star;
    steps = 0;
    while g(hi)? <= 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(KppError::NoConvergence {
                method: "mu root bracket",
                iterations: steps,
                residual: f64::NAN,
            });
        }
    }
    let mu1 = bisect(g, lo, mu_star, 1e-15)?;
    let mu2 = bisect(g, mu_star, hi, 1e-15)?;
    Ok(MuRoots::Pair(mu1, mu2))
}

/// One inequality `lhs <= rhs` (or `<`) from the speed estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// The inequality is expected to be strict.
    pub strict: bool,
    pub holds: bool,
}

/// Evaluates every speed estimate of a report with its slack.
///
/// Comparisons allow a relative `1e-9` roundoff on the non-strict side.
pub fn speed_bounds_check(report: &SpeedReport) -> Vec<BoundCheck> {
    let tol = 1e-9 * report.c_star.abs().max(1.0);
    let strict_sandwich = !report.equal_diffusion;
    let mk = |name: String, lhs: f64, rhs: f64, strict: bool| {
        let slack = rhs - lhs;
        let holds = if strict { slack > 0.0 } else { slack >= -tol };
        BoundCheck {
            name,
            lhs,
            rhs,
            slack,
            strict,
            holds,
        }
    };
    let mut out = vec![
        mk(
            "2sqrt(d_min λ_PF) <= c*".into(),
            report.lower_bound,
            report.c_star,
            strict_sandwich,
        ),
        mk(
            "c* <= 2sqrt(d_max λ_PF)".into(),
            report.c_star,
            report.upper_bound,
            strict_sandwich,
        ),
    ];
    for &(i, b) in &report.per_component_bounds {
        out.push(mk(format!("2sqrt(d_{i} l_{i}{i}) < c*"), b, report.c_star, true));
    }
    if let Some(b) = report.avg_bound {
        out.push(mk("2sqrt(<d><r>) <= c*".into(), b, report.c_star, false));
    }
    let lhs = report.mu_star * report.mu_star * report.d_avg + report.r_avg;
    let rhs = report.mu_star * report.c_star;
    out.push(BoundCheck {
        name: "μ*²<d> + <r> = μ* c*".into(),
        lhs,
        rhs,
        slack: rhs - lhs,
        strict: false,
        holds: (rhs - lhs).abs() <= 1e-8,
    });
    out
}

/// Default log-spaced sample grid around `μ_{c*}` for plotting the dispersion curve.
pub fn default_curve_grid(mu_star: f64, count: usize) -> Vec<f64> {
    log_grid(mu_star / 20.0, mu_star * 20.0, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::laplacian_matrix;

    fn equal_diffusion_model(n: usize) -> Model {
        let l = laplacian_matrix(n).unwrap().scaled(0.1).shifted(1.0);
        Model::lotka_volterra(vec![1.0; n], l, SquareMatrix::from_fn(n, |_, _| 1.0)).unwrap()
    }

    #[test]
    fn kappa_at_zero_and_even() {
        let m = equal_diffusion_model(3);
        let (k0, _) = kappa(&m, 0.0).unwrap();
        assert!((k0 + 1.0).abs() < 1e-12);
        for mu in [0.3, 1.7] {
            let (a, _) = kappa(&m, mu).unwrap();
            let (b, _) = kappa(&m, -mu).unwrap();
            assert_eq!(a, b);
            assert!((a + (mu * mu + 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn equal_diffusion_roots_solve_quadratic() {
        let m = equal_diffusion_model(2);
        match mu_roots(&m, 2.5).unwrap() {
            MuRoots::Pair(a, b) => {
                assert!((a - 0.5).abs() < 1e-10, "{a}");
                assert!((b - 2.0).abs() < 1e-10, "{b}");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(mu_roots(&m, 1.0).unwrap(), MuRoots::None);
        match mu_roots(&m, 2.0).unwrap() {
            MuRoots::Double(mu) => assert!((mu - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_has_zero_column_sums() {
        let l = SquareMatrix::from_rows(&[vec![1.0, 0.3, 0.0], vec![0.2, -0.5, 0.7], vec![0.1, 0.4, 0.2]]).unwrap();
        let (r, m) = growth_mutation_split(&l);
        for s in m.col_sums() {
            assert!(s.abs() < 1e-12);
        }
        let back = m.plus_diag(&r);
        for (a, b) in back.as_slice().iter().zip(l.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_symbol_tends_to_continuous() {
        let g = Symbol::Grid { h: 1e-4 };
        assert!((g.second(0.7) - 0.49).abs() < 1e-8);
        assert!((g.first(0.7) - 0.7).abs() < 1e-8);
    }

    #[test]
    fn subcritical_model_rejected() {
        let l = laplacian_matrix(2).unwrap().shifted(-0.3);
        let m = Model::lotka_volterra(vec![1.0, 1.0], l, SquareMatrix::from_fn(2, |_, _| 1.0)).unwrap();
        assert!(matches!(
            minimal_speed(&m, 1e-12),
            Err(KppError::HypothesisViolation(_))
        ));
    }
}
