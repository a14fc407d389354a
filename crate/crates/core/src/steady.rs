//! Constant positive steady states `L v = c(v) ∘ v` and the trichotomy on the
//! sign of `λ_PF(L)` that governs their existence.

use serde::{Deserialize, Serialize};

use crate::error::{KppError, Result};
use crate::matrix::SquareMatrix;
use crate::model::{alpha_half, saturation_vector, CompetitionField, Model};
use crate::spectral::{perron_frobenius, DEFAULT_PF_TOL};

/// Absolute window in which `λ_PF(L)` counts as zero.
pub const CRITICAL_LAMBDA_WINDOW: f64 = 1e-10;

const STARTS: usize = 8;
const NEWTON_MAX_ITER: usize = 200;

/// The convex compact set `{v >= 0 : wᵀ v >= η, v <= k + 1}` with `w = n_PF(Lᵀ)`,
/// inside which a positive steady state is sought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSet {
    pub eta: f64,
    pub upper_corner: Vec<f64>,
    pub left_vector: Vec<f64>,
}

impl SearchSet {
    pub fn contains(&self, v: &[f64], slack: f64) -> bool {
        let wv: f64 = self.left_vector.iter().zip(v).map(|(a, b)| a * b).sum();
        wv >= self.eta * (1.0 - slack)
            && v.iter()
                .zip(&self.upper_corner)
                .all(|(x, u)| *x >= 0.0 && *x <= u * (1.0 + slack))
    }

    /// Clamp into the box, then scale up along the ray if below the slice.
    fn project(&self, v: &mut [f64]) {
        for (x, u) in v.iter_mut().zip(&self.upper_corner) {
            *x = x.clamp(0.0, *u);
        }
        let wv: f64 = self.left_vector.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        if wv < self.eta {
            if wv > 0.0 {
                let s = self.eta / wv;
                for (x, u) in v.iter_mut().zip(&self.upper_corner) {
                    *x = (*x * s).min(*u);
                }
            } else {
                let s = self.eta / self.left_vector.iter().sum::<f64>();
                v.iter_mut().for_each(|x| *x = s);
            }
        }
    }

    fn start(&self, index: usize) -> Vec<f64> {
        // golden-ratio weights give well spread deterministic interior points
        const G: f64 = 0.618_033_988_749_894_9;
        let mut v: Vec<f64> = self
            .upper_corner
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let t = if index == 0 {
                    0.5
                } else {
                    0.1 + 0.8 * ((index * (i + 1)) as f64 * G).fract()
                };
                t * u
            })
            .collect();
        self.project(&mut v);
        v
    }
}

/// A constant positive steady state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyState {
    pub v: Vec<f64>,
    /// `|L v - c(v) ∘ v|_∞`.
    pub residual: f64,
    pub search_set: SearchSet,
    /// Index of the start that produced `v`; the lowest successful index wins.
    pub start: usize,
    /// Further distinct states reached from later starts. Uniqueness is not
    /// guaranteed, so none of them is privileged.
    pub others: Vec<Vec<f64>>,
}

fn residual(model: &Model, v: &[f64]) -> f64 {
    model.reaction(v).iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton(model: &Model, set: &SearchSet, mut v: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let mut res = residual(model, &v);
    for _ in 0..NEWTON_MAX_ITER {
        if res <= tol {
            return Some(v);
        }
        let f = model.reaction(&v);
        let j: SquareMatrix = model.reaction_jacobian(&v);
        let step = match j.solve(&f) {
            Ok(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => return None,
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let mut cand: Vec<f64> = v.iter().zip(&step).map(|(a, b)| a - t * b).collect();
            if !set.contains(&cand, 0.0) {
                set.project(&mut cand);
            }
            let r = residual(model, &cand);
            if r < res {
                v = cand;
                res = r;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (res <= tol).then_some(v);
        }
    }
    (res <= tol).then_some(v)
}

// Forward Euler on v' = F(v) inside the search set, finished by Newton.
fn contraction(model: &Model, set: &SearchSet, mut v: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let cmax = model
        .competition_at(&set.upper_corner)
        .iter()
        .fold(0.0, |m: f64, x| m.max(*x));
    let scale = model.l().norm_inf() + cmax;
    let dt = 0.5 / scale.max(1e-12);
    for _ in 0..200_000 {
        let f = model.reaction(&v);
        let r = f.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        if r <= tol.max(1e-8) {
            return newton(model, set, v, tol);
        }
        v.iter_mut().zip(&f).for_each(|(x, fx)| *x += dt * fx);
        set.project(&mut v);
    }
    None
}

/// Constant positive solution of `L v = c(v) ∘ v` by damped Newton inside the
/// search set, with deterministic multi-start and a time-stepping fallback.
pub fn find_constant_steady(model: &Model, tol: f64) -> Result<SteadyState> {
    model.require_valid()?;
    let lam = model.lambda_pf()?;
    if lam < -CRITICAL_LAMBDA_WINDOW {
        return Err(KppError::HypothesisViolation(format!(
            "λ_PF(L) = {lam} < 0: no positive steady state exists"
        )));
    }
    if lam <= CRITICAL_LAMBDA_WINDOW {
        return Err(KppError::HypothesisViolation(format!(
            "λ_PF(L) = {lam} is zero within {CRITICAL_LAMBDA_WINDOW}: no bounded positive steady state exists when the span condition holds"
        )));
    }
    let sat = saturation_vector(model, 8)?;
    let left = perron_frobenius(&model.l().transpose(), DEFAULT_PF_TOL)?.vector;
    let a_half = alpha_half(model)?;
    let set = SearchSet {
        eta: a_half * left.iter().cloned().fold(f64::INFINITY, f64::min),
        upper_corner: sat.k.iter().map(|k| k + 1.0).collect(),
        left_vector: left,
    };

    let mut found: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut final_residuals = Vec::new();
    for s in 0..=STARTS {
        let v0 = set.start(s);
        let hit = newton(model, &set, v0.clone(), tol).or_else(|| contraction(model, &set, v0, tol));
        match hit {
            Some(v) if v.iter().all(|x| *x > 0.0) => {
                let distinct = found
                    .iter()
                    .all(|(_, w)| v.iter().zip(w).any(|(a, b)| (a - b).abs() > 1e-8 * a.abs().max(1.0)));
                if distinct {
                    found.push((s, v));
                }
            }
            Some(v) => final_residuals.push(residual(model, &v)),
            None => final_residuals.push(f64::NAN),
        }
    }
    let mut iter = found.into_iter();
    let (start, v) = iter.next().ok_or(KppError::NoConvergence {
        method: "steady-state Newton (all starts)",
        iterations: STARTS + 1,
        residual: final_residuals.iter().cloned().fold(f64::NAN, f64::min),
    })?;
    Ok(SteadyState {
        residual: residual(model, &v),
        v,
        search_set: set,
        start,
        others: iter.map(|(_, w)| w).collect(),
    })
}

/// Which part of the existence trichotomy a model falls in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `λ_PF(L) < 0`: no positive steady state.
    Subcritical,
    /// `λ_PF(L) = 0` and `c` vanishes nowhere on the ray of `n_PF(L)`: no
    /// bounded positive steady state.
    CriticalSpanCondition,
    /// `λ_PF(L) = 0` but `c(α n_PF(L)) = 0` for some `α > 0`.
    CriticalUndetermined { alpha: f64 },
    /// `λ_PF(L) > 0`: a constant positive steady state exists.
    Existence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub lambda_pf: f64,
    #[serde(flatten)]
    pub regime: Regime,
}

impl ExistenceReport {
    pub fn nonexistence(&self) -> bool {
        matches!(self.regime, Regime::Subcritical | Regime::CriticalSpanCondition)
    }
}

/// Classifies the model by the sign of `λ_PF(L)` and, at criticality, by
/// whether the ray through `n_PF(L)` meets the zero set of `c`.
pub fn nonexistence_certificate(model: &Model) -> Result<ExistenceReport> {
    let pair = perron_frobenius(model.l(), DEFAULT_PF_TOL)?;
    let lambda_pf = pair.value;
    let regime = if lambda_pf < -CRITICAL_LAMBDA_WINDOW {
        Regime::Subcritical
    } else if lambda_pf > CRITICAL_LAMBDA_WINDOW {
        Regime::Existence
    } else {
        match model.competition() {
            // c(α n) = α C n or α² C (n ∘ n), nonzero for C ≫ 0 and n ≫ 0
            CompetitionField::LotkaVolterra { c } | CompetitionField::GrossPitaevskii { c }
                if c.as_slice().iter().all(|x| *x > 0.0) =>
            {
                Regime::CriticalSpanCondition
            }
            _ => scan_ray(model, &pair.vector),
        }
    };
    Ok(ExistenceReport { lambda_pf, regime })
}

fn scan_ray(model: &Model, n: &[f64]) -> Regime {
    let grid = crate::optimize::log_grid(1e-8, 1e8, 1601);
    for alpha in grid {
        let v: Vec<f64> = n.iter().map(|x| x * alpha).collect();
        if model.competition_at(&v).iter().all(|c| c.abs() <= 1e-14) {
            return Regime::CriticalUndetermined { alpha };
        }
    }
    Regime::CriticalSpanCondition
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::laplacian_matrix;

    #[test]
    fn symmetric_model_has_uniform_state() {
        let n = 4;
        let l = laplacian_matrix(n).unwrap().scaled(0.3).shifted(1.5);
        let m = Model::lotka_volterra(vec![1.0; n], l, SquareMatrix::from_fn(n, |_, _| 1.0)).unwrap();
        let s = find_constant_steady(&m, 1e-13).unwrap();
        for x in &s.v {
            assert!((x - 1.5 / n as f64).abs() < 1e-12);
        }
        assert!(s.search_set.contains(&s.v, 1e-12));
    }

    #[test]
    fn trichotomy() {
        let base = laplacian_matrix(3).unwrap();
        let c = SquareMatrix::from_fn(3, |_, _| 1.0);
        let sub = Model::lotka_volterra(vec![1.0; 3], base.shifted(-0.3), c.clone()).unwrap();
        assert_eq!(nonexistence_certificate(&sub).unwrap().regime, Regime::Subcritical);
        assert!(matches!(
            find_constant_steady(&sub, 1e-12),
            Err(KppError::HypothesisViolation(_))
        ));
        let crit = Model::lotka_volterra(vec![1.0; 3], base.clone(), c.clone()).unwrap();
        assert_eq!(
            nonexistence_certificate(&crit).unwrap().regime,
            Regime::CriticalSpanCondition
        );
        let sup = Model::lotka_volterra(vec![1.0; 3], base.shifted(0.5), c).unwrap();
        assert_eq!(nonexistence_certificate(&sup).unwrap().regime, Regime::Existence);
    }
}
