//! KPP system instances `∂_t u - D ∂_xx u = L u - c(u) ∘ u`, their structural
//! hypotheses, and the saturation constants derived from them.
//!
//! The four hypotheses checked by [`Model::validate`] are:
//!
//! * **H1** `L` is essentially nonnegative and irreducible;
//! * **H2** `c` maps the nonnegative cone `K` into itself;
//! * **H3** `c(0) = 0`;
//! * **H4** at-least-algebraic growth: there are `α_floor >= 1`, `δ >= 1` and
//!   `c_floor ≫ 0` with `α^δ c_floor_i <= c_i(α n)` whenever `n ∈ S⁺`,
//!   `(L n)_i >= 0` and `α >= α_floor`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KppError, Result};
use crate::matrix::SquareMatrix;
use crate::optimize::bisect;
use crate::spectral::{check_essentially_nonnegative_irreducible, perron_frobenius, DEFAULT_PF_TOL};
use crate::sphere::{positive_sphere_samples, project_positive};

/// Signature of a user-supplied competition field `v ↦ c(v)`.
pub type CompetitionFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A competition field given by an arbitrary evaluator together with the
/// growth data required by H4.
#[derive(Clone)]
pub struct CustomCompetition {
    pub name: String,
    pub evaluator: Arc<CompetitionFn>,
    pub growth_exponent: f64,
    pub floor: Vec<f64>,
    pub alpha_floor: f64,
}

impl fmt::Debug for CustomCompetition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCompetition")
            .field("name", &self.name)
            .field("growth_exponent", &self.growth_exponent)
            .field("floor", &self.floor)
            .field("alpha_floor", &self.alpha_floor)
            .finish()
    }
}

/// The competition term `c` of the system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum CompetitionField {
    /// `c(v) = C v`.
    LotkaVolterra {
        #[serde(rename = "C")]
        c: SquareMatrix,
    },
    /// `c(v) = C (v ∘ v)`.
    GrossPitaevskii {
        #[serde(rename = "C")]
        c: SquareMatrix,
    },
    #[serde(skip)]
    Custom(CustomCompetition),
}

impl CompetitionField {
    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Self::LotkaVolterra { c } => c.matvec(v),
            Self::GrossPitaevskii { c } => {
                let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
                c.matvec(&sq)
            }
            Self::Custom(custom) => (custom.evaluator)(v),
        }
    }

    /// Jacobian `Dc(v)`; finite differences for custom fields.
    pub fn jacobian(&self, v: &[f64]) -> SquareMatrix {
        match self {
            Self::LotkaVolterra { c } => c.clone(),
            Self::GrossPitaevskii { c } => SquareMatrix::from_fn(c.n(), |i, j| 2.0 * c[(i, j)] * v[j]),
            Self::Custom(_) => {
                let n = v.len();
                let base = self.eval(v);
                let mut jac = SquareMatrix::zeros(n);
                for j in 0..n {
                    let step = 1e-7 * v[j].abs().max(1.0);
                    let mut w = v.to_vec();
                    w[j] += step;
                    let f = self.eval(&w);
                    for i in 0..n {
                        jac[(i, j)] = (f[i] - base[i]) / step;
                    }
                }
                jac
            }
        }
    }

    pub fn matrix(&self) -> Option<&SquareMatrix> {
        match self {
            Self::LotkaVolterra { c } | Self::GrossPitaevskii { c } => Some(c),
            Self::Custom(_) => None,
        }
    }

    pub fn variant_name(&self) -> &str {
        match self {
            Self::LotkaVolterra { .. } => "LotkaVolterra",
            Self::GrossPitaevskii { .. } => "GrossPitaevskii",
            Self::Custom(c) => &c.name,
        }
    }

    /// Whether `Dc(v) >= 0` on `K` is known exactly (closed-form fields with `C >= 0`).
    pub fn monotone_on_cone(&self) -> Option<bool> {
        self.matrix().map(|c| c.as_slice().iter().all(|v| *v >= 0.0))
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Self::LotkaVolterra { c } | Self::GrossPitaevskii { c } => Some(c.n()),
            Self::Custom(c) => Some(c.floor.len()),
        }
    }
}

/// A KPP system: diffusion rates `d`, linear part `L` and competition `c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct Model {
    d: Vec<f64>,
    l: SquareMatrix,
    comp: CompetitionField,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    n: usize,
    d: Vec<f64>,
    #[serde(rename = "L")]
    l: SquareMatrix,
    competition: CompetitionField,
}

impl TryFrom<ModelDoc> for Model {
    type Error = KppError;
    fn try_from(doc: ModelDoc) -> Result<Self> {
        if doc.n != doc.d.len() {
            return Err(KppError::InvalidInput(format!(
                "n = {} but d has {} entries",
                doc.n,
                doc.d.len()
            )));
        }
        Model::new(doc.d, doc.l, doc.competition)
    }
}

impl From<Model> for ModelDoc {
    fn from(m: Model) -> Self {
        ModelDoc {
            n: m.n(),
            d: m.d,
            l: m.l,
            competition: m.comp,
        }
    }
}

impl Model {
    /// Checks shapes, finiteness, `n >= 2` and `d ≫ 0`. Hypotheses H1–H4 are
    /// checked separately by [`Model::validate`].
    pub fn new(d: Vec<f64>, l: SquareMatrix, comp: CompetitionField) -> Result<Self> {
        let n = d.len();
        if n < 2 {
            return Err(KppError::InvalidInput(format!(
                "systems need at least 2 components, got {n}"
            )));
        }
        if l.n() != n || comp.dim() != Some(n) {
            return Err(KppError::InvalidInput(
                "d, L and the competition field disagree on n".into(),
            ));
        }
        if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(KppError::InvalidInput(
                "diffusion rates must be positive and finite".into(),
            ));
        }
        Ok(Self { d, l, comp })
    }

    pub fn lotka_volterra(d: Vec<f64>, l: SquareMatrix, c: SquareMatrix) -> Result<Self> {
        Self::new(d, l, CompetitionField::LotkaVolterra { c })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn l(&self) -> &SquareMatrix {
        &self.l
    }

    pub fn competition(&self) -> &CompetitionField {
        &self.comp
    }

    /// Same diffusion and competition, new linear part.
    pub fn with_l(&self, l: SquareMatrix) -> Result<Self> {
        Self::new(self.d.clone(), l, self.comp.clone())
    }

    /// Relabels components: component `i` of the result is component `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let d = perm.iter().map(|&p| self.d[p]).collect();
        let comp = match &self.comp {
            CompetitionField::LotkaVolterra { c } => CompetitionField::LotkaVolterra { c: c.permuted(perm) },
            CompetitionField::GrossPitaevskii { c } => CompetitionField::GrossPitaevskii { c: c.permuted(perm) },
            CompetitionField::Custom(_) => {
                return Err(KppError::InvalidInput(
                    "cannot permute a custom competition field".into(),
                ))
            }
        };
        Self::new(d, self.l.permuted(perm), comp)
    }

    pub fn competition_at(&self, v: &[f64]) -> Vec<f64> {
        self.comp.eval(v)
    }

    /// Reaction term `L v - c(v) ∘ v`.
    pub fn reaction(&self, v: &[f64]) -> Vec<f64> {
        let lv = self.l.matvec(v);
        let cv = self.comp.eval(v);
        lv.iter().zip(&cv).zip(v).map(|((a, b), x)| a - b * x).collect()
    }

    /// [`Model::reaction`] into a caller-provided buffer; allocation free for
    /// the closed-form competition fields.
    pub fn reaction_into(&self, v: &[f64], out: &mut [f64]) {
        match &self.comp {
            CompetitionField::LotkaVolterra { c } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (lr, cr) = (self.l.row(i), c.row(i));
                    let mut lv = 0.0;
                    let mut cv = 0.0;
                    for j in 0..v.len() {
                        lv += lr[j] * v[j];
                        cv += cr[j] * v[j];
                    }
                    *o = lv - cv * v[i];
                }
            }
            CompetitionField::GrossPitaevskii { c } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (lr, cr) = (self.l.row(i), c.row(i));
                    let mut lv = 0.0;
                    let mut cv = 0.0;
                    for j in 0..v.len() {
                        lv += lr[j] * v[j];
                        cv += cr[j] * v[j] * v[j];
                    }
                    *o = lv - cv * v[i];
                }
            }
            CompetitionField::Custom(_) => out.copy_from_slice(&self.reaction(v)),
        }
    }

    /// Jacobian of the reaction term: `L - diag c(v) - diag(v) Dc(v)`.
    pub fn reaction_jacobian(&self, v: &[f64]) -> SquareMatrix {
        let cv = self.comp.eval(v);
        let dc = self.comp.jacobian(v);
        SquareMatrix::from_fn(self.n(), |i, j| {
            let mut x = self.l[(i, j)] - v[i] * dc[(i, j)];
            if i == j {
                x -= cv[i];
            }
            x
        })
    }

    pub fn lambda_pf(&self) -> Result<f64> {
        Ok(perron_frobenius(&self.l, DEFAULT_PF_TOL)?.value)
    }

    /// Content hash used to tag outputs; stable across runs for serializable models.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_else(|_| format!("{:?}", self));
        // FNV-1a, 64 bit
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Checks H1–H4.
    pub fn validate(&self) -> HypothesisReport {
        let s = check_essentially_nonnegative_irreducible(&self.l);
        let h1 = if s.admissible() {
            Check::Pass
        } else if !s.essentially_nonnegative {
            Check::Fail("L has a negative off-diagonal entry".into())
        } else {
            Check::Fail("L is reducible".into())
        };
        let c0 = self.comp.eval(&vec![0.0; self.n()]);
        let h3 = if c0.iter().all(|v| v.abs() <= 1e-14) {
            Check::Pass
        } else {
            Check::Fail(format!("c(0) = {c0:?}"))
        };
        let (h2, h4, growth) = match &self.comp {
            CompetitionField::LotkaVolterra { c } | CompetitionField::GrossPitaevskii { c } => {
                let delta = if matches!(self.comp, CompetitionField::LotkaVolterra { .. }) {
                    1.0
                } else {
                    2.0
                };
                let h2 = if c.as_slice().iter().all(|v| *v >= 0.0) {
                    Check::Pass
                } else {
                    Check::Fail("C has a negative entry".into())
                };
                let floor: Vec<f64> = (0..self.n())
                    .map(|i| c.row(i).iter().cloned().fold(f64::INFINITY, f64::min))
                    .collect();
                let h4 = if floor.iter().all(|v| *v > 0.0) {
                    Check::Pass
                } else {
                    Check::Fail("C must be entrywise positive".into())
                };
                (
                    h2,
                    h4,
                    Some(GrowthData {
                        alpha_floor: 1.0,
                        exponent: delta,
                        floor,
                    }),
                )
            }
            CompetitionField::Custom(custom) => {
                let (h2, h4) = self.sample_custom_hypotheses(custom);
                (
                    h2,
                    h4,
                    Some(GrowthData {
                        alpha_floor: custom.alpha_floor,
                        exponent: custom.growth_exponent,
                        floor: custom.floor.clone(),
                    }),
                )
            }
        };
        HypothesisReport { h1, h2, h3, h4, growth }
    }

    fn sample_custom_hypotheses(&self, custom: &CustomCompetition) -> (Check, Check) {
        let n = self.n();
        let dirs = positive_sphere_samples(n, 12, 0x5eed);
        let radii = [1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];
        let mut h2 = Check::SampledPass;
        'outer: for dir in &dirs {
            for r in radii {
                let v: Vec<f64> = dir.iter().map(|x| x * r).collect();
                let c = self.comp.eval(&v);
                if c.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                    h2 = Check::Fail(format!("c({v:?}) = {c:?} leaves the cone"));
                    break 'outer;
                }
            }
        }
        let mut h4 =
            if custom.growth_exponent >= 1.0 && custom.alpha_floor >= 1.0 && custom.floor.iter().all(|v| *v > 0.0) {
                Check::SampledPass
            } else {
                Check::Fail("growth data must satisfy δ >= 1, α_floor >= 1, c_floor ≫ 0".into())
            };
        if h4 == Check::SampledPass {
            'h4: for dir in &dirs {
                let ln = self.l.matvec(dir);
                for i in 0..n {
                    if ln[i] < 0.0 {
                        continue;
                    }
                    for k in 0..12 {
                        let alpha = custom.alpha_floor * 2f64.powi(k);
                        let v: Vec<f64> = dir.iter().map(|x| x * alpha).collect();
                        let ci = self.comp.eval(&v)[i];
                        if alpha.powf(custom.growth_exponent) * custom.floor[i] > ci * (1.0 + 1e-12) {
                            h4 = Check::Fail(format!("growth bound fails for component {i} at α = {alpha}"));
                            break 'h4;
                        }
                    }
                }
            }
        }
        (h2, h4)
    }

    /// Errors with the first failed hypothesis.
    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        for (name, check) in report.checks() {
            if let Check::Fail(why) = check {
                return Err(KppError::HypothesisViolation(format!("({name}) {why}")));
            }
        }
        Ok(())
    }
}

/// Outcome of a single hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Check {
    Pass,
    /// Verified on a finite sample only.
    SampledPass,
    Fail(String),
}

impl Check {
    pub fn ok(&self) -> bool {
        !matches!(self, Check::Fail(_))
    }
}

/// Constants `(α_floor, δ, c_floor)` witnessing H4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthData {
    pub alpha_floor: f64,
    pub exponent: f64,
    pub floor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h1: Check,
    pub h2: Check,
    pub h3: Check,
    pub h4: Check,
    pub growth: Option<GrowthData>,
}

impl HypothesisReport {
    pub fn checks(&self) -> [(&'static str, &Check); 4] {
        [("H1", &self.h1), ("H2", &self.h2), ("H3", &self.h3), ("H4", &self.h4)]
    }

    pub fn all_ok(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.ok())
    }
}

/// Saturation vector `k` (the absorbing box is `∏ [0, k_i]`) and the
/// smallness constant `α_{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationData {
    pub k: Vec<f64>,
    /// Sampled suprema before the safety multiplier.
    pub sampled_sup: Vec<f64>,
    pub alpha_half: Option<f64>,
}

/// Multiplier applied to the sampled supremum so `k` strictly dominates it.
pub const SATURATION_SAFETY: f64 = 1.05;
const REFINEMENT_RTOL: f64 = 1e-3;

/// `α_{i,n} n_i` for a direction `n ∈ S⁺`, i.e. the radius along `n`, measured
/// in component `i`, beyond which component `i` of the reaction is negative.
/// Returns 0 outside `F_i = (S⁺ ∩ {(Ln)_i >= 0}) \ e_i^⊥`.
fn saturation_level(model: &Model, i: usize, n: &[f64]) -> Result<f64> {
    let ln_i: f64 = model.l.row(i).iter().zip(n).map(|(a, b)| a * b).sum();
    if ln_i < 0.0 || n[i] <= 0.0 {
        return Ok(0.0);
    }
    match &model.comp {
        CompetitionField::LotkaVolterra { c } => {
            let cn: f64 = c.row(i).iter().zip(n).map(|(a, b)| a * b).sum();
            Ok(ln_i / cn)
        }
        CompetitionField::GrossPitaevskii { c } => {
            let cnn: f64 = c.row(i).iter().zip(n).map(|(a, b)| a * b * b).sum();
            Ok((ln_i * n[i] / cnn).sqrt())
        }
        CompetitionField::Custom(_) => {
            let f = |alpha: f64| -> f64 {
                let v: Vec<f64> = n.iter().map(|x| x * alpha).collect();
                ln_i - model.comp.eval(&v)[i] * n[i]
            };
            if ln_i == 0.0 {
                return Ok(0.0);
            }
            let mut hi = 1.0;
            let mut steps = 0;
            while f(hi) >= 0.0 {
                hi *= 2.0;
                steps += 1;
                if steps > 200 {
                    return Err(KppError::SamplingInconclusive(format!(
                        "reaction component {i} never saturates along {n:?}"
                    )));
                }
            }
            // last sign change below hi: scan downward geometrically, then bisect
            let mut lo = hi / 2.0;
            while lo > 1e-12 && f(lo) < 0.0 {
                lo /= 2.0;
            }
            if lo <= 1e-12 {
                return Ok(0.0);
            }
            let a = bisect(|x| Ok(f(x)), lo, hi, 1e-12)?;
            Ok(a * n[i])
        }
    }
}

fn refine_direction(model: &Model, i: usize, start: &[f64], start_val: f64) -> Result<(Vec<f64>, f64)> {
    let n = start.len();
    let mut best = start.to_vec();
    let mut best_val = start_val;
    let mut step = 0.1;
    while step > 1e-9 {
        let mut improved = false;
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut cand = best.clone();
                cand[j] += sign * step;
                if let Some(p) = project_positive(&cand) {
                    let v = saturation_level(model, i, &p)?;
                    if v > best_val {
                        best_val = v;
                        best = p;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, best_val))
}

fn sampled_supremum(model: &Model, i: usize, density: usize, seed: u64) -> Result<f64> {
    let samples = positive_sphere_samples(model.n(), density, seed);
    let mut scored: Vec<(f64, usize)> = samples
        .iter()
        .enumerate()
        .map(|(k, s)| saturation_level(model, i, s).map(|v| (v, k)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut sup = scored.first().map(|s| s.0).unwrap_or(0.0);
    for &(v, k) in scored.iter().take(8) {
        let (_, refined) = refine_direction(model, i, &samples[k], v)?;
        sup = sup.max(refined);
    }
    Ok(sup)
}

/// Saturation vector `k` with `k_i = 1.05 · sup_{n ∈ F_i} α_{i,n} n_i`.
///
/// The supremum is sampled on `S⁺` (`grid_density` points per angular
/// dimension), locally refined from the best samples, and re-sampled at doubled
/// density until two levels agree to a relative `1e-3`.
pub fn saturation_vector(model: &Model, grid_density: usize) -> Result<SaturationData> {
    model.require_valid()?;
    let n = model.n();
    let mut sampled_sup = Vec::with_capacity(n);
    for i in 0..n {
        let mut density = grid_density.max(4);
        let mut prev = sampled_supremum(model, i, density, i as u64)?;
        let mut settled = None;
        for level in 1..4 {
            density *= 2;
            let cur = sampled_supremum(model, i, density, (level * n + i) as u64)?;
            if (cur - prev).abs() <= REFINEMENT_RTOL * cur.abs().max(prev.abs()) {
                settled = Some(cur.max(prev));
                break;
            }
            prev = cur;
        }
        let sup = settled.ok_or_else(|| {
            KppError::SamplingInconclusive(format!(
                "saturation supremum for component {i} did not stabilize under refinement"
            ))
        })?;
        if !(sup > 0.0) {
            return Err(KppError::SamplingInconclusive(format!(
                "saturation supremum for component {i} is not positive"
            )));
        }
        sampled_sup.push(sup);
    }
    let alpha_half = match model.lambda_pf()? {
        lam if lam > 0.0 => Some(alpha_half(model)?),
        _ => None,
    };
    Ok(SaturationData {
        k: sampled_sup.iter().map(|s| s * SATURATION_SAFETY).collect(),
        sampled_sup,
        alpha_half,
    })
}

/// The absorbing map `g(m) = (max(m_i, k_i))_i`.
pub fn absorbing_bound(sat: &SaturationData, m: &[f64]) -> Vec<f64> {
    m.iter().zip(&sat.k).map(|(a, b)| a.max(*b)).collect()
}

/// `α_{1/2} = max{α > 0 : c(v) <= λ_PF(L)/2 for all v ∈ [0, α]^N}`.
pub fn alpha_half(model: &Model) -> Result<f64> {
    let lam = model.lambda_pf()?;
    if !(lam > 0.0) {
        return Err(KppError::HypothesisViolation(format!(
            "α_1/2 needs λ_PF(L) > 0, got {lam}"
        )));
    }
    match &model.comp {
        CompetitionField::LotkaVolterra { c } => Ok(lam / (2.0 * max_row_sum(c))),
        CompetitionField::GrossPitaevskii { c } => Ok((lam / (2.0 * max_row_sum(c))).sqrt()),
        CompetitionField::Custom(_) => {
            let n = model.n();
            let holds = |alpha: f64| {
                cube_points(n, alpha)
                    .iter()
                    .all(|v| model.comp.eval(v).iter().all(|ci| *ci <= lam / 2.0))
            };
            let mut hi = 1.0;
            let mut steps = 0;
            while holds(hi) {
                hi *= 2.0;
                steps += 1;
                if steps > 200 {
                    return Err(KppError::SamplingInconclusive(
                        "c stays below λ_PF/2 on every sampled cube".into(),
                    ));
                }
            }
            let mut lo = hi / 2.0;
            while !holds(lo) {
                lo /= 2.0;
                if lo < 1e-300 {
                    return Err(KppError::SamplingInconclusive(
                        "no positive α satisfies the α_1/2 bound".into(),
                    ));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-14 * hi {
                    break;
                }
                if holds(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(lo)
        }
    }
}

fn max_row_sum(c: &SquareMatrix) -> f64 {
    c.row_sums().into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Upper corner of `[0, α]^n`, every vertex for small `n`, and the midpoints of the edges from the corner.
fn cube_points(n: usize, alpha: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![alpha; n]];
    if n <= 10 {
        for mask in 0..(1usize << n) {
            pts.push((0..n).map(|j| if mask >> j & 1 == 1 { alpha } else { 0.0 }).collect());
        }
    }
    for j in 0..n {
        let mut v = vec![alpha; n];
        v[j] = 0.5 * alpha;
        pts.push(v);
    }
    pts
}
