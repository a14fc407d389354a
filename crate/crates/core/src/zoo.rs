//! Builders for the discretized application systems: mutation–competition
//! Lotka–Volterra, the cane toads equation with local or nonlocal trait
//! mutations, and the age-structured Gurtin–MacCamy system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KppError, Result};
use crate::matrix::SquareMatrix;
use crate::model::Model;

/// A real function of one variable, given in closed form or tabulated at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampled {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-x² / (2 width²))`.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `intercept + slope * x`.
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// `value` on `[from, ∞)`, zero before.
    Step {
        from: f64,
        value: f64,
    },
    /// Values at the grid nodes, in order.
    Table {
        values: Vec<f64>,
    },
}

impl Sampled {
    /// Values at `nodes`; a table must have exactly one entry per node.
    pub fn at(&self, nodes: &[f64]) -> Result<Vec<f64>> {
        let out: Vec<f64> = match self {
            Sampled::Table { values } => {
                if values.len() != nodes.len() {
                    return Err(KppError::InvalidInput(format!(
                        "table has {} values for {} nodes",
                        values.len(),
                        nodes.len()
                    )));
                }
                values.clone()
            }
            _ => nodes.iter().map(|&x| self.eval(x)).collect(),
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(KppError::InvalidInput("sampled function is not finite".into()));
        }
        Ok(out)
    }

    /// Closed-form value; tables evaluate to NaN here.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Sampled::Constant { value } => value,
            Sampled::Gaussian { amplitude, width } => amplitude * (-x * x / (2.0 * width * width)).exp(),
            Sampled::Linear { intercept, slope } => intercept + slope * x,
            Sampled::Step { from, value } => {
                if x >= from {
                    value
                } else {
                    0.0
                }
            }
            Sampled::Table { .. } => f64::NAN,
        }
    }
}

/// A real function of two variables sampled on the node grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampled2 {
    Constant {
        value: f64,
    },
    /// `f(x) g(y)`.
    Separable {
        f: Sampled,
        g: Sampled,
    },
    Table {
        values: SquareMatrix,
    },
}

impl Sampled2 {
    pub fn at(&self, nodes: &[f64]) -> Result<SquareMatrix> {
        let n = nodes.len();
        match self {
            Sampled2::Constant { value } => Ok(SquareMatrix::from_fn(n, |_, _| *value)),
            Sampled2::Separable { f, g } => {
                let (fx, gy) = (f.at(nodes)?, g.at(nodes)?);
                Ok(SquareMatrix::from_fn(n, |i, j| fx[i] * gy[j]))
            }
            Sampled2::Table { values } => {
                if values.n() != n {
                    return Err(KppError::InvalidInput("kernel table has the wrong size".into()));
                }
                Ok(values.clone())
            }
        }
    }
}

/// The discrete Neumann Laplacian `M_Lap,N`: tridiagonal `1, -2, 1` with
/// corner diagonal entries `-1`, so that every row sums to zero.
pub fn laplacian_matrix(n: usize) -> Result<SquareMatrix> {
    if n < 2 {
        return Err(KppError::InvalidInput(format!("laplacian needs N >= 2, got {n}")));
    }
    Ok(SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            if i == 0 || i == n - 1 {
                -1.0
            } else {
                -2.0
            }
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Lotka–Volterra system with growth rates `r` and nearest-neighbour
/// mutations at rate `mutation`: `L = diag(r) + mutation * M_Lap,N`.
pub fn lv_mutation(d: Vec<f64>, r: &[f64], mutation: f64, c: SquareMatrix) -> Result<Model> {
    if !(mutation > 0.0) {
        return Err(KppError::InvalidInput("mutation rate must be positive".into()));
    }
    let l = laplacian_matrix(r.len())?.scaled(mutation).plus_diag(r);
    let model = Model::lotka_volterra(d, l, c)?;
    model.require_valid()?;
    Ok(model)
}

/// Parameters of the trait-discretized cane toads equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToadsParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub r: f64,
    pub alpha: f64,
}

impl Default for ToadsParams {
    fn default() -> Self {
        Self {
            n: 10,
            theta_min: 1.0,
            theta_max: 10.0,
            r: 1.0,
            alpha: 1.0,
        }
    }
}

impl ToadsParams {
    pub fn check(&self) -> Result<()> {
        let ok = self.n >= 2
            && self.theta_min > 0.0
            && self.theta_max.is_finite()
            && self.theta_max > self.theta_min
            && self.r > 0.0
            && self.alpha > 0.0;
        if ok {
            Ok(())
        } else {
            Err(KppError::InvalidInput(format!(
                "toads parameters need N >= 2, 0 < θ_min < θ_max < ∞, r > 0, α > 0; got {self:?}"
            )))
        }
    }

    /// Trait step `θ_N = (θ_max - θ_min) / (N - 1)`.
    pub fn step(&self) -> f64 {
        (self.theta_max - self.theta_min) / (self.n - 1) as f64
    }

    /// Trait nodes `θ_min + (i - 1) θ_N`, which double as diffusion rates.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|i| self.theta_min + i as f64 * h).collect()
    }
}

/// Cane toads with local mutations:
/// `d_i = θ_i`, `L = r I + (α/θ_N²) M_Lap,N`, `C = θ_N 1_N`.
pub fn toads_local(p: &ToadsParams) -> Result<Model> {
    p.check()?;
    let h = p.step();
    let l = laplacian_matrix(p.n)?.scaled(p.alpha / (h * h)).shifted(p.r);
    let model = Model::lotka_volterra(p.nodes(), l, SquareMatrix::from_fn(p.n, |_, _| h))?;
    model.require_valid()?;
    Ok(model)
}

/// Cane toads with nonlocal mutations:
/// `L = (r - α) I + α θ_N (K((i - j) θ_N))`, `C = θ_N 1_N`.
///
/// `r > α` is sufficient for `λ_PF(L) > 0`, since `λ_PF(L) >= r - α`.
pub fn toads_nonlocal(p: &ToadsParams, kernel: &Sampled) -> Result<Model> {
    p.check()?;
    if matches!(kernel, Sampled::Table { .. }) {
        return Err(KppError::InvalidInput(
            "the mutation kernel is sampled at differences of nodes and must be given in closed form".into(),
        ));
    }
    let h = p.step();
    let n = p.n;
    let mut l = SquareMatrix::from_fn(n, |i, j| p.alpha * h * kernel.eval((i as f64 - j as f64) * h));
    if l.as_slice().iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(KppError::InvalidInput("mutation kernel must be nonnegative".into()));
    }
    l = l.shifted(p.r - p.alpha);
    let model = Model::lotka_volterra(p.nodes(), l, SquareMatrix::from_fn(n, |_, _| h))?;
    model.require_valid()?;
    Ok(model)
}

/// Parameters of the age-discretized Gurtin–MacCamy system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GurtinParams {
    #[serde(rename = "N")]
    pub n: usize,
    /// Maximal age `A`.
    #[serde(rename = "A")]
    pub max_age: f64,
    /// Maturation age `a_m`.
    pub a_m: f64,
    pub d: Sampled,
    pub r: Sampled,
    #[serde(rename = "C")]
    pub c: Sampled2,
    #[serde(rename = "K")]
    pub k: Sampled,
}

impl Default for GurtinParams {
    fn default() -> Self {
        Self {
            n: 20,
            max_age: 1.0,
            a_m: 0.3,
            d: Sampled::Constant { value: 1.0 },
            r: Sampled::Constant { value: 0.1 },
            c: Sampled2::Constant { value: 1.0 },
            k: Sampled::Constant { value: 5.0 },
        }
    }
}

impl GurtinParams {
    /// Age step `a_{N+1} = A / N`.
    pub fn step(&self) -> f64 {
        self.max_age / self.n as f64
    }

    /// Age nodes `a_i = (i - 1) A / N`.
    pub fn ages(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|i| i as f64 * h).collect()
    }

    /// Zero-based index of the first node with `a_j >= a_m`.
    pub fn maturity_index(&self) -> Option<usize> {
        self.ages().iter().position(|&a| a >= self.a_m)
    }

    fn check(&self) -> Result<()> {
        if self.n < 2 || !(self.max_age > 0.0) || !(self.a_m >= 0.0 && self.a_m < self.max_age) {
            return Err(KppError::InvalidInput(format!(
                "Gurtin–MacCamy needs N >= 2, A > 0 and 0 <= a_m < A; got N={}, A={}, a_m={}",
                self.n, self.max_age, self.a_m
            )));
        }
        Ok(())
    }
}

/// The three parts of the Gurtin–MacCamy linear operator.
#[derive(Debug, Clone)]
pub struct GurtinMatrices {
    pub mortality: SquareMatrix,
    pub birth: SquareMatrix,
    pub aging: SquareMatrix,
}

pub fn gurtin_matrices(p: &GurtinParams) -> Result<GurtinMatrices> {
    p.check()?;
    let n = p.n;
    let h = p.step();
    let ages = p.ages();
    let jm = p
        .maturity_index()
        .ok_or_else(|| KppError::InvalidInput("no age node past maturation".into()))?;
    let r = p.r.at(&ages)?;
    let k = p.k.at(&ages)?;
    if k.iter().any(|v| *v < 0.0) {
        return Err(KppError::InvalidInput("birth rate must be nonnegative".into()));
    }
    let mortality = SquareMatrix::from_diag(&r.iter().map(|v| -v).collect::<Vec<_>>());
    let birth = SquareMatrix::from_fn(n, |i, j| if i == 0 && j >= jm { h * k[j] } else { 0.0 });
    let aging = SquareMatrix::from_fn(n, |i, j| {
        if i == 0 {
            0.0
        } else if j + 1 == i {
            1.0 / h
        } else if i == j {
            -1.0 / h
        } else {
            0.0
        }
    });
    Ok(GurtinMatrices {
        mortality,
        birth,
        aging,
    })
}

/// Gurtin–MacCamy: `L = L_mortality + L_birth + L_aging`, `d_i = d(a_i)`,
/// `C = a_{N+1} (C(a_i, a_j))`.
pub fn gurtin_maccamy(p: &GurtinParams) -> Result<Model> {
    let parts = gurtin_matrices(p)?;
    let ages = p.ages();
    let l = parts.mortality.add(&parts.birth).add(&parts.aging);
    let c = p.c.at(&ages)?.scaled(p.step());
    if c.as_slice().iter().any(|v| *v < 0.0) {
        return Err(KppError::InvalidInput("competition kernel must be nonnegative".into()));
    }
    let model = Model::lotka_volterra(p.d.at(&ages)?, l, c)?;
    model.require_valid()?;
    Ok(model)
}

/// `‖L - Lᵀ‖_F / ‖L + Lᵀ‖_F`.
pub fn asymmetry_index(l: &SquareMatrix) -> f64 {
    let t = l.transpose();
    l.sub(&t).frobenius() / l.add(&t).frobenius()
}

/// Seeded random essentially nonnegative irreducible matrix: a directed cycle
/// through every index plus random extra off-diagonal entries.
pub fn random_essentially_nonnegative(n: usize, seed: u64) -> SquareMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = if i == j {
                rng.random_range(-2.0..2.0)
            } else if j == (i + 1) % n || rng.random_bool(0.5) {
                rng.random_range(0.05..1.0)
            } else {
                0.0
            };
        }
    }
    a
}

/// Seeded random Lotka–Volterra model with `λ_PF(L) > 0` and `C ≫ 0`.
pub fn random_lv_model(n: usize, seed: u64) -> Result<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut l = random_essentially_nonnegative(n, seed);
    let lam = crate::spectral::perron_frobenius(&l, crate::spectral::DEFAULT_PF_TOL)?.value;
    if lam <= 0.05 {
        l = l.shifted(0.05 + rng.random_range(0.0..1.0) - lam);
    }
    let d = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let c = SquareMatrix::from_fn(n, |_, _| rng.random_range(0.1..2.0));
    let model = Model::lotka_volterra(d, l, c)?;
    model.require_valid()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_displays() {
        assert_eq!(
            laplacian_matrix(2).unwrap().rows(),
            vec![vec![-1.0, 1.0], vec![1.0, -1.0]]
        );
        assert_eq!(
            laplacian_matrix(3).unwrap().rows(),
            vec![vec![-1.0, 1.0, 0.0], vec![1.0, -2.0, 1.0], vec![0.0, 1.0, -1.0]]
        );
        assert!(laplacian_matrix(7).unwrap().row_sums().iter().all(|s| *s == 0.0));
        assert!(laplacian_matrix(1).is_err());
    }

    #[test]
    fn gurtin_nodes_and_maturity() {
        let p = GurtinParams {
            n: 4,
            max_age: 1.0,
            a_m: 0.5,
            ..GurtinParams::default()
        };
        assert_eq!(p.ages(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(p.maturity_index(), Some(2));
    }

    #[test]
    fn sampled_table_length_checked() {
        let t = Sampled::Table { values: vec![1.0, 2.0] };
        assert!(t.at(&[0.0, 1.0, 2.0]).is_err());
        assert_eq!(t.at(&[0.0, 1.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn toads_rejects_unbounded_traits() {
        let p = ToadsParams {
            theta_max: f64::INFINITY,
            ..ToadsParams::default()
        };
        assert!(toads_local(&p).is_err());
    }
}
