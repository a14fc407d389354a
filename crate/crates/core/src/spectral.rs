//! Perron–Frobenius eigenpairs and principal eigenvalues of weakly coupled
//! second-order operators.
//!
//! Every matrix handled here is *essentially nonnegative* (Metzler) and
//! irreducible, so its rightmost eigenvalue is real, simple and carries a
//! positive eigenvector. Both solvers exploit that positivity: iterates stay in
//! the open positive cone, and the Collatz–Wielandt ratios
//! `min_i (Ax)_i / x_i <= λ_PF(A) <= max_i (Ax)_i / x_i` give a certified
//! enclosure of the eigenvalue at every step.

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{KppError, Result};
use crate::matrix::{dot, norm2, SquareMatrix};
use crate::optimize::golden_section;

pub const DEFAULT_PF_TOL: f64 = 1e-12;
pub const DEFAULT_GRID_TOL: f64 = 1e-10;

/// Dominant eigenvalue of an essentially nonnegative irreducible matrix with
/// its unit, strictly positive eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Result of a hypothesis check on a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixStructure {
    pub essentially_nonnegative: bool,
    pub irreducible: bool,
}

impl MatrixStructure {
    pub fn admissible(&self) -> bool {
        self.essentially_nonnegative && self.irreducible
    }
}

/// Off-diagonal sign check and strong connectivity of the coupling graph
/// (edge `i -> j` whenever `i != j` and `a[i][j] != 0`).
pub fn check_essentially_nonnegative_irreducible(a: &SquareMatrix) -> MatrixStructure {
    let n = a.n();
    let essentially_nonnegative = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] >= 0.0));
    let forward = reachable_from_first(n, |i, j| a[(i, j)] != 0.0);
    let backward = reachable_from_first(n, |i, j| a[(j, i)] != 0.0);
    MatrixStructure {
        essentially_nonnegative,
        irreducible: forward && backward,
    }
}

fn reachable_from_first(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if j != i && !seen[j] && edge(i, j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn require_admissible(a: &SquareMatrix, what: &str) -> Result<()> {
    if a.n() < 2 {
        return Err(KppError::HypothesisViolation(format!(
            "{what}: dimension must be at least 2, got {}",
            a.n()
        )));
    }
    let s = check_essentially_nonnegative_irreducible(a);
    if !s.essentially_nonnegative {
        return Err(KppError::HypothesisViolation(format!(
            "{what} has a negative off-diagonal entry"
        )));
    }
    if !s.irreducible {
        return Err(KppError::HypothesisViolation(format!("{what} is reducible")));
    }
    Ok(())
}

/// Collatz–Wielandt enclosure of `λ_PF(a)` from a positive vector.
fn collatz_wielandt(ax: &[f64], x: &[f64]) -> (f64, f64) {
    ax.iter()
        .zip(x)
        .map(|(y, v)| y / v)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Perron–Frobenius eigenpair `(λ_PF(A), n_PF(A))`.
///
/// Power iteration runs on the nonnegative primitive matrix
/// `A - min_i(a_ii) I + I`. When the observed contraction is poor (clustered
/// spectra, e.g. weak mutation between many classes) the iteration switches to
/// Wielandt-shifted inverse iteration, `x <- (σI - A)^{-1} x` with `σ` just
/// above the Collatz–Wielandt upper bound, which keeps iterates positive.
///
/// Convergence is declared once `|A n - λ n|_2 <= tol * max(1, |A|_inf)`.
pub fn perron_frobenius(a: &SquareMatrix, tol: f64) -> Result<SpectralPair> {
    require_admissible(a, "matrix")?;
    let n = a.n();
    let scale = a.norm_inf().max(1.0);
    let target = tol * scale;
    let cap = (100.0 * n as f64 * (1.0 / tol).ln()).ceil() as usize;
    let shift = 1.0 - a.min_diag();
    let b = a.shifted(shift);

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = a.matvec(&x);
    let mut residual = f64::INFINITY;
    let mut last_residual = f64::INFINITY;
    let mut slow_steps = 0usize;
    let mut wielandt = false;

    for it in 0..cap {
        let lambda = dot(&x, &ax);
        residual = ax
            .iter()
            .zip(&x)
            .map(|(y, v)| (y - lambda * v).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= target {
            return finish(x, lambda);
        }
        if !wielandt {
            if residual > 0.9 * last_residual {
                slow_steps += 1;
            }
            if it >= 30 && slow_steps > 10 {
                wielandt = true;
            }
        }
        last_residual = residual;

        let mut y = if wielandt {
            let (lo, hi) = collatz_wielandt(&ax, &x);
            let sigma = hi + (hi - lo).max(1e-3 * target);
            let m = SquareMatrix::from_fn(n, |i, j| if i == j { sigma - a[(i, j)] } else { -a[(i, j)] });
            match m.solve(&x) {
                Ok(y) if y.iter().all(|v| *v > 0.0 && v.is_finite()) => y,
                // fall back to a plain power step if the shifted system degenerates
                _ => b.matvec(&x),
            }
        } else {
            b.matvec(&x)
        };
        let norm = norm2(&y);
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;
        ax = a.matvec(&x);
    }
    Err(KppError::NoConvergence {
        method: "perron-frobenius power iteration",
        iterations: cap,
        residual,
    })
}

fn finish(mut x: Vec<f64>, lambda: f64) -> Result<SpectralPair> {
    let norm = norm2(&x);
    x.iter_mut().for_each(|v| *v /= norm);
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(KppError::NoConvergence {
            method: "perron-frobenius power iteration",
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok(SpectralPair {
        value: lambda,
        vector: x,
    })
}

/// `λ_PF(μ² D + L)`, the quantity `-κ_μ`.
pub fn pf_of_diffusion_shift(d: &[f64], l: &SquareMatrix, mu: f64, tol: f64) -> Result<SpectralPair> {
    let diag: Vec<f64> = d.iter().map(|di| mu * mu * di).collect();
    perron_frobenius(&l.plus_diag(&diag), tol)
}

/// Generalized principal eigenvalue of `-D d²/dξ² - c d/dξ - L` on the whole
/// line: `max_{μ >= 0} (κ_μ + μ c)` with `κ_μ = -λ_PF(μ² D + L)`.
///
/// The objective is concave in `μ`, so a golden-section search on a bracket
/// `[0, μ_max]` (doubled until the objective decreases) finds the maximum.
pub fn generalized_lambda1(d: &[f64], c: f64, l: &SquareMatrix) -> Result<f64> {
    require_admissible(l, "L")?;
    if c < 0.0 {
        return Err(KppError::InvalidInput("drift must be nonnegative".into()));
    }
    Ok(lambda1_with_argmax(d, c, l)?.0)
}

// (max, argmax) of μ ↦ κ_μ + μ c over μ >= 0, for c >= 0.
fn lambda1_with_argmax(d: &[f64], c: f64, l: &SquareMatrix) -> Result<(f64, f64)> {
    let objective = |mu: f64| -> Result<f64> { Ok(-pf_of_diffusion_shift(d, l, mu, DEFAULT_PF_TOL)?.value + mu * c) };
    let kappa0 = objective(0.0)?;
    if c == 0.0 {
        return Ok((kappa0, 0.0));
    }
    let mut hi = 1.0;
    let mut prev = kappa0;
    for _ in 0..60 {
        let v = objective(hi)?;
        if v < prev {
            break;
        }
        prev = v;
        hi *= 2.0;
    }
    let m = golden_section(|mu| objective(mu).map(|v| -v), 0.0, hi, 1e-10)?;
    if -m.fx > kappa0 {
        Ok((-m.fx, m.x))
    } else {
        Ok((kappa0, 0.0))
    }
}

/// Principal Dirichlet eigenpair of `-D d²/dξ² - c d/dξ - L` on `(-R, R)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletEigenResult {
    pub value: f64,
    /// `N` rows of `grid_size` samples, zero at both endpoints, max-normalized.
    pub eigenfunction: Vec<Vec<f64>>,
    pub radius: f64,
    pub grid_size: usize,
    /// Final Collatz–Wielandt enclosure width.
    pub enclosure: f64,
}

/// Principal eigenvalue of the central-difference discretization of
/// `-D d²/dξ² - c d/dξ - L` on `(-R, R)` with zero Dirichlet data, using
/// `m` grid points including the endpoints.
///
/// The grid is refined until the cell Péclet number `|c| h / min d` is below 2,
/// which makes the negated discrete operator essentially nonnegative. The
/// eigenvalue is found by shifted inverse iteration with shifts taken just
/// below the Collatz–Wielandt lower bound.
pub fn dirichlet_principal_eigenvalue(
    d: &[f64],
    c: f64,
    l: &SquareMatrix,
    radius: f64,
    m: usize,
) -> Result<DirichletEigenResult> {
    dirichlet_principal_eigenvalue_with_tol(d, c, l, radius, m, DEFAULT_GRID_TOL)
}

pub fn dirichlet_principal_eigenvalue_with_tol(
    d: &[f64],
    c: f64,
    l: &SquareMatrix,
    radius: f64,
    m: usize,
    tol: f64,
) -> Result<DirichletEigenResult> {
    require_admissible(l, "L")?;
    let n = l.n();
    if d.len() != n || d.iter().any(|v| !(*v > 0.0)) {
        return Err(KppError::HypothesisViolation(
            "diffusion rates must be positive, one per component".into(),
        ));
    }
    if !(radius > 0.0) || m < 16 {
        return Err(KppError::InvalidInput("need R > 0 and at least 16 grid points".into()));
    }
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut m = m;
    while c.abs() * (2.0 * radius / (m - 1) as f64) / dmin >= 2.0 {
        m = 2 * m - 1;
    }
    let h = 2.0 * radius / (m - 1) as f64;
    let interior = m - 2;
    let size = interior * n;

    // Iterate on e^{γξ} φ with γ the whole-line decay rate, which keeps the
    // iterate O(1) even when the drift makes φ span hundreds of decades.
    let gamma = c.signum() * lambda1_with_argmax(d, c.abs(), l)?.1;
    let (up, down) = ((-gamma * h).exp(), (gamma * h).exp());

    let assemble = |sigma: f64| -> BandedMatrix {
        let mut a = BandedMatrix::zeros(size, n, n);
        for j in 0..interior {
            for i in 0..n {
                let row = j * n + i;
                a.add(row, row, 2.0 * d[i] / (h * h) - sigma);
                for k in 0..n {
                    a.add(row, j * n + k, -l[(i, k)]);
                }
                if j + 1 < interior {
                    a.add(row, (j + 1) * n + i, up * (-d[i] / (h * h) - c / (2.0 * h)));
                }
                if j > 0 {
                    a.add(row, (j - 1) * n + i, down * (-d[i] / (h * h) + c / (2.0 * h)));
                }
            }
        }
        a
    };
    let op = assemble(0.0);

    let mut x: Vec<f64> = (0..size)
        .map(|row| {
            let j = row / n;
            (std::f64::consts::PI * (j + 1) as f64 / (m - 1) as f64).sin()
        })
        .collect();
    let mut ax = op.matvec(&x);
    let mut gap = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..200 {
        let (lo, hi) = collatz_wielandt(&ax, &x);
        let prev = gap;
        gap = hi - lo;
        let lambda = 0.5 * (lo + hi);
        // Near the Dirichlet ends x is tiny and the ratios (Ax)_i / x_i carry
        // roundoff of order eps |A| / x_i, which can floor the enclosure above
        // tol. Accept a small enclosure that has stopped shrinking.
        stalled = if gap > 0.5 * prev { stalled + 1 } else { 0 };
        let floor_hit = stalled >= 3 && gap <= tol.sqrt() * lambda.abs().max(1.0);
        if gap <= tol * lambda.abs().max(1.0) || floor_hit {
            return Ok(DirichletEigenResult {
                value: lambda,
                eigenfunction: unpack(&x, n, m, gamma, h),
                radius,
                grid_size: m,
                enclosure: gap,
            });
        }
        let sigma = lo - gap.max(tol);
        let lu = assemble(sigma).factor()?;
        let mut y = lu.solve(&x);
        let scale = y.iter().cloned().fold(0.0, f64::max);
        if !(scale > 0.0) || y.iter().any(|v| !(*v > 0.0)) {
            break;
        }
        y.iter_mut().for_each(|v| *v /= scale);
        x = y;
        ax = op.matvec(&x);
    }
    Err(KppError::NoConvergence {
        method: "dirichlet inverse iteration",
        iterations: 200,
        residual: gap,
    })
}

fn unpack(x: &[f64], n: usize, m: usize, gamma: f64, h: f64) -> Vec<Vec<f64>> {
    // Undo the scaling in log space, then max-normalize.
    let logs: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(row, v)| v.ln() - gamma * h * (row / n + 1) as f64)
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut rows = vec![vec![0.0; m]; n];
    for (row, lv) in logs.iter().enumerate() {
        rows[row % n][row / n + 1] = (lv - top).exp();
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn structure_examples() {
        let s = check_essentially_nonnegative_irreducible(&m(&[&[-1.0, 1.0], &[1.0, -1.0]]));
        assert!(s.essentially_nonnegative && s.irreducible);
        let s = check_essentially_nonnegative_irreducible(&m(&[&[1.0, 0.0], &[0.0, 1.0]]));
        assert!(s.essentially_nonnegative && !s.irreducible);
        let s = check_essentially_nonnegative_irreducible(&m(&[&[0.0, -1.0], &[1.0, 0.0]]));
        assert!(!s.essentially_nonnegative && s.irreducible);
    }

    #[test]
    fn one_way_chain_is_reducible() {
        let a = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        assert!(!check_essentially_nonnegative_irreducible(&a).irreducible);
    }

    #[test]
    fn permutation_matrix_pair() {
        let p = perron_frobenius(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), 1e-12).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert!((p.vector[0] - s).abs() < 1e-12 && (p.vector[1] - s).abs() < 1e-12);
    }

    #[test]
    fn reducible_input_is_rejected() {
        let err = perron_frobenius(&SquareMatrix::identity(2), 1e-12).unwrap_err();
        assert!(matches!(err, KppError::HypothesisViolation(_)));
    }

    #[test]
    fn one_by_one_is_rejected() {
        let err = perron_frobenius(&SquareMatrix::identity(1), 1e-12).unwrap_err();
        assert!(matches!(err, KppError::HypothesisViolation(_)));
    }

    #[test]
    fn clustered_spectrum_still_converges() {
        // r I + 0.001 M_Lap,12: top spectral gap about 7e-5
        let n = 12;
        let lap = SquareMatrix::from_fn(n, |i, j| {
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
        });
        let a = lap.scaled(0.001).shifted(1.0);
        let p = perron_frobenius(&a, 1e-12).unwrap();
        assert!((p.value - 1.0).abs() < 1e-11);
        for v in &p.vector {
            assert!((v - 1.0 / (n as f64).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn generalized_lambda1_scalar_like_closed_form() {
        // equal diffusion: max_mu (-(mu^2 + 1) + mu c) = c^2/4 - 1
        let l = m(&[&[0.9, 0.1], &[0.1, 0.9]]);
        for c in [0.0, 1.0, 2.0, 3.0] {
            let v = generalized_lambda1(&[1.0, 1.0], c, &l).unwrap();
            assert!((v - (c * c / 4.0 - 1.0)).abs() < 1e-9, "c={c}: {v}");
        }
    }

    #[test]
    fn dirichlet_scalar_like_matches_sine_mode() {
        // equal diffusion, no drift: eigenvalue = -λ_PF(L) + d (π / 2R)^2 up to O(h^2)
        let l = m(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        let r = 5.0;
        let res = dirichlet_principal_eigenvalue(&[1.0, 1.0], 0.0, &l, r, 401).unwrap();
        let h = 2.0 * r / 400.0;
        let k = std::f64::consts::PI / (2.0 * r);
        let discrete = 2.0 * (1.0 - (k * h).cos()) / (h * h);
        assert!((res.value - discrete).abs() < 1e-9, "{} vs {discrete}", res.value);
        for row in &res.eigenfunction {
            assert_eq!(row[0], 0.0);
            assert_eq!(*row.last().unwrap(), 0.0);
            assert!(row[1..row.len() - 1].iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn dirichlet_refines_for_peclet() {
        let l = m(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        let res = dirichlet_principal_eigenvalue(&[0.1, 0.1], 3.0, &l, 10.0, 16).unwrap();
        let h = 20.0 / (res.grid_size - 1) as f64;
        assert!(3.0 * h / 0.1 < 2.0);
    }
}
