//! Derivative-free scalar searches.

use crate::error::{KppError, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimum located by [`golden_section`].
#[derive(Debug, Clone, Copy)]
pub struct ScalarMin {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `tol * max(1, |x|)`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<ScalarMin>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while (b - a) > tol * x1.abs().max(1.0) {
        iterations += 1;
        if iterations > 500 {
            return Err(KppError::NoConvergence {
                method: "golden section",
                iterations,
                residual: b - a,
            });
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(ScalarMin { x, fx, iterations })
}

/// Bracket `[lo, hi]` (with `lo > 0`) grown geometrically until the minimum of a
/// unimodal `f` is interior: `f(lo)` and `f(hi)` both exceed the value at an
/// interior sample.
pub fn expand_positive_bracket<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    factor: f64,
    max_expansions: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..max_expansions {
        let xs = log_grid(lo, hi, 17);
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
        let (imin, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        if imin == 0 {
            lo /= factor;
        } else if imin == xs.len() - 1 {
            hi *= factor;
        } else {
            return Ok((xs[imin - 1], xs[imin + 1]));
        }
    }
    Err(KppError::NoConvergence {
        method: "bracket expansion",
        iterations: max_expansions,
        residual: f64::NAN,
    })
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(KppError::InvalidInput(format!(
            "bisection needs a sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= tol * mid.abs().max(1.0) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `count` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let m = golden_section(|x| Ok((x - 1.3).powi(2) + 2.0), 0.0, 5.0, 1e-10).unwrap();
        // a flat minimum pins x only to about sqrt(machine epsilon)
        assert!((m.x - 1.3).abs() < 1e-7);
        assert!((m.fx - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bracket_grows_to_contain_minimum() {
        let (a, b) = expand_positive_bracket(|x| Ok(x + 400.0 / x), 1e-3, 10.0, 4.0, 60).unwrap();
        assert!(a < 20.0 && 20.0 < b);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }
}
