//! Samples of the nonnegative part of the unit sphere `S⁺(0, 1) ⊂ R^n`.
//!
//! Low dimensions use deterministic lattices (uniform angles for `n = 2`,
//! a Fibonacci spiral for `n = 3`, a super-Fibonacci spiral for `n = 4`),
//! folded into the positive orthant by taking absolute values. Higher
//! dimensions fall back to seeded uniform-on-sphere draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::norm2;

/// Upper bound on the number of random samples drawn for `n > 4`.
pub const MAX_RANDOM_SAMPLES: usize = 20_000;

/// Roughly `density^(n-1)` points of `S⁺`, plus the coordinate vertices and
/// the normalized barycenter.
pub fn positive_sphere_samples(n: usize, density: usize, seed: u64) -> Vec<Vec<f64>> {
    let density = density.max(2);
    let mut out = match n {
        0 | 1 => vec![vec![1.0; n]],
        2 => (0..density)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_2 * k as f64 / (density - 1) as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => fibonacci_sphere(density * density),
        4 => super_fibonacci(density * density * density),
        _ => {
            let count = density
                .checked_pow((n - 1) as u32)
                .unwrap_or(usize::MAX)
                .min(MAX_RANDOM_SAMPLES);
            random_sphere(n, count, seed)
        }
    };
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        out.push(e);
    }
    out.push(vec![1.0 / (n as f64).sqrt(); n]);
    out
}

fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            vec![(r * phi.cos()).abs(), (r * phi.sin()).abs(), z.abs()]
        })
        .collect()
}

// Alexa, "Super-Fibonacci spirals" (2022): low-discrepancy points on S³.
fn super_fibonacci(count: usize) -> Vec<Vec<f64>> {
    const PHI: f64 = std::f64::consts::SQRT_2;
    const PSI: f64 = 1.533_751_168_755_204_3;
    let tau = 2.0 * std::f64::consts::PI;
    (0..count)
        .map(|k| {
            let s = k as f64 + 0.5;
            let t = s / count as f64;
            let r = t.sqrt();
            let big_r = (1.0 - t).sqrt();
            let a = tau * s / PHI;
            let b = tau * s / PSI;
            vec![
                (r * a.sin()).abs(),
                (r * a.cos()).abs(),
                (big_r * b.sin()).abs(),
                (big_r * b.cos()).abs(),
            ]
        })
        .collect()
}

fn random_sphere(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g.abs()
            })
            .collect();
        let norm = norm2(&v);
        if norm > 1e-12 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Projects a vector onto `S⁺` (clamp negatives, renormalize). Returns `None`
/// for the zero vector.
pub fn project_positive(v: &[f64]) -> Option<Vec<f64>> {
    let w: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let norm = norm2(&w);
    (norm > 0.0).then(|| w.into_iter().map(|x| x / norm).collect())
}
