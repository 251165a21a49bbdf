use std::f64::consts::{PI, TAU};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::QmlError;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpOptions {
    /// Quasi-random proposals made before the surrogate is used.
    pub n_init: usize,
    /// Uniform candidates scored by expected improvement.
    pub candidates: usize,
    /// Diagonal noise added to the kernel matrix.
    pub jitter: f64,
    /// Squared-exponential length scale on θ/2π coordinates.
    pub length_scale: f64,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            n_init: 5,
            candidates: 256,
            jitter: 1e-6,
            length_scale: 1.0,
        }
    }
}

impl GpOptions {
    pub fn validate(&self) -> Result<(), QmlError> {
        if self.candidates == 0 {
            return Err(QmlError::Configuration("GP candidate count must be ≥ 1".into()));
        }
        if !(self.jitter > 0.0 && self.jitter.is_finite()) {
            return Err(QmlError::Configuration(format!("GP jitter {} must be positive", self.jitter)));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(QmlError::Configuration(format!(
                "GP length scale {} must be positive",
                self.length_scale
            )));
        }
        Ok(())
    }
}

/// Zero-mean GP with unit signal variance fitted to standardized losses.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    points: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    best: f64,
    length_scale: f64,
}

fn normalized(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t / TAU).collect()
}

fn check_history(history: &[(Vec<f64>, f64)], dim: usize) -> Result<(), QmlError> {
    for (i, (theta, y)) in history.iter().enumerate() {
        if theta.len() != dim {
            return Err(QmlError::InvalidHistory(format!(
                "entry {i} has {} coordinates, expected {dim}",
                theta.len()
            )));
        }
        if !y.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(QmlError::InvalidHistory(format!("entry {i} is not finite")));
        }
    }
    Ok(())
}

impl GpSurrogate {
    pub fn fit(history: &[(Vec<f64>, f64)], opts: &GpOptions) -> Result<Self, QmlError> {
        opts.validate()?;
        let Some((first, _)) = history.first() else {
            return Err(QmlError::InvalidHistory("cannot fit a surrogate to an empty history".into()));
        };
        check_history(history, first.len())?;

        let n = history.len();
        let points: Vec<Vec<f64>> = history.iter().map(|(t, _)| normalized(t)).collect();
        let ys: Vec<f64> = history.iter().map(|(_, y)| *y).collect();
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(n, ys.iter().map(|v| (v - y_mean) / y_scale));

        let l = opts.length_scale;
        let mut k = DMatrix::from_fn(n, n, |i, j| kernel(&points[i], &points[j], l));
        for i in 0..n {
            k[(i, i)] += opts.jitter;
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| QmlError::Solver("GP kernel matrix is not positive definite".into()))?;
        let alpha = chol.solve(&y);
        let best = y.min();
        Ok(Self {
            points,
            chol,
            alpha,
            y_mean,
            y_scale,
            best,
            length_scale: l,
        })
    }

    /// Posterior mean and standard deviation in standardized units.
    fn posterior(&self, theta: &[f64]) -> (f64, f64) {
        let x = normalized(theta);
        let ks = DVector::from_iterator(self.points.len(), self.points.iter().map(|p| kernel(p, &x, self.length_scale)));
        let mu = ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("Cholesky factor has a nonzero diagonal");
        let var = (1.0 - v.dot(&v)).max(0.0);
        (mu, var.sqrt())
    }

    /// Posterior mean and standard deviation of the loss at `theta`.
    pub fn predict(&self, theta: &[f64]) -> (f64, f64) {
        let (mu, sd) = self.posterior(theta);
        (self.y_mean + self.y_scale * mu, self.y_scale * sd)
    }

    /// Expected improvement below the incumbent, in standardized units.
    pub fn expected_improvement(&self, theta: &[f64]) -> f64 {
        let (mu, sd) = self.posterior(theta);
        let gain = self.best - mu;
        if sd <= 0.0 {
            return gain.max(0.0);
        }
        let z = gain / sd;
        let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        let pdf = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        (gain * cdf + sd * pdf).max(0.0)
    }
}

fn kernel(a: &[f64], b: &[f64], length_scale: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-0.5 * d2 / (length_scale * length_scale)).exp()
}

/// `count` uniform points in `[0, 2π)^dim`.
pub fn candidate_set(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(0.0..TAU)).collect()).collect()
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut n = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0) {
            out.push(n);
        }
        n += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// Halton point `index` with a seeded Cranley–Patterson rotation, scaled to `[0, 2π)`.
fn initial_point(dim: usize, index: u64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    primes(dim)
        .into_iter()
        .map(|base| {
            let shift: f64 = rng.random_range(0.0..1.0);
            let t = (radical_inverse(index, base) + shift).fract() * TAU;
            if t < TAU {
                t
            } else {
                0.0
            }
        })
        .collect()
}

/// Next θ to evaluate given the `(θ, loss)` history.
///
/// The first `n_init` proposals walk a shifted Halton sequence; afterwards
/// the expected-improvement maximizer over seeded uniform candidates is
/// returned.
pub fn gp_propose(history: &[(Vec<f64>, f64)], dim: usize, opts: &GpOptions, seed: u64) -> Result<Vec<f64>, QmlError> {
    if dim == 0 {
        return Err(QmlError::InvalidArgument("θ must have at least one coordinate".into()));
    }
    opts.validate()?;
    check_history(history, dim)?;
    if history.len() < opts.n_init {
        return Ok(initial_point(dim, history.len() as u64 + 1, seed));
    }
    let gp = GpSurrogate::fit(history, opts)?;
    let candidates = candidate_set(dim, opts.candidates, derive_seed(seed, &[history.len() as u64]));
    let mut best = 0;
    let mut best_ei = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let ei = gp.expected_improvement(c);
        if ei > best_ei {
            best_ei = ei;
            best = i;
        }
    }
    Ok(candidates.into_iter().nth(best).expect("candidate set is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_bounds(t: &[f64]) -> bool {
        t.iter().all(|v| (0.0..TAU).contains(v))
    }

    #[test]
    fn initial_design_is_deterministic() {
        let opts = GpOptions::default();
        let a = gp_propose(&[], 40, &opts, 11).unwrap();
        let b = gp_propose(&[], 40, &opts, 11).unwrap();
        let c = gp_propose(&[], 40, &opts, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(in_bounds(&a) && in_bounds(&c));

        // successive initial points differ
        let h = vec![(a.clone(), 1.0)];
        let next = gp_propose(&h, 40, &opts, 11).unwrap();
        assert_ne!(next, a);
    }

    #[test]
    fn halton_reference_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn duplicate_points_fit() {
        let h = vec![(vec![1.0, 2.0], 0.3), (vec![1.0, 2.0], 0.3)];
        let gp = GpSurrogate::fit(&h, &GpOptions::default()).unwrap();
        let (mu, _) = gp.predict(&[1.0, 2.0]);
        assert!((mu - 0.3).abs() < 1e-6);
    }

    #[test]
    fn interpolates_observations() {
        let h: Vec<_> = [0.0, 3.0, 6.0].iter().map(|&t: &f64| (vec![t], (t - 2.5).powi(2))).collect();
        let gp = GpSurrogate::fit(&h, &GpOptions::default()).unwrap();
        for (t, y) in &h {
            let (mu, sd) = gp.predict(t);
            assert!((mu - y).abs() < 1e-2, "{mu} vs {y}");
            assert!(sd < 1e-2);
        }
    }

    #[test]
    fn proposal_maximizes_ei_over_candidates() {
        let opts = GpOptions::default();
        let h: Vec<_> = (0..8)
            .map(|i| {
                let t = TAU * (i as f64 + 0.5) / 8.0;
                (vec![t], (t - PI).powi(2))
            })
            .collect();
        let seed = 99;
        let pick = gp_propose(&h, 1, &opts, seed).unwrap();
        let gp = GpSurrogate::fit(&h, &opts).unwrap();
        let cands = candidate_set(1, opts.candidates, derive_seed(seed, &[h.len() as u64]));
        assert!(cands.contains(&pick));
        let ei = gp.expected_improvement(&pick);
        for c in &cands {
            assert!(ei >= gp.expected_improvement(c));
        }
    }

    #[test]
    fn inconsistent_history() {
        let h = vec![(vec![0.1, 0.2], 1.0), (vec![0.1], 0.5)];
        assert!(matches!(gp_propose(&h, 2, &GpOptions::default(), 0), Err(QmlError::InvalidHistory(_))));
        let h = vec![(vec![0.1, 0.2], 1.0)];
        assert!(matches!(gp_propose(&h, 3, &GpOptions::default(), 0), Err(QmlError::InvalidHistory(_))));
        let h = vec![(vec![0.1], f64::NAN)];
        assert!(matches!(gp_propose(&h, 1, &GpOptions::default(), 0), Err(QmlError::InvalidHistory(_))));
    }
}
