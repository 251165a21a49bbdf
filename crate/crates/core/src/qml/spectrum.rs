use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{Evaluation, VqcModel};
use super::QmlError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub frequency: i64,
    pub value: Complex64,
}

/// Discrete Fourier coefficients of `f` along feature `feature`, sampled at
/// `x_j = 2πg/grid` with the other features taken from `base_x`.
///
/// Coefficients are `c_w = (1/G) Σ_g f(x_g) e^{-i w x_g}` for
/// `w = -⌊(G-1)/2⌋ ..= ⌊G/2⌋`, in increasing frequency order.
pub fn spectrum_probe(
    model: &VqcModel,
    base_x: &[f64],
    feature: usize,
    grid: usize,
    eval: Evaluation,
) -> Result<Vec<FourierCoefficient>, QmlError> {
    if matches!(eval, Evaluation::Shots { .. }) {
        return Err(QmlError::Unsupported("spectrum probing needs exact probabilities".into()));
    }
    if base_x.len() != model.feature_dim() {
        return Err(QmlError::InvalidArgument(format!(
            "{} features for a {}-feature model",
            base_x.len(),
            model.feature_dim()
        )));
    }
    if feature >= base_x.len() {
        return Err(QmlError::InvalidArgument(format!("feature {feature} out of range")));
    }
    let min_grid = 2 * model.photons() + 2;
    if grid < min_grid {
        return Err(QmlError::InvalidArgument(format!(
            "grid of {grid} points cannot resolve {} photons (need ≥ {min_grid})",
            model.photons()
        )));
    }

    let mut x = base_x.to_vec();
    let samples: Vec<f64> = (0..grid)
        .map(|g| {
            x[feature] = TAU * g as f64 / grid as f64;
            model.eval(&x, Evaluation::Exact)
        })
        .collect::<Result<_, _>>()?;

    let g = grid as i64;
    let lo = -((g - 1) / 2);
    Ok((lo..=g / 2)
        .map(|w| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(k, f)| *f * Complex64::from_polar(1.0, -TAU * (w * k as i64) as f64 / grid as f64))
                .sum();
            FourierCoefficient {
                frequency: w,
                value: sum / grid as f64,
            }
        })
        .collect())
}
