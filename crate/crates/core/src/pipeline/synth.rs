use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::featurize::{FeatureVector, Label};

/// Two isotropic 2-d Gaussian blobs centred at `±(separation/2)·(1,1)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobParams {
    pub per_class: usize,
    /// Distance between the two centres.
    pub separation: f64,
    /// Standard deviation of each coordinate.
    pub spread: f64,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            per_class: 67,
            separation: 6.0,
            spread: 1.0,
        }
    }
}

impl BlobParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.per_class < 2 {
            return Err(format!("per_class must be ≥ 2, got {}", self.per_class));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(format!("separation must be finite and ≥ 0, got {}", self.separation));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(format!("spread must be positive, got {}", self.spread));
        }
        Ok(())
    }
}

/// Interleaved +1 / −1 samples with ids `blob-0000`, `blob-0001`, ...
pub fn synth_blobs(params: &BlobParams, seed: u64) -> Result<Vec<FeatureVector>, String> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.spread).map_err(|e| e.to_string())?;
    let c = params.separation / 2.0 / std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(2 * params.per_class);
    for i in 0..2 * params.per_class {
        let (centre, label) = if i % 2 == 0 { (c, Label::Plus) } else { (-c, Label::Minus) };
        let values = vec![centre + noise.sample(&mut rng), centre + noise.sample(&mut rng)];
        out.push(FeatureVector::new(format!("blob-{i:04}"), values, label));
    }
    Ok(out)
}
