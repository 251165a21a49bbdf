use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::FeaturizeError;

/// Binary class label, serialized as `1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i64")]
pub enum Label {
    /// +1 (VIS).
    Plus,
    /// -1 (NIR).
    Minus,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Plus => 1.0,
            Label::Minus => -1.0,
        }
    }

    /// Sign with `sign(0) = +1`.
    pub fn from_score(f: f64) -> Self {
        if f >= 0.0 {
            Label::Plus
        } else {
            Label::Minus
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Plus => 1,
            Label::Minus => -1,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = String;
    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Label::Plus),
            -1 => Ok(Label::Minus),
            other => Err(format!("label {other} is not +1 or -1")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
    pub label: Label,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>, label: Label) -> Self {
        Self {
            id: id.into(),
            values,
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Per-dimension mean and standard deviation (population) of a train set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &[FeatureVector]) -> Result<Self, FeaturizeError> {
        let first = train
            .first()
            .ok_or_else(|| FeaturizeError::InvalidArgument("standardizing an empty train set".into()))?;
        let dim = first.dim();
        if let Some(bad) = train.iter().find(|v| v.dim() != dim) {
            return Err(FeaturizeError::Dimension(format!(
                "vector {} has dimension {}, expected {dim}",
                bad.id,
                bad.dim()
            )));
        }
        let n = train.len() as f64;
        let mean: Vec<f64> = (0..dim)
            .map(|d| train.iter().map(|v| v.values[d]).sum::<f64>() / n)
            .collect();
        let std = (0..dim)
            .map(|d| {
                let var = train.iter().map(|v| (v.values[d] - mean[d]).powi(2)).sum::<f64>() / n;
                var.sqrt()
            })
            .collect();
        Ok(Self { mean, std })
    }

    /// Dimensions with zero spread; these pass through unchanged.
    pub fn constant_dims(&self) -> Vec<usize> {
        self.std
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0.0)
            .map(|(d, _)| d)
            .collect()
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector, FeaturizeError> {
        if v.dim() != self.mean.len() {
            return Err(FeaturizeError::Dimension(format!(
                "vector {} has dimension {}, standardizer expects {}",
                v.id,
                v.dim(),
                self.mean.len()
            )));
        }
        let values = v
            .values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| if s == 0.0 { x } else { (x - m) / s })
            .collect();
        Ok(FeatureVector {
            values,
            ..v.clone()
        })
    }
}

/// Fits on `train` and transforms both sets. Constant dimensions are
/// reported through [`Standardizer::constant_dims`].
pub fn standardize(
    train: &[FeatureVector],
    test: &[FeatureVector],
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>, Standardizer), FeaturizeError> {
    let s = Standardizer::fit(train)?;
    for d in s.constant_dims() {
        log::warn!("feature dimension {d} is constant on the train set; left unscaled");
    }
    let tr = train.iter().map(|v| s.apply(v)).collect::<Result<_, _>>()?;
    let te = test.iter().map(|v| s.apply(v)).collect::<Result<_, _>>()?;
    Ok((tr, te, s))
}

/// `(x1, x2) -> (x1, x2, x1², x2²)`.
pub fn augment(v: &FeatureVector) -> Result<FeatureVector, FeaturizeError> {
    let [a, b] = v.values[..] else {
        return Err(FeaturizeError::Dimension(format!(
            "augmentation needs 2-d vectors, {} has {}",
            v.id,
            v.dim()
        )));
    };
    Ok(FeatureVector {
        values: vec![a, b, a * a, b * b],
        ..v.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
    pub seed: u64,
    pub train_fraction: f64,
}

fn class_indices(vectors: &[FeatureVector]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, v) in vectors.iter().enumerate() {
        out[(v.label == Label::Minus) as usize].push(i);
    }
    out
}

/// Integer per-class counts summing to `total`, each the floor or ceiling
/// of its real-valued `target`; leftovers go to the largest remainders.
fn apportion(total: usize, targets: &[f64]) -> Vec<usize> {
    let mut alloc: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (targets[a] - targets[a].floor(), targets[b] - targets[b].floor());
        rb.total_cmp(&ra)
    });
    let short = total.saturating_sub(alloc.iter().sum::<usize>());
    for &i in order.iter().take(short) {
        alloc[i] += 1;
    }
    alloc
}

/// Seeded stratified split. The test set receives `ceil((1 - f) · N)`
/// samples; train counts per class are the floor or ceiling of `f · n_class`,
/// so every class is within one sample of the global ratio.
pub fn stratified_split(
    vectors: &[FeatureVector],
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, FeaturizeError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(FeaturizeError::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let classes = class_indices(vectors);
    for (c, idx) in classes.iter().enumerate() {
        if idx.len() < 2 {
            let name = if c == 0 { "+1" } else { "-1" };
            return Err(FeaturizeError::Stratification(format!(
                "class {name} has {} samples, need at least 2",
                idx.len()
            )));
        }
    }
    let n = vectors.len();
    let n_test = ((1.0 - train_fraction) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    let sizes = [classes[0].len(), classes[1].len()];
    let targets = sizes.map(|s| train_fraction * s as f64);
    let train_counts = apportion(n - n_test, &targets);
    let test_counts: Vec<usize> = train_counts
        .iter()
        .zip(sizes)
        .map(|(&t, s)| (s - t.min(s)).clamp(1, s - 1))
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (mut idx, t) in classes.into_iter().zip(test_counts) {
        idx.shuffle(&mut rng);
        test_idx.extend_from_slice(&idx[..t]);
        train_idx.extend_from_slice(&idx[t..]);
    }
    train_idx.shuffle(&mut rng);
    test_idx.shuffle(&mut rng);
    Ok(DatasetSplit {
        train: train_idx.iter().map(|&i| vectors[i].clone()).collect(),
        test: test_idx.iter().map(|&i| vectors[i].clone()).collect(),
        seed,
        train_fraction,
    })
}

/// Seeded class-balanced subset: per-class counts `floor(size/2)` and
/// `ceil(size/2)`, the larger share going to the better-stocked class.
pub fn balanced_subsample(
    vectors: &[FeatureVector],
    size: usize,
    seed: u64,
) -> Result<Vec<FeatureVector>, FeaturizeError> {
    if size > vectors.len() {
        return Err(FeaturizeError::Sampling(format!(
            "requested {size} of {} vectors",
            vectors.len()
        )));
    }
    let classes = class_indices(vectors);
    let (half, extra) = (size / 2, size % 2);
    if half == 0 {
        return Err(FeaturizeError::Sampling(format!(
            "a subset of {size} cannot hold both classes"
        )));
    }
    let bigger = (classes[1].len() > classes[0].len()) as usize;
    let mut want = [half, half];
    want[bigger] += extra;
    for (c, idx) in classes.iter().enumerate() {
        if idx.len() < want[c] {
            let name = if c == 0 { "+1" } else { "-1" };
            return Err(FeaturizeError::Sampling(format!(
                "class {name} has {} samples, {} needed for a balanced subset of {size}",
                idx.len(),
                want[c]
            )));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(size);
    for (mut idx, k) in classes.into_iter().zip(want) {
        idx.shuffle(&mut rng);
        picked.extend_from_slice(&idx[..k]);
    }
    picked.shuffle(&mut rng);
    Ok(picked.into_iter().map(|i| vectors[i].clone()).collect())
}
