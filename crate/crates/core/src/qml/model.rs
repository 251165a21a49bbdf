use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::QmlError;
use crate::featurize::{FeatureVector, Label};
use crate::fock::{FockBasis, FockState};
use crate::interferometer::{default_ansatz, CircuitSpec};
use crate::seed::derive_seed;
use crate::simulator::{
    effective_shots, ideal_distribution, noisy_distribution, sample_counts, Detector, NoiseModel, OutcomeSpace, ShotConvention,
};

/// Modes of the logical circuit.
pub const DEFAULT_MODES: usize = 5;
/// Input modes of the three single photons.
pub const DEFAULT_INPUT_MODES: [usize; 3] = [0, 2, 4];

/// How outcome probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    /// Exact strong-simulation probabilities.
    Exact,
    /// Empirical frequencies from a seeded multinomial draw.
    Shots {
        shots: u64,
        seed: u64,
        #[serde(default)]
        convention: ShotConvention,
    },
}

impl Evaluation {
    /// Independent stream for the `i`-th data point.
    pub fn for_point(self, i: u64) -> Self {
        match self {
            Evaluation::Exact => Evaluation::Exact,
            Evaluation::Shots { shots, seed, convention } => Evaluation::Shots {
                shots,
                seed: derive_seed(seed, &[i]),
                convention,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct VqcModel {
    spec: Arc<CircuitSpec>,
    theta1: Vec<f64>,
    theta2: Vec<f64>,
    lambda: Vec<f64>,
    input_state: FockState,
    noise: NoiseModel,
    outcomes: Arc<OutcomeSpace>,
}

/// Serializable form of a [`VqcModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub circuit: CircuitSpec,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub input_state: FockState,
    pub noise: NoiseModel,
    pub detector: Detector,
}

fn wrap_phases(theta: &[f64]) -> Vec<f64> {
    theta
        .iter()
        .map(|t| {
            let w = t.rem_euclid(TAU);
            // rem_euclid can round up to exactly TAU for tiny negative inputs
            if w >= TAU {
                0.0
            } else {
                w
            }
        })
        .collect()
}

impl VqcModel {
    /// Zero phases and zero observable weights.
    pub fn new(
        spec: CircuitSpec,
        input_state: FockState,
        noise: NoiseModel,
        detector: Detector,
    ) -> Result<Self, QmlError> {
        if input_state.modes() != spec.modes() {
            return Err(QmlError::Configuration(format!(
                "input state over {} modes for a {}-mode circuit",
                input_state.modes(),
                spec.modes()
            )));
        }
        let basis = Arc::new(FockBasis::enumerate(input_state.photons(), spec.modes())?);
        let outcomes = Arc::new(OutcomeSpace::new(basis, detector));
        let [a, b] = spec.trainable_counts();
        Ok(Self {
            theta1: vec![0.0; a],
            theta2: vec![0.0; b],
            lambda: vec![0.0; outcomes.len()],
            spec: Arc::new(spec),
            input_state,
            noise,
            outcomes,
        })
    }

    /// Default ansatz on five modes with photons in modes 0, 2 and 4.
    pub fn default_for(feature_dim: usize, noise: NoiseModel, detector: Detector) -> Result<Self, QmlError> {
        let spec = default_ansatz(DEFAULT_MODES, feature_dim)?;
        let input = FockState::from_occupied_modes(DEFAULT_MODES, &DEFAULT_INPUT_MODES);
        Self::new(spec, input, noise, detector)
    }

    pub fn from_record(record: ModelRecord) -> Result<Self, QmlError> {
        let mut model = Self::new(record.circuit, record.input_state, record.noise, record.detector)?;
        model.set_theta(&record.theta1, &record.theta2)?;
        model.set_lambda(record.lambda)?;
        Ok(model)
    }

    pub fn to_record(&self) -> ModelRecord {
        ModelRecord {
            circuit: (*self.spec).clone(),
            theta1: self.theta1.clone(),
            theta2: self.theta2.clone(),
            lambda: self.lambda.clone(),
            input_state: self.input_state.clone(),
            noise: self.noise,
            detector: self.outcomes.detector(),
        }
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn theta1(&self) -> &[f64] {
        &self.theta1
    }

    pub fn theta2(&self) -> &[f64] {
        &self.theta2
    }

    /// θ₁ followed by θ₂.
    pub fn theta(&self) -> Vec<f64> {
        [self.theta1.as_slice(), self.theta2.as_slice()].concat()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn input_state(&self) -> &FockState {
        &self.input_state
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn outcomes(&self) -> &OutcomeSpace {
        &self.outcomes
    }

    pub fn photons(&self) -> usize {
        self.input_state.photons()
    }

    pub fn feature_dim(&self) -> usize {
        self.spec.feature_dim()
    }

    pub fn theta_dim(&self) -> usize {
        self.theta1.len() + self.theta2.len()
    }

    /// Stores phases reduced to `[0, 2π)`.
    pub fn set_theta(&mut self, theta1: &[f64], theta2: &[f64]) -> Result<(), QmlError> {
        let [a, b] = self.spec.trainable_counts();
        if theta1.len() != a || theta2.len() != b {
            return Err(QmlError::Configuration(format!(
                "expected [{a}, {b}] phases, got [{}, {}]",
                theta1.len(),
                theta2.len()
            )));
        }
        self.theta1 = wrap_phases(theta1);
        self.theta2 = wrap_phases(theta2);
        Ok(())
    }

    /// Sets θ from the concatenation θ₁ ‖ θ₂.
    pub fn set_theta_flat(&mut self, theta: &[f64]) -> Result<(), QmlError> {
        if theta.len() != self.theta_dim() {
            return Err(QmlError::Configuration(format!(
                "expected {} phases, got {}",
                self.theta_dim(),
                theta.len()
            )));
        }
        let (a, b) = theta.split_at(self.theta1.len());
        self.set_theta(a, b)
    }

    pub fn set_lambda(&mut self, lambda: Vec<f64>) -> Result<(), QmlError> {
        if lambda.len() != self.outcomes.len() {
            return Err(QmlError::Configuration(format!(
                "λ has {} entries for {} outcomes",
                lambda.len(),
                self.outcomes.len()
            )));
        }
        self.lambda = lambda;
        Ok(())
    }

    /// Outcome probabilities (or frequencies) at `x`, indexed like λ.
    pub fn outcome_probabilities(&self, x: &[f64], eval: Evaluation) -> Result<Vec<f64>, QmlError> {
        let u = self.spec.build_unitary(&self.theta1, &self.theta2, x)?;
        let basis = self.outcomes.basis();
        let dist = if self.noise.indistinguishability() == 1.0 {
            ideal_distribution(&u, &self.input_state, basis)?
        } else {
            noisy_distribution(&u, &self.input_state, basis, &self.noise)?
        };
        match eval {
            Evaluation::Exact => Ok(self.outcomes.collapse(&dist)),
            Evaluation::Shots { shots, seed, convention } => {
                let n = effective_shots(shots, &self.noise, self.photons(), convention);
                let counts = sample_counts(&dist, n, seed)?;
                Ok(self.outcomes.frequencies(&counts))
            }
        }
    }

    pub fn eval(&self, x: &[f64], eval: Evaluation) -> Result<f64, QmlError> {
        let p = self.outcome_probabilities(x, eval)?;
        Ok(dot(&self.lambda, &p))
    }

    pub fn predict(&self, x: &[f64], eval: Evaluation) -> Result<Label, QmlError> {
        self.eval(x, eval).map(Label::from_score)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(x) = λ · P(x)`.
pub fn model_eval(model: &VqcModel, x: &[f64], eval: Evaluation) -> Result<f64, QmlError> {
    model.eval(x, eval)
}

/// `sign(f(x))` with `sign(0) = +1`.
pub fn predict(model: &VqcModel, x: &[f64], eval: Evaluation) -> Result<Label, QmlError> {
    model.predict(x, eval)
}

/// Row `i` holds the outcome probabilities of data point `i`. Points are
/// evaluated in parallel; shot streams come from `eval.for_point(i)`.
pub fn probability_matrix(
    model: &VqcModel,
    data: &[FeatureVector],
    eval: Evaluation,
) -> Result<DMatrix<f64>, QmlError> {
    let rows: Vec<Vec<f64>> = data
        .par_iter()
        .enumerate()
        .map(|(i, v)| model.outcome_probabilities(&v.values, eval.for_point(i as u64)))
        .collect::<Result<_, _>>()?;
    let k = model.outcomes().len();
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

/// `(1/2N) Σ (y - P λ)² + α λ·λ`.
pub fn loss_from_probabilities(p: &DMatrix<f64>, y: &[f64], lambda: &[f64], alpha: f64) -> f64 {
    let n = p.nrows() as f64;
    let mut sq = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let f: f64 = p.row(i).iter().zip(lambda).map(|(a, b)| a * b).sum();
        sq += (yi - f).powi(2);
    }
    sq / (2.0 * n) + alpha * dot(lambda, lambda)
}

/// Regularized squared loss of the model on `data`.
pub fn loss(model: &VqcModel, data: &[FeatureVector], alpha: f64, eval: Evaluation) -> Result<f64, QmlError> {
    if data.is_empty() {
        return Err(QmlError::InvalidArgument("loss over an empty dataset".into()));
    }
    let p = probability_matrix(model, data, eval)?;
    let y: Vec<f64> = data.iter().map(|v| v.label.value()).collect();
    Ok(loss_from_probabilities(&p, &y, model.lambda(), alpha))
}
