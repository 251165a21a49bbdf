use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gp::{gp_propose, GpOptions};
use super::model::{loss_from_probabilities, probability_matrix, Evaluation, ModelRecord, VqcModel};
use super::nelder_mead::{nelder_mead, NelderMeadOptions};
use super::ridge::ridge_solve;
use super::QmlError;
use crate::featurize::{FeatureVector, Label};
use crate::seed::derive_seed;
use crate::simulator::{effective_shots, ShotConvention};

// Sub-streams of a repeat seed.
const STREAM_GP: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_SCORE_TRAIN: u64 = 2;
const STREAM_SCORE_TEST: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Exact,
    Shots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaOptimizer {
    #[default]
    NelderMead,
    RidgeClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Executions per iteration; the training set is split into this many
    /// contiguous batches for shot accounting.
    pub batches: usize,
    pub backend: Backend,
    /// Shots per data point per execution.
    pub shots: u64,
    pub shot_convention: ShotConvention,
    pub alpha: f64,
    pub repeats: usize,
    pub seed: u64,
    pub lambda_optimizer: LambdaOptimizer,
    pub gp: GpOptions,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 15,
            batches: 10,
            backend: Backend::Exact,
            shots: 50_000,
            shot_convention: ShotConvention::PostSelected,
            alpha: 0.01,
            repeats: 5,
            seed: 0,
            lambda_optimizer: LambdaOptimizer::NelderMead,
            gp: GpOptions::default(),
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), QmlError> {
        let positive = [("iterations", self.iterations), ("batches", self.batches), ("repeats", self.repeats)];
        for (name, v) in positive {
            if v == 0 {
                return Err(QmlError::Configuration(format!("{name} must be ≥ 1")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(QmlError::Configuration(format!("alpha must be a finite value ≥ 0, got {}", self.alpha)));
        }
        if self.backend == Backend::Shots && self.shots == 0 {
            return Err(QmlError::Configuration("shot backend needs shots ≥ 1".into()));
        }
        self.gp.validate()?;
        if self.nelder_mead.max_iter == 0 || !(self.nelder_mead.initial_step > 0.0) || !(self.nelder_mead.tol >= 0.0) {
            return Err(QmlError::Configuration("Nelder–Mead needs max_iter ≥ 1, initial_step > 0, tol ≥ 0".into()));
        }
        Ok(())
    }

    fn evaluation(&self, seed: u64) -> Evaluation {
        match self.backend {
            Backend::Exact => Evaluation::Exact,
            Backend::Shots => Evaluation::Shots {
                shots: self.shots,
                seed,
                convention: self.shot_convention,
            },
        }
    }
}

/// Mean and population standard deviation over repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Shot usage of a training run. Zero under the exact backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub shots_per_point: u64,
    /// Shots retained per point after loss accounting.
    pub effective_shots_per_point: u64,
    pub executions_per_iteration: usize,
    pub points_per_batch: Vec<usize>,
    pub total_shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Training loss at the optimized λ for each proposed θ.
    pub loss_trace: Vec<f64>,
    /// Running minimum of `loss_trace`.
    pub best_loss_trace: Vec<f64>,
    pub best_iteration: usize,
    pub best_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Predictions of the best model, in input order.
    #[serde(skip)]
    pub train_predictions: Vec<Label>,
    #[serde(skip)]
    pub test_predictions: Vec<Label>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub per_repeat_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedResult {
    /// Lowest-training-loss model over all repeats.
    pub model: ModelRecord,
    pub best_repeat: usize,
    pub best_loss: f64,
    pub repeats: Vec<RepeatResult>,
    pub train_accuracy: Summary,
    pub test_accuracy: Summary,
    pub shot_budget: ShotBudget,
    pub timing: Timing,
}

impl TrainedResult {
    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.timing = Timing {
            total_seconds: 0.0,
            per_repeat_seconds: vec![0.0; self.timing.per_repeat_seconds.len()],
        };
        out
    }
}

fn check_dataset(name: &str, data: &[FeatureVector], dim: usize) -> Result<(), QmlError> {
    if data.is_empty() {
        return Err(QmlError::InvalidDataset(format!("{name} set is empty")));
    }
    if let Some(v) = data.iter().find(|v| v.dim() != dim) {
        return Err(QmlError::InvalidDataset(format!(
            "{name} vector {} has {} features, model expects {dim}",
            v.id,
            v.dim()
        )));
    }
    Ok(())
}

fn batch_sizes(n: usize, batches: usize) -> Vec<usize> {
    (0..batches).map(|b| n / batches + usize::from(b < n % batches)).collect()
}

fn score(model: &VqcModel, data: &[FeatureVector], eval: Evaluation) -> Result<(f64, Vec<Label>), QmlError> {
    let p = probability_matrix(model, data, eval)?;
    let predictions: Vec<Label> = (0..data.len())
        .map(|i| Label::from_score(p.row(i).iter().zip(model.lambda()).map(|(a, b)| a * b).sum()))
        .collect();
    let hits = predictions.iter().zip(data).filter(|(p, v)| **p == v.label).count();
    Ok((hits as f64 / data.len() as f64, predictions))
}

fn fit_lambda(p: &DMatrix<f64>, y: &[f64], warm: &[f64], config: &TrainConfig) -> Result<(Vec<f64>, f64), QmlError> {
    match config.lambda_optimizer {
        LambdaOptimizer::RidgeClosedForm => {
            let l = ridge_solve(p, y, config.alpha)?;
            let f = loss_from_probabilities(p, y, &l, config.alpha);
            Ok((l, f))
        }
        LambdaOptimizer::NelderMead => {
            let r = nelder_mead(|l| loss_from_probabilities(p, y, l, config.alpha), warm, &config.nelder_mead)?;
            Ok((r.x, r.f))
        }
    }
}

fn train_repeat(
    template: &VqcModel,
    train: &[FeatureVector],
    test: &[FeatureVector],
    config: &TrainConfig,
    repeat: usize,
) -> Result<(RepeatResult, VqcModel), QmlError> {
    let seed = derive_seed(config.seed, &[repeat as u64]);
    let gp_seed = derive_seed(seed, &[STREAM_GP]);
    let y: Vec<f64> = train.iter().map(|v| v.label.value()).collect();
    let dim = template.theta_dim();

    let mut model = template.clone();
    let mut lambda = template.lambda().to_vec();
    let mut history: Vec<(Vec<f64>, f64)> = Vec::with_capacity(config.iterations);
    let mut loss_trace = Vec::with_capacity(config.iterations);
    let mut best_loss_trace = Vec::with_capacity(config.iterations);
    let mut best: Option<(usize, f64, Vec<f64>, Vec<f64>)> = None;

    for it in 0..config.iterations {
        let theta = gp_propose(&history, dim, &config.gp, gp_seed)?;
        model.set_theta_flat(&theta)?;
        let eval = config.evaluation(derive_seed(seed, &[STREAM_TRAIN, it as u64]));
        let p = probability_matrix(&model, train, eval)?;
        let (fitted, f) = fit_lambda(&p, &y, &lambda, config)?;
        log::debug!("repeat {repeat} iteration {it}: loss {f:.6}");

        lambda = fitted;
        history.push((model.theta(), f));
        loss_trace.push(f);
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((it, f, model.theta(), lambda.clone()));
        }
        best_loss_trace.push(best.as_ref().map_or(f, |b| b.1));
    }

    let (best_iteration, best_loss, theta, lambda) = best.expect("at least one iteration");
    model.set_theta_flat(&theta)?;
    model.set_lambda(lambda.clone())?;
    let (train_accuracy, train_predictions) = score(&model, train, config.evaluation(derive_seed(seed, &[STREAM_SCORE_TRAIN])))?;
    let (test_accuracy, test_predictions) = score(&model, test, config.evaluation(derive_seed(seed, &[STREAM_SCORE_TEST])))?;
    log::info!("repeat {repeat}: loss {best_loss:.6}, train {train_accuracy:.3}, test {test_accuracy:.3}");

    Ok((
        RepeatResult {
            repeat,
            seed,
            theta: model.theta(),
            lambda,
            loss_trace,
            best_loss_trace,
            best_iteration,
            best_loss,
            train_accuracy,
            test_accuracy,
            train_predictions,
            test_predictions,
        },
        model,
    ))
}

/// Alternates GP proposals for θ with λ fits on the training set, for
/// `config.repeats` independently seeded runs.
pub fn seesaw_train(
    template: &VqcModel,
    train: &[FeatureVector],
    test: &[FeatureVector],
    config: &TrainConfig,
) -> Result<TrainedResult, QmlError> {
    config.validate()?;
    let dim = template.feature_dim();
    check_dataset("training", train, dim)?;
    check_dataset("test", test, dim)?;
    if train.iter().all(|v| v.label == train[0].label) {
        return Err(QmlError::InvalidDataset(format!(
            "training set has a single class ({})",
            train[0].label.value()
        )));
    }
    if template.theta_dim() == 0 {
        return Err(QmlError::Configuration("circuit has no trainable phases".into()));
    }

    let started = Instant::now();
    let mut repeats = Vec::with_capacity(config.repeats);
    let mut per_repeat_seconds = Vec::with_capacity(config.repeats);
    let mut best_model: Option<VqcModel> = None;
    for r in 0..config.repeats {
        let t0 = Instant::now();
        let (result, model) = train_repeat(template, train, test, config, r)?;
        per_repeat_seconds.push(t0.elapsed().as_secs_f64());
        let better = repeats.iter().all(|prev: &RepeatResult| result.best_loss < prev.best_loss);
        if better {
            best_model = Some(model);
        }
        repeats.push(result);
    }
    let best_repeat = repeats
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.best_loss.total_cmp(&b.1.best_loss).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one repeat");

    let train_acc: Vec<f64> = repeats.iter().map(|r| r.train_accuracy).collect();
    let test_acc: Vec<f64> = repeats.iter().map(|r| r.test_accuracy).collect();
    let (shots, effective) = match config.backend {
        Backend::Exact => (0, 0),
        Backend::Shots => (
            config.shots,
            effective_shots(config.shots, template.noise(), template.photons(), config.shot_convention),
        ),
    };

    Ok(TrainedResult {
        model: best_model.expect("at least one repeat").to_record(),
        best_repeat,
        best_loss: repeats[best_repeat].best_loss,
        train_accuracy: Summary::of(&train_acc),
        test_accuracy: Summary::of(&test_acc),
        shot_budget: ShotBudget {
            shots_per_point: shots,
            effective_shots_per_point: effective,
            executions_per_iteration: config.batches,
            points_per_batch: batch_sizes(train.len(), config.batches),
            total_shots: shots * (train.len() * config.iterations * config.repeats) as u64,
        },
        repeats,
        timing: Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            per_repeat_seconds,
        },
    })
}
