use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{FeatureMode, LoadedConfig};
use super::metrics::{confusion, ConfusionMatrix, PoissonErrors};
use super::synth::synth_blobs;
use super::{ingest_features_csv, PipelineError, Stage, StageError, SCHEMA_VERSION};
use crate::featurize::{augment, balanced_subsample, standardize, stratified_split, FeatureVector, Label, Standardizer};
use crate::fock::FockState;
use crate::interferometer::default_ansatz_with;
use crate::qml::{
    predict, seesaw_train, Backend, Evaluation, ModelRecord, QmlError, ShotBudget, TrainedResult, VqcModel,
    DEFAULT_INPUT_MODES, DEFAULT_MODES,
};
use crate::seed::derive_seed;

// Sub-streams of the master seed.
const STREAM_DATA: u64 = 0;
const STREAM_SUBSAMPLE: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_TRAIN: u64 = 3;

pub const REPORT_FILE: &str = "report.json";
pub const MODEL_FILE: &str = "model.json";
pub const TIMING_FILE: &str = "timing.json";

/// Command-line overrides of a [`LoadedConfig`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub data: u64,
    pub subsample: u64,
    pub split: u64,
    pub train: u64,
    pub repeats: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub plus: usize,
    pub minus: usize,
}

impl ClassCounts {
    fn of(v: &[FeatureVector]) -> Self {
        let plus = v.iter().filter(|v| v.label == Label::Plus).count();
        Self {
            plus,
            minus: v.len() - plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub mode: FeatureMode,
    pub total: usize,
    pub train: ClassCounts,
    pub test: ClassCounts,
    pub feature_dim: usize,
    /// Raw dimensions left unscaled because they are constant on the train set.
    pub constant_dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub poisson_errors: PoissonErrors,
}

impl SplitMetrics {
    fn new(predictions: &[Label], data: &[FeatureVector]) -> Result<Self, PipelineError> {
        let labels: Vec<Label> = data.iter().map(|v| v.label).collect();
        let c = confusion(predictions, &labels).map_err(|e| PipelineError::stage(Stage::Evaluate, e))?;
        Ok(Self {
            accuracy: c.accuracy(),
            confusion: c,
            poisson_errors: c.poisson_errors(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStats {
    pub mean: f64,
    pub std: f64,
    pub per_repeat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub seed: u64,
    pub best_loss: f64,
    pub best_iteration: usize,
    pub loss_trace: Vec<f64>,
    pub best_loss_trace: Vec<f64>,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub train: AccuracyStats,
    pub test: AccuracyStats,
}

/// Contents of `report.json`. Holds no wall-clock data, so identical runs
/// give byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    /// Configuration file, verbatim.
    pub config: String,
    pub overrides: Overrides,
    pub seeds: Seeds,
    pub data: DataSummary,
    pub accuracy: AccuracySummary,
    pub best_repeat: usize,
    pub repeats: Vec<RepeatReport>,
    pub shot_budget: ShotBudget,
}

/// Contents of `model.json`: the trained model plus the preprocessing needed
/// to apply it to raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub feature_mode: FeatureMode,
    pub standardizer: Standardizer,
    pub augment: bool,
    pub model: ModelRecord,
}

impl ModelArtifact {
    /// Standardizes and, if needed, augments raw vectors.
    pub fn prepare(&self, raw: &[FeatureVector]) -> Result<Vec<FeatureVector>, PipelineError> {
        raw.iter()
            .map(|v| {
                let s = self.standardizer.apply(v)?;
                if self.augment {
                    augment(&s)
                } else {
                    Ok(s)
                }
            })
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::stage(Stage::Standardize, e))
    }
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub report: MetricsReport,
    pub result: TrainedResult,
    pub artifact: ModelArtifact,
    pub output_dir: PathBuf,
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes all files or none: each goes to a temporary name first, and
/// anything already renamed is removed again on failure.
fn write_all_or_nothing(dir: &Path, files: &[(&str, String)]) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut done: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for (name, body) in files {
            let tmp = dir.join(format!(".{name}.tmp"));
            let dst = dir.join(name);
            let r = std::fs::write(&tmp, body).and_then(|_| std::fs::rename(&tmp, &dst));
            if let Err(e) = r {
                let _ = std::fs::remove_file(&tmp);
                return Err(PipelineError::io(&dst, e));
            }
            done.push(dst);
        }
        Ok(())
    })();
    if result.is_err() {
        for p in &done {
            let _ = std::fs::remove_file(p);
        }
    }
    result
}

fn load_data(cfg: &LoadedConfig, data_seed: u64) -> Result<Vec<FeatureVector>, PipelineError> {
    let c = &cfg.config;
    let vectors = match c.data.mode {
        FeatureMode::Synthetic => {
            let params = c.data.synthetic.unwrap_or_default();
            synth_blobs(&params, data_seed).map_err(|e| PipelineError::stage(Stage::Ingest, StageError::Other(e)))?
        }
        FeatureMode::PrecomputedK2Augment | FeatureMode::PrecomputedK4 => {
            let path = cfg.features_path().ok_or_else(|| PipelineError::Validation("missing features path".into()))?;
            ingest_features_csv(&path).map_err(|e| PipelineError::stage(Stage::Ingest, e))?
        }
    };
    let want = c.data.mode.raw_dim();
    if let Some(v) = vectors.iter().find(|v| v.dim() != want) {
        return Err(PipelineError::Validation(format!(
            "data.mode = {:?} expects {want} features, vector {} has {}",
            c.data.mode,
            v.id,
            v.dim()
        )));
    }
    Ok(vectors)
}

fn template_model(cfg: &LoadedConfig) -> Result<VqcModel, QmlError> {
    let c = &cfg.config;
    let spec = default_ansatz_with(DEFAULT_MODES, 4, c.model.mesh)?;
    let input = FockState::from_occupied_modes(DEFAULT_MODES, &DEFAULT_INPUT_MODES);
    VqcModel::new(spec, input, c.noise, c.model.detector)
}

fn run_inner(cfg: &LoadedConfig, overrides: Overrides) -> Result<ExperimentOutput, PipelineError> {
    let c = &cfg.config;
    let master = c.seed;
    let seeds = Seeds {
        master,
        data: derive_seed(master, &[STREAM_DATA]),
        subsample: derive_seed(master, &[STREAM_SUBSAMPLE]),
        split: derive_seed(master, &[STREAM_SPLIT]),
        train: derive_seed(master, &[STREAM_TRAIN]),
        repeats: (0..c.train.repeats as u64)
            .map(|r| derive_seed(derive_seed(master, &[STREAM_TRAIN]), &[r]))
            .collect(),
    };

    let mut vectors = load_data(cfg, seeds.data)?;
    if let Some(size) = c.data.subsample {
        vectors = balanced_subsample(&vectors, size, seeds.subsample).map_err(|e| PipelineError::stage(Stage::Subsample, e))?;
    }
    let split = stratified_split(&vectors, c.data.train_fraction, seeds.split).map_err(|e| PipelineError::stage(Stage::Split, e))?;
    let (train, test, standardizer) =
        standardize(&split.train, &split.test).map_err(|e| PipelineError::stage(Stage::Standardize, e))?;
    let (train, test) = if c.data.mode.augments() {
        let aug = |v: &[FeatureVector]| v.iter().map(augment).collect::<Result<Vec<_>, _>>();
        (
            aug(&train).map_err(|e| PipelineError::stage(Stage::Standardize, e))?,
            aug(&test).map_err(|e| PipelineError::stage(Stage::Standardize, e))?,
        )
    } else {
        (train, test)
    };

    let template = template_model(cfg).map_err(|e| PipelineError::stage(Stage::Train, e))?;
    let mut train_cfg = c.train.clone();
    train_cfg.seed = seeds.train;
    let result = seesaw_train(&template, &train, &test, &train_cfg).map_err(|e| PipelineError::stage(Stage::Train, e))?;

    let mut repeats = Vec::with_capacity(result.repeats.len());
    for r in &result.repeats {
        repeats.push(RepeatReport {
            repeat: r.repeat,
            seed: r.seed,
            best_loss: r.best_loss,
            best_iteration: r.best_iteration,
            loss_trace: r.loss_trace.clone(),
            best_loss_trace: r.best_loss_trace.clone(),
            train: SplitMetrics::new(&r.train_predictions, &train)?,
            test: SplitMetrics::new(&r.test_predictions, &test)?,
        });
    }
    let stats = |get: fn(&RepeatReport) -> f64| {
        let per_repeat: Vec<f64> = repeats.iter().map(get).collect();
        let (mean, std) = super::metrics::mean_std(&per_repeat);
        AccuracyStats { mean, std, per_repeat }
    };
    let accuracy = AccuracySummary {
        train: stats(|r| r.train.accuracy),
        test: stats(|r| r.test.accuracy),
    };

    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.text.clone(),
        overrides,
        seeds,
        data: DataSummary {
            mode: c.data.mode,
            total: vectors.len(),
            train: ClassCounts::of(&train),
            test: ClassCounts::of(&test),
            feature_dim: template.feature_dim(),
            constant_dims: standardizer.constant_dims(),
        },
        accuracy,
        best_repeat: result.best_repeat,
        repeats,
        shot_budget: result.shot_budget.clone(),
    };
    let artifact = ModelArtifact {
        schema_version: SCHEMA_VERSION,
        feature_mode: c.data.mode,
        augment: c.data.mode.augments(),
        standardizer,
        model: result.model.clone(),
    };
    Ok(ExperimentOutput {
        report,
        result,
        artifact,
        output_dir: cfg.output_dir(),
    })
}

/// Runs split, standardization, augmentation, seesaw training and scoring,
/// then writes `report.json`, `model.json` and `timing.json` to the output
/// directory. Nothing is written if any stage fails.
pub fn run_experiment(cfg: LoadedConfig, opts: &RunOptions) -> Result<ExperimentOutput, PipelineError> {
    let overrides = Overrides {
        seed: opts.seed,
        backend: opts.backend,
    };
    let mut cfg = cfg.with_overrides(opts.seed, opts.backend);
    if let Some(dir) = &opts.output_dir {
        cfg.config.output_dir = dir.clone();
        cfg.base_dir = PathBuf::new();
        if dir.is_relative() {
            cfg.base_dir = std::env::current_dir().map_err(|e| PipelineError::io(Path::new("."), e))?;
        }
    }
    cfg.validate()?;
    let threads = opts.threads.or(cfg.config.threads);

    let started = Instant::now();
    let mut out = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Validation(format!("thread pool: {e}")))?
            .install(|| run_inner(&cfg, overrides))?,
        None => run_inner(&cfg, overrides)?,
    };
    let elapsed = started.elapsed().as_secs_f64();
    out.output_dir = cfg.output_dir();

    let timing = serde_json::json!({
        "total_seconds": elapsed,
        "training": out.result.timing,
    });
    write_all_or_nothing(
        &out.output_dir,
        &[
            (REPORT_FILE, pretty(&out.report)),
            (MODEL_FILE, pretty(&out.artifact)),
            (TIMING_FILE, pretty(&timing)),
        ],
    )?;
    log::info!(
        "train accuracy {:.3} ± {:.3}, test accuracy {:.3} ± {:.3}; wrote {}",
        out.report.accuracy.train.mean,
        out.report.accuracy.train.std,
        out.report.accuracy.test.mean,
        out.report.accuracy.test.std,
        out.output_dir.display()
    );
    Ok(out)
}

/// Output of the `eval` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub samples: usize,
    pub evaluation: Evaluation,
    pub metrics: SplitMetrics,
}

/// Scores a saved model on raw feature vectors.
pub fn evaluate_model(
    artifact: &ModelArtifact,
    raw: &[FeatureVector],
    eval: Evaluation,
) -> Result<EvalReport, PipelineError> {
    if raw.is_empty() {
        return Err(PipelineError::Validation("no feature vectors to evaluate".into()));
    }
    let model = VqcModel::from_record(artifact.model.clone()).map_err(|e| PipelineError::stage(Stage::Evaluate, e))?;
    let data = artifact.prepare(raw)?;
    if let Some(v) = data.iter().find(|v| v.dim() != model.feature_dim()) {
        return Err(PipelineError::Validation(format!(
            "vector {} has {} features after preprocessing, model expects {}",
            v.id,
            v.dim(),
            model.feature_dim()
        )));
    }
    let predictions: Vec<Label> = {
        use rayon::prelude::*;
        data.par_iter()
            .enumerate()
            .map(|(i, v)| predict(&model, &v.values, eval.for_point(i as u64)))
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::stage(Stage::Evaluate, e))?
    };
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        samples: data.len(),
        evaluation: eval,
        metrics: SplitMetrics::new(&predictions, &data)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::BlobParams;

    const QUICK: &str = "seed = 11\n[data]\nmode = \"synthetic\"\n[data.synthetic]\nper_class = 12\n\
        [train]\niterations = 3\nrepeats = 2\nlambda_optimizer = \"ridge_closed_form\"\n[train.gp]\nn_init = 2\ncandidates = 8\n";

    fn quick_run(dir: &Path, threads: Option<usize>) -> ExperimentOutput {
        let cfg = LoadedConfig::from_str(QUICK, Path::new("")).unwrap();
        let opts = RunOptions {
            output_dir: Some(dir.to_path_buf()),
            threads,
            ..Default::default()
        };
        run_experiment(cfg, &opts).unwrap()
    }

    #[test]
    fn report_consistency_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = quick_run(dir.path(), None);
        let r = &out.report;
        assert_eq!(r.data.total, 24);
        assert_eq!(r.data.train.plus + r.data.train.minus, 18);
        for rep in &r.repeats {
            for m in [&rep.train, &rep.test] {
                assert_eq!(m.accuracy, m.confusion.accuracy());
            }
            assert_eq!(rep.test.confusion.total(), 6);
            let recorded = out.result.repeats[rep.repeat].train_accuracy;
            assert_eq!(rep.train.accuracy, recorded);
        }
        for f in [REPORT_FILE, MODEL_FILE, TIMING_FILE] {
            assert!(dir.path().join(f).is_file());
        }
        let text = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, r);
        assert!(back.config.contains("per_class = 12"));

        // the saved model reproduces the best repeat's test metrics
        let artifact: ModelArtifact =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MODEL_FILE)).unwrap()).unwrap();
        assert_eq!(artifact, out.artifact);
    }

    #[test]
    fn deterministic_reports() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        quick_run(a.path(), Some(1));
        quick_run(b.path(), Some(3));
        for f in [REPORT_FILE, MODEL_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn failed_run_leaves_no_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("out");
        // unregularized ridge on two training points is singular
        let csv = dir.path().join("tiny.csv");
        std::fs::write(&csv, "id,x1,x2,label\na,0,0,1\nb,1,1,1\nc,2,2,-1\nd,3,3,-1\n").unwrap();
        let text = format!(
            "output_dir = \"{}\"\n[data]\nmode = \"precomputed_k2_augment\"\nfeatures = \"{}\"\n[train]\nalpha = 0.0\nlambda_optimizer = \"ridge_closed_form\"\niterations = 1\nrepeats = 1\n",
            out_dir.display(),
            csv.display()
        );
        let cfg2 = LoadedConfig::from_str(&text, Path::new("")).unwrap();
        let err = run_experiment(cfg2, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Stage { stage: Stage::Train, .. }), "{err}");
        assert!(!out_dir.join(REPORT_FILE).exists());
    }

    #[test]
    fn eval_matches_training_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let out = quick_run(dir.path(), None);
        // raw test vectors: regenerate and split with the same seeds
        let params = BlobParams { per_class: 12, ..Default::default() };
        let raw = synth_blobs(&params, out.report.seeds.data).unwrap();
        let split = stratified_split(&raw, 0.75, out.report.seeds.split).unwrap();
        let e = evaluate_model(&out.artifact, &split.test, Evaluation::Exact).unwrap();
        assert_eq!(e.metrics, out.report.repeats[out.report.best_repeat].test);
    }
}
