//! Python bindings for the photonic classifier.
//!
//! Structured results (reports, distributions, model records) cross the
//! boundary as JSON strings so the Python side can `json.loads` them.
//! Complex matrices are lists of rows of `(re, im)` pairs.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use polyvqc::featurize::{encode_smiles as encode, label_gap, TokenDictionary, SMILES_LENGTH};
use polyvqc::fock::{FockBasis, FockState};
use polyvqc::interferometer::{default_ansatz, UnitaryMatrix};
use polyvqc::pipeline::{
    evaluate_model, ingest_features_csv, run_experiment, simulate_request, synth_blobs, BlobParams, LoadedConfig,
    ModelArtifact, PipelineError, RunOptions, SimulateRequest,
};
use polyvqc::qml::{Evaluation, VqcModel};
use polyvqc::simulator::{self, Detector, NoiseModel, ShotConvention};

type CMatrix = Vec<Vec<(f64, f64)>>;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pipeline_err(e: PipelineError) -> PyErr {
    if e.is_validation() {
        value_err(e)
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_json(v: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string(v).map_err(value_err)
}

fn matrix_from(rows: &CMatrix) -> PyResult<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j].0, rows[i][j].1)))
}

fn matrix_to(m: &DMatrix<Complex64>) -> CMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

fn detector(name: &str) -> PyResult<Detector> {
    match name {
        "pnr" => Ok(Detector::Pnr),
        "threshold" => Ok(Detector::Threshold),
        _ => Err(PyValueError::new_err(format!("unknown detector {name:?}; use \"pnr\" or \"threshold\""))),
    }
}

fn evaluation(shots: Option<u64>, seed: u64) -> PyResult<Evaluation> {
    match shots {
        None => Ok(Evaluation::Exact),
        Some(0) => Err(PyValueError::new_err("shots must be ≥ 1")),
        Some(shots) => Ok(Evaluation::Shots {
            shots,
            seed,
            convention: ShotConvention::PostSelected,
        }),
    }
}

/// Fock states of `photons` photons in `modes` modes, in basis order.
#[pyfunction]
fn enumerate_basis(photons: usize, modes: usize) -> PyResult<Vec<Vec<usize>>> {
    let basis = FockBasis::enumerate(photons, modes).map_err(value_err)?;
    Ok(basis.states().iter().map(|s| s.occupations().to_vec()).collect())
}

#[pyfunction]
fn permanent(matrix: CMatrix) -> PyResult<(f64, f64)> {
    let p = simulator::permanent(&matrix_from(&matrix)?).map_err(value_err)?;
    Ok((p.re, p.im))
}

/// Haar-random unitary from a seeded stream.
#[pyfunction]
fn haar_unitary(modes: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    matrix_to(UnitaryMatrix::haar_random(modes, &mut rng).matrix())
}

/// Default ansatz as circuit JSON.
#[pyfunction]
#[pyo3(signature = (feature_dim=4, modes=5))]
fn default_circuit(feature_dim: usize, modes: usize) -> PyResult<String> {
    Ok(default_ansatz(modes, feature_dim).map_err(value_err)?.to_json())
}

/// Output distribution of `input` through `unitary`, as `[(state, p), ...]`.
///
/// `kind` is `"ideal"`, `"classical"` or `"noisy"`; the noisy model takes
/// `source_loss` and `indistinguishability`.
#[pyfunction]
#[pyo3(signature = (unitary, input, kind="ideal", source_loss=0.0, indistinguishability=1.0))]
fn distribution(
    unitary: CMatrix,
    input: Vec<usize>,
    kind: &str,
    source_loss: f64,
    indistinguishability: f64,
) -> PyResult<Vec<(Vec<usize>, f64)>> {
    let u = UnitaryMatrix::new(matrix_from(&unitary)?, 1e-9).map_err(value_err)?;
    let input = FockState::new(input);
    let basis = Arc::new(FockBasis::enumerate(input.photons(), u.modes()).map_err(value_err)?);
    let d = match kind {
        "ideal" => simulator::ideal_distribution(&u, &input, &basis),
        "classical" => simulator::classical_distribution(&u, &input, &basis),
        "noisy" => {
            let noise = NoiseModel::new(source_loss, indistinguishability).map_err(value_err)?;
            simulator::noisy_distribution(&u, &input, &basis, &noise)
        }
        other => return Err(PyValueError::new_err(format!("unknown distribution kind {other:?}"))),
    }
    .map_err(value_err)?;
    Ok(basis
        .states()
        .iter()
        .zip(d.probabilities())
        .map(|(s, &p)| (s.occupations().to_vec(), p))
        .collect())
}

/// Run a circuit request (the `simulate` CLI input) and return its JSON output.
#[pyfunction]
fn simulate(request_json: &str) -> PyResult<String> {
    let req: SimulateRequest = serde_json::from_str(request_json).map_err(value_err)?;
    to_json(&simulate_request(&req).map_err(value_err)?)
}

/// A variational classifier on the default ansatz, or loaded from a model record.
#[pyclass(name = "VqcModel")]
struct PyVqcModel {
    inner: VqcModel,
}

#[pymethods]
impl PyVqcModel {
    #[new]
    #[pyo3(signature = (feature_dim=4, source_loss=0.0, indistinguishability=1.0, detector="pnr"))]
    fn new(feature_dim: usize, source_loss: f64, indistinguishability: f64, detector: &str) -> PyResult<Self> {
        let noise = NoiseModel::new(source_loss, indistinguishability).map_err(value_err)?;
        let inner = VqcModel::default_for(feature_dim, noise, self::detector(detector)?).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Load from `model.json` (training artifact) or a bare model record.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let record = match serde_json::from_str::<ModelArtifact>(text) {
            Ok(a) => a.model,
            Err(_) => serde_json::from_str(text).map_err(value_err)?,
        };
        Ok(Self {
            inner: VqcModel::from_record(record).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner.to_record())
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta()
    }

    #[setter]
    fn set_theta(&mut self, theta: Vec<f64>) -> PyResult<()> {
        self.inner.set_theta_flat(&theta).map_err(value_err)
    }

    #[getter]
    fn lambda_(&self) -> Vec<f64> {
        self.inner.lambda().to_vec()
    }

    #[setter]
    fn set_lambda_(&mut self, lambda: Vec<f64>) -> PyResult<()> {
        self.inner.set_lambda(lambda).map_err(value_err)
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn outcome_count(&self) -> usize {
        self.inner.outcomes().len()
    }

    #[pyo3(signature = (x, shots=None, seed=0))]
    fn probabilities(&self, x: Vec<f64>, shots: Option<u64>, seed: u64) -> PyResult<Vec<f64>> {
        self.inner
            .outcome_probabilities(&x, evaluation(shots, seed)?)
            .map_err(value_err)
    }

    /// Model output `f(x) = Σ λ_i p_i(x)`.
    #[pyo3(signature = (x, shots=None, seed=0))]
    fn eval(&self, x: Vec<f64>, shots: Option<u64>, seed: u64) -> PyResult<f64> {
        self.inner.eval(&x, evaluation(shots, seed)?).map_err(value_err)
    }

    /// Predicted label, `+1` or `-1`.
    #[pyo3(signature = (x, shots=None, seed=0))]
    fn predict(&self, x: Vec<f64>, shots: Option<u64>, seed: u64) -> PyResult<i8> {
        let label = self.inner.predict(&x, evaluation(shots, seed)?).map_err(value_err)?;
        Ok(label.value() as i8)
    }
}

/// Gap class (`"NIR"`, `"VIS"` or `"MIR"`) of a band gap in eV.
#[pyfunction]
fn gap_class(gap_ev: f64) -> PyResult<String> {
    Ok(label_gap(gap_ev).map_err(value_err)?.to_string())
}

/// Encode a SMILES string with the reference dictionary, zero-padded to the
/// fixed encoded length.
#[pyfunction]
fn encode_smiles(smiles: &str) -> PyResult<Vec<u16>> {
    let dict = TokenDictionary::reference();
    Ok(encode(smiles, &dict, SMILES_LENGTH).map_err(value_err)?.tokens().to_vec())
}

/// Two-blob synthetic data as `[(id, [x1, x2], label), ...]`.
#[pyfunction]
#[pyo3(signature = (seed, per_class=67, separation=6.0, spread=1.0))]
fn synth(seed: u64, per_class: usize, separation: f64, spread: f64) -> PyResult<Vec<(String, Vec<f64>, i8)>> {
    let params = BlobParams {
        per_class,
        separation,
        spread,
    };
    let data = synth_blobs(&params, seed).map_err(PyValueError::new_err)?;
    Ok(data
        .into_iter()
        .map(|v| (v.id, v.values, v.label.value() as i8))
        .collect())
}

/// Run a training experiment from TOML text and return `report.json` content.
///
/// Relative paths in the config resolve against `base_dir`.
#[pyfunction]
#[pyo3(signature = (config, output_dir, base_dir=None, seed=None, threads=None))]
fn train(
    py: Python<'_>,
    config: &str,
    output_dir: PathBuf,
    base_dir: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> PyResult<String> {
    let cfg = LoadedConfig::from_str(config, &base_dir.unwrap_or_else(|| PathBuf::from("."))).map_err(pipeline_err)?;
    let opts = RunOptions {
        seed,
        output_dir: Some(output_dir),
        threads,
        ..Default::default()
    };
    let out = py.detach(|| run_experiment(cfg, &opts)).map_err(pipeline_err)?;
    to_json(&out.report)
}

/// Score a `model.json` on a features CSV and return the evaluation JSON.
#[pyfunction]
#[pyo3(signature = (model_path, features_path, shots=None, seed=0))]
fn evaluate(model_path: PathBuf, features_path: PathBuf, shots: Option<u64>, seed: u64) -> PyResult<String> {
    let text = std::fs::read_to_string(&model_path).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let artifact: ModelArtifact = serde_json::from_str(&text).map_err(value_err)?;
    let raw = ingest_features_csv(&features_path).map_err(value_err)?;
    to_json(&evaluate_model(&artifact, &raw, evaluation(shots, seed)?).map_err(pipeline_err)?)
}

#[pymodule]
fn polyvqc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVqcModel>()?;
    m.add_function(wrap_pyfunction!(enumerate_basis, m)?)?;
    m.add_function(wrap_pyfunction!(permanent, m)?)?;
    m.add_function(wrap_pyfunction!(haar_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(default_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(distribution, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(gap_class, m)?)?;
    m.add_function(wrap_pyfunction!(encode_smiles, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
