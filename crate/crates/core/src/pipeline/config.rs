//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"          # relative to the config file
//!
//! [data]
//! mode = "synthetic"          # or precomputed_k2_augment / precomputed_k4
//! # features = "features.csv" # required for the precomputed modes
//! # subsample = 557           # optional class-balanced subset
//! train_fraction = 0.75
//!
//! [data.synthetic]
//! per_class = 67
//! separation = 6.0
//!
//! [model]
//! detector = "pnr"            # or threshold
//! mesh = "universal"          # or hardware16
//!
//! [noise]
//! source_loss = 0.0
//! indistinguishability = 1.0
//!
//! [train]
//! iterations = 15
//! backend = "exact"           # or shots
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::BlobParams;
use super::PipelineError;
use crate::interferometer::MeshVariant;
use crate::qml::{Backend, TrainConfig};
use crate::simulator::{Detector, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Generated 2-d blobs, augmented to 4 features.
    Synthetic,
    /// 2-d features from CSV, augmented to 4.
    PrecomputedK2Augment,
    /// 4-d features from CSV, used as is.
    PrecomputedK4,
}

impl FeatureMode {
    /// Feature count expected in the raw data.
    pub fn raw_dim(self) -> usize {
        match self {
            FeatureMode::Synthetic | FeatureMode::PrecomputedK2Augment => 2,
            FeatureMode::PrecomputedK4 => 4,
        }
    }

    pub fn augments(self) -> bool {
        self.raw_dim() == 2
    }
}

fn default_train_fraction() -> f64 {
    0.75
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub mode: FeatureMode,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub subsample: Option<usize>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub synthetic: Option<BlobParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub detector: Detector,
    pub mesh: MeshVariant,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for per-point simulation; defaults to all cores.
    #[serde(default)]
    pub threads: Option<usize>,
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub train: TrainConfig,
}

/// A parsed configuration together with its source text, which reports
/// echo verbatim.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base)
    }

    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let raw: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| PipelineError::Validation(e.to_string()))?;
        if raw.get("train").and_then(|t| t.get("seed")).is_some() {
            return Err(PipelineError::Validation(
                "train.seed is derived from the top-level seed; set `seed` instead".into(),
            ));
        }
        let config: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Validation(e.to_string()))?;
        let loaded = Self {
            config,
            text: text.to_string(),
            base_dir: base_dir.to_path_buf(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn features_path(&self) -> Option<PathBuf> {
        self.config.data.features.as_deref().map(|p| self.resolve(p))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    /// Checks everything that can be checked without computing, including
    /// that referenced files exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let c = &self.config;
        let bad = |m: String| Err(PipelineError::Validation(m));
        match (c.data.mode, &c.data.features) {
            (FeatureMode::Synthetic, Some(_)) => return bad("synthetic mode takes no features file".into()),
            (FeatureMode::Synthetic, None) => {}
            (_, None) => return bad(format!("data.mode = {:?} needs data.features", c.data.mode)),
            (_, Some(_)) => {
                if c.data.synthetic.is_some() {
                    return bad("data.synthetic only applies to synthetic mode".into());
                }
                let path = self.features_path().expect("checked above");
                if !path.is_file() {
                    return bad(format!("features file {} not found", path.display()));
                }
            }
        }
        if let Some(p) = &c.data.synthetic {
            p.validate().map_err(PipelineError::Validation)?;
        }
        if !(c.data.train_fraction > 0.0 && c.data.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", c.data.train_fraction));
        }
        if c.data.subsample.is_some_and(|s| s < 4) {
            return bad("subsample must be ≥ 4 to leave two samples per class".into());
        }
        if c.threads == Some(0) {
            return bad("threads must be ≥ 1".into());
        }
        c.train.validate().map_err(|e| PipelineError::Validation(e.to_string()))
    }

    pub fn with_overrides(mut self, seed: Option<u64>, backend: Option<Backend>) -> Self {
        if let Some(s) = seed {
            self.config.seed = s;
        }
        if let Some(b) = backend {
            self.config.train.backend = b;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_synthetic() {
        let c = LoadedConfig::from_str("[data]\nmode = \"synthetic\"\n", Path::new("")).unwrap();
        assert_eq!(c.config.train.iterations, 15);
        assert_eq!(c.config.data.train_fraction, 0.75);
        assert_eq!(c.config.noise, NoiseModel::ideal());
        assert_eq!(c.output_dir(), PathBuf::from("out"));
    }

    #[test]
    fn rejects_invalid() {
        let cases = [
            "[data]\nmode = \"precomputed_k4\"\n",
            "[data]\nmode = \"precomputed_k4\"\nfeatures = \"definitely/missing.csv\"\n",
            "[data]\nmode = \"synthetic\"\nfeatures = \"x.csv\"\n",
            "[data]\nmode = \"synthetic\"\ntrain_fraction = 1.0\n",
            "[data]\nmode = \"synthetic\"\n[train]\niterations = 0\n",
            "[data]\nmode = \"synthetic\"\n[train]\nseed = 3\n",
            "[data]\nmode = \"synthetic\"\n[noise]\nsource_loss = 1.5\n",
            "[data]\nmode = \"synthetic\"\nbogus = 1\n",
            "[data]\nmode = \"other\"\n",
            "seed = 1\n",
        ];
        for text in cases {
            assert!(
                matches!(LoadedConfig::from_str(text, Path::new("")), Err(PipelineError::Validation(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.csv"), "id,x1,x2,x3,x4,label\n").unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "[data]\nmode = \"precomputed_k4\"\nfeatures = \"f.csv\"\n").unwrap();
        let c = LoadedConfig::from_path(&cfg).unwrap();
        assert_eq!(c.features_path().unwrap(), dir.path().join("f.csv"));
        assert_eq!(c.output_dir(), dir.path().join("out"));
    }
}
