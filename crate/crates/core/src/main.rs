use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use polyvqc::featurize::io::{read_polymer_csv_path, write_encoded_csv, DataIoError};
use polyvqc::featurize::{preprocess_dataset, FeaturizeError, TokenDictionary};
use polyvqc::pipeline::{
    evaluate_model, ingest_features_csv, run_experiment, simulate_request, synth_blobs, write_features_csv, BlobParams,
    LoadedConfig, ModelArtifact, PipelineError, RunOptions, SimulateRequest,
};
use polyvqc::qml::{Backend, Evaluation, QmlError};
use polyvqc::simulator::ShotConvention;

/// Input that fails validation; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Invalid(String);

#[derive(Parser)]
#[command(name = "polyvqc", version, about = "Photonic variational quantum classifier for polymer gap classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Shots,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Shots => Backend::Shots,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clean a polymer CSV (id,smiles,gap_ev) and write encoded, labelled SMILES.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `reference` (built-in 34-character table), `corpus` (built from
        /// the cleaned input), or a path to a dictionary JSON file.
        #[arg(long, default_value = "reference")]
        dictionary: String,
    },
    /// Run a training experiment described by a TOML config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score a trained model on a features CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        backend: BackendArg,
        #[arg(long, default_value_t = 50_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute the output distribution of a circuit JSON request.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        /// Output directory; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic two-blob 2-d features CSV.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = BlobParams::default().per_class)]
        per_class: usize,
        #[arg(long, default_value_t = BlobParams::default().separation)]
        separation: f64,
        #[arg(long, default_value_t = BlobParams::default().spread)]
        spread: f64,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return e.exit_code() as u8;
        }
        if cause.is::<Invalid>() || cause.is::<FeaturizeError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<DataIoError>() {
            return match e {
                DataIoError::Io { .. } => 1,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<QmlError>() {
            return match e {
                QmlError::Configuration(_) | QmlError::InvalidArgument(_) | QmlError::Circuit(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Invalid(format!("{} not found", path.display())).into())
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn featurize(input: &Path, out: &Path, dictionary: &str) -> Result<()> {
    require_file(input)?;
    let records = read_polymer_csv_path(input)?;
    let (kept, report) = preprocess_dataset(records);
    let dict = match dictionary {
        "reference" => TokenDictionary::reference(),
        "corpus" => {
            let smiles: Vec<&str> = kept.iter().map(|r| r.smiles.as_str()).collect();
            TokenDictionary::build(&smiles)?
        }
        path => {
            let p = Path::new(path);
            require_file(p)?;
            TokenDictionary::from_json(&fs::read_to_string(p)?)?
        }
    };
    let mut buf = Vec::new();
    write_encoded_csv(&mut buf, &kept, &dict)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("encoded.csv"), buf)?;
    write_file(out, "dictionary.json", &dict.to_json())?;
    write_file(out, "preprocess.json", &serde_json::to_string_pretty(&report)?)?;
    if report.empty {
        log::warn!("no records survived preprocessing");
    }
    println!("kept {} of {} records; wrote {}", report.kept, report.input, out.display());
    Ok(())
}

fn train(config: &Path, opts: RunOptions) -> Result<()> {
    if !config.is_file() {
        return Err(PipelineError::Validation(format!("config {} not found", config.display())).into());
    }
    let cfg = LoadedConfig::from_path(config)?;
    let out = run_experiment(cfg, &opts)?;
    let a = &out.report.accuracy;
    println!(
        "train accuracy {:.4} ± {:.4}\ntest accuracy {:.4} ± {:.4}\nwrote {}",
        a.train.mean,
        a.train.std,
        a.test.mean,
        a.test.std,
        out.output_dir.display()
    );
    Ok(())
}

fn eval(model: &Path, features: &Path, out: &Path, eval: Evaluation) -> Result<()> {
    require_file(model)?;
    require_file(features)?;
    let artifact: ModelArtifact =
        serde_json::from_str(&fs::read_to_string(model)?).with_context(|| format!("parsing {}", model.display()))?;
    let raw = ingest_features_csv(features)?;
    let report = evaluate_model(&artifact, &raw, eval)?;
    let path = write_file(out, "eval.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!("accuracy {:.4} on {} samples; wrote {}", report.metrics.accuracy, report.samples, path.display());
    Ok(())
}

fn simulate(circuit: &Path, out: Option<&Path>) -> Result<()> {
    require_file(circuit)?;
    let req: SimulateRequest = serde_json::from_str(&fs::read_to_string(circuit)?)
        .with_context(|| format!("parsing {}", circuit.display()))?;
    let dist = simulate_request(&req)?;
    let body = serde_json::to_string_pretty(&dist)? + "\n";
    match out {
        Some(dir) => {
            let path = write_file(dir, "distribution.json", &body)?;
            println!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn synth(seed: u64, out: &Path, params: BlobParams) -> Result<()> {
    let vectors = synth_blobs(&params, seed).map_err(Invalid)?;
    let mut buf = Vec::new();
    write_features_csv(&mut buf, &vectors)?;
    fs::create_dir_all(out)?;
    let path = out.join("features.csv");
    fs::write(&path, buf)?;
    println!("wrote {} samples to {}", vectors.len(), path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Featurize { input, out, dictionary } => featurize(&input, &out, &dictionary),
        Command::Train {
            config,
            seed,
            out,
            backend,
            threads,
        } => {
            if threads == Some(0) {
                return Err(Invalid("--threads must be ≥ 1".into()).into());
            }
            train(
                &config,
                RunOptions {
                    seed,
                    backend: backend.map(Backend::from),
                    output_dir: out,
                    threads,
                },
            )
        }
        Command::Eval {
            model,
            features,
            out,
            backend,
            shots,
            seed,
        } => {
            let e = match backend {
                BackendArg::Exact => Evaluation::Exact,
                BackendArg::Shots if shots == 0 => return Err(Invalid("--shots must be ≥ 1".into()).into()),
                BackendArg::Shots => Evaluation::Shots {
                    shots,
                    seed,
                    convention: ShotConvention::PostSelected,
                },
            };
            eval(&model, &features, &out, e)
        }
        Command::Simulate { circuit, out } => simulate(&circuit, out.as_deref()),
        Command::Synth {
            seed,
            out,
            per_class,
            separation,
            spread,
        } => synth(
            seed,
            &out,
            BlobParams {
                per_class,
                separation,
                spread,
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
