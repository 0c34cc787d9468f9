//! Experiment setups and the three-way optimizer comparison harness.
//!
//! * `exp1`: five badly scaled synthetic sources, 5×5 Hilbert mixing, no
//!   noise, standard gradient.
//! * `exp2`: two speech signals, random 2×2 mixing, 30 dB noise, natural
//!   gradient.
//! * `exp3`: four speech signals, 4×4 Hilbert mixing, 30 dB noise, natural
//!   gradient.
//!
//! Speech comes from user WAV files or from seeded surrogates.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{self, KeyValues};
use crate::error::{Error, Result};
use crate::io::{self, SignalFile};
use crate::metrics::{self, MetricTrace};
use crate::optim::AdamHyper;
use crate::separator::{self, Algorithm, GradientVariant, RunConfig, RunResult};
use crate::signals::{self, MixingMatrix, NoiseSpec, SignalMatrix};

pub const DEFAULT_LENGTH: usize = 30_000;
pub const SPEECH_RATE_HZ: f64 = 8000.0;
pub const SPEECH_SNR_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Exp1,
    Exp2,
    Exp3,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
        }
    }

    pub fn channels(self) -> usize {
        match self {
            Experiment::Exp1 => 5,
            Experiment::Exp2 => 2,
            Experiment::Exp3 => 4,
        }
    }

    pub fn uses_speech(self) -> bool {
        !matches!(self, Experiment::Exp1)
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(Experiment::Exp1),
            "exp2" | "exp2-style" => Ok(Experiment::Exp2),
            "exp3" | "exp3-style" => Ok(Experiment::Exp3),
            other => Err(Error::invalid(format!(
                "unknown experiment {other:?} (expected exp1, exp2 or exp3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeechInput {
    Surrogate,
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub length: usize,
    /// Overrides the experiment's noise level; `None` keeps the default.
    pub noise: Option<NoiseSpec>,
    /// Required for `exp2`/`exp3`.
    pub speech: Option<SpeechInput>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            length: DEFAULT_LENGTH,
            noise: None,
            speech: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub experiment: Experiment,
    pub seed: u64,
    pub sources: SignalMatrix,
    pub mixing: MixingMatrix,
    pub mixtures: SignalMatrix,
    pub noise: NoiseSpec,
    pub speech: Option<SpeechInput>,
    pub warnings: Vec<String>,
}

pub fn synthesize(
    experiment: Experiment,
    seed: u64,
    opts: &SynthOptions,
) -> Result<ExperimentData> {
    let mut warnings = Vec::new();
    let (sources, mixing, default_noise) = match experiment {
        Experiment::Exp1 => (
            signals::generate_paper_sources(opts.length, seed)?,
            signals::hilbert_matrix(5)?,
            NoiseSpec::None,
        ),
        Experiment::Exp2 | Experiment::Exp3 => {
            let n = experiment.channels();
            let sources = match &opts.speech {
                None => {
                    return Err(Error::invalid(format!(
                        "{} needs speech recordings or surrogate speech",
                        experiment.name()
                    )))
                }
                Some(SpeechInput::Surrogate) => {
                    signals::speech_surrogates(n, opts.length, SPEECH_RATE_HZ, seed)?
                }
                Some(SpeechInput::Files(paths)) => {
                    let files: Vec<SignalFile> = paths
                        .iter()
                        .map(|p| SignalFile::from_path(p.clone()))
                        .collect();
                    let read = io::read_signals(&files, true)?;
                    warnings.extend(read.warnings);
                    truncate_to(read.signals, n, opts.length, &mut warnings)?
                }
            };
            let mixing = match experiment {
                Experiment::Exp2 => signals::random_mixing_matrix(2, seed)?,
                _ => signals::hilbert_matrix(4)?,
            };
            (sources, mixing, NoiseSpec::SnrDb(SPEECH_SNR_DB))
        }
    };
    let noise = opts.noise.unwrap_or(default_noise);
    let mixtures = signals::mix(&sources, &mixing, noise, seed)?;
    Ok(ExperimentData {
        experiment,
        seed,
        sources,
        mixing,
        mixtures,
        noise,
        speech: opts.speech.clone(),
        warnings,
    })
}

fn truncate_to(
    s: SignalMatrix,
    channels: usize,
    length: usize,
    warnings: &mut Vec<String>,
) -> Result<SignalMatrix> {
    if s.channels() != channels {
        return Err(Error::invalid(format!(
            "expected {channels} speech channels, got {}",
            s.channels()
        )));
    }
    if s.samples() <= length {
        return Ok(s);
    }
    warnings.push(format!(
        "speech truncated from {} to {length} samples",
        s.samples()
    ));
    let rate = s.sample_rate_hz();
    let data = s.into_data();
    SignalMatrix::new(data.slice(ndarray::s![.., ..length]).to_owned(), rate)
}

/// Per-experiment hyperparameters for `algorithm`.
pub fn default_config(experiment: Experiment, algorithm: Algorithm, seed: u64) -> RunConfig {
    match experiment {
        Experiment::Exp1 => RunConfig {
            algorithm,
            gradient_variant: GradientVariant::Standard,
            block_size: 30,
            epochs: 200,
            adam: AdamHyper {
                eta: 0.001,
                beta1: 0.5,
                beta2: 0.75,
                epsilon: 1e-8,
            },
            mu: 5e-5,
            alpha: 0.5,
            seed,
            ..RunConfig::default()
        },
        Experiment::Exp2 | Experiment::Exp3 => RunConfig {
            algorithm,
            gradient_variant: GradientVariant::Natural,
            block_size: 30,
            epochs: 100,
            adam: AdamHyper {
                eta: 0.001,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
            mu: 0.001,
            alpha: 0.5,
            seed,
            ..RunConfig::default()
        },
    }
}

/// Runs `config` and reduces its trace to one entry per epoch.
pub fn run_reduced(
    mixtures: &SignalMatrix,
    config: &RunConfig,
    reference: Option<&MixingMatrix>,
) -> Result<(RunResult, MetricTrace)> {
    let result = separator::run(mixtures, config, reference, |_| {})?;
    let nb = separator::blocks_per_epoch(mixtures.samples(), config.block_size);
    let per_epoch = metrics::epoch_reduce(&result.trace, nb)?;
    Ok((result, per_epoch))
}

#[derive(Debug)]
pub struct BenchRun {
    pub config: RunConfig,
    pub outcome: Result<(RunResult, MetricTrace)>,
}

impl BenchRun {
    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn final_pi(&self) -> Option<f64> {
        self.epoch_trace()?.last()?.pi
    }

    pub fn epoch_trace(&self) -> Option<&MetricTrace> {
        self.outcome.as_ref().ok().map(|(_, t)| t)
    }
}

/// Runs every config on the same mixtures, one thread per config. A
/// failing run does not stop the others.
pub fn bench(data: &ExperimentData, configs: Vec<RunConfig>) -> Vec<BenchRun> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .into_iter()
            .map(|config| {
                scope.spawn(move || {
                    let outcome = run_reduced(&data.mixtures, &config, Some(&data.mixing));
                    BenchRun { config, outcome }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench run panicked"))
            .collect()
    })
}

pub fn bench_configs(experiment: Experiment, seed: u64) -> Vec<RunConfig> {
    Algorithm::ALL
        .iter()
        .map(|&a| default_config(experiment, a, seed))
        .collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `sources.csv`, `mixing.csv`, `mixtures.csv` and `manifest.txt`.
pub fn write_experiment(data: &ExperimentData, out_dir: &Path) -> Result<KeyValues> {
    create_dir(out_dir)?;
    io::write_signals(
        &data.sources,
        &SignalFile::from_path(out_dir.join("sources.csv")),
    )?;
    io::write_matrix_csv(data.mixing.as_array().view(), out_dir.join("mixing.csv"))?;
    io::write_signals(
        &data.mixtures,
        &SignalFile::from_path(out_dir.join("mixtures.csv")),
    )?;
    let manifest = experiment_manifest(data);
    manifest.write(out_dir.join("manifest.txt"))?;
    Ok(manifest)
}

pub fn experiment_manifest(data: &ExperimentData) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.set("experiment", data.experiment.name())
        .set("seed", data.seed)
        .set("channels", data.sources.channels())
        .set("length", data.sources.samples())
        .set(
            "sample_rate_hz",
            io::format_f64(data.sources.sample_rate_hz()),
        )
        .set(
            "noise_snr_db",
            match data.noise {
                NoiseSpec::None => "none".to_string(),
                NoiseSpec::SnrDb(v) => io::format_f64(v),
            },
        )
        .set(
            "speech",
            match &data.speech {
                None => "none".to_string(),
                Some(SpeechInput::Surrogate) => "surrogate".to_string(),
                Some(SpeechInput::Files(p)) => p
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            },
        )
        .set("sources", "sources.csv")
        .set("mixing", "mixing.csv")
        .set("mixtures", "mixtures.csv");
    kv
}

/// Writes one directory per run (`trace.csv`, `config.txt`, `w_final.csv`)
/// and `summary.csv`. Returns whether every run succeeded.
pub fn write_bench(runs: &[BenchRun], out_dir: &Path) -> Result<bool> {
    create_dir(out_dir)?;
    let mut summary = String::from("algorithm,status,final_pi,final_grad_norm,message\n");
    let mut all_ok = true;
    for run in runs {
        let dir = out_dir.join(run.algorithm().name());
        create_dir(&dir)?;
        config::config_to_kv(&run.config).write(dir.join("config.txt"))?;
        match &run.outcome {
            Ok((result, trace)) => {
                io::write_trace(trace, dir.join("trace.csv"))?;
                io::write_matrix_csv(result.w_final.as_array().view(), dir.join("w_final.csv"))?;
                let last = trace.last();
                let opt = |v: Option<f64>| v.map(io::format_f64).unwrap_or_default();
                summary.push_str(&format!(
                    "{},ok,{},{},\n",
                    run.algorithm().name(),
                    opt(last.and_then(|e| e.pi)),
                    opt(last.and_then(|e| e.grad_norm)),
                ));
            }
            Err(e) => {
                all_ok = false;
                let message = e.to_string().replace([',', '\n'], ";");
                summary.push_str(&format!("{},failed,,,{message}\n", run.algorithm().name()));
            }
        }
    }
    let path = out_dir.join("summary.csv");
    fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;
    Ok(all_ok)
}
