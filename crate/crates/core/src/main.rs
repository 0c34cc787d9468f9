use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adam_infomax::config::{self, KeyValues};
use adam_infomax::experiment::{self, Experiment, SpeechInput, SynthOptions};
use adam_infomax::io::{self, SignalFile};
use adam_infomax::separator::{Algorithm, GradientVariant, RunConfig};
use adam_infomax::signals::{MixingMatrix, NoiseSpec};
use adam_infomax::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "adam-infomax",
    version,
    about = "InfoMax blind source separation with Adam, SGD and momentum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate sources, mixing matrix and mixtures for an experiment.
    Synth(SynthArgs),
    /// Separate mixtures with a single configuration.
    Separate(SeparateArgs),
    /// Compare adam, sgd and momentum on one experiment.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// exp1, exp2 (exp2-style) or exp3 (exp3-style).
    #[arg(long)]
    experiment: Experiment,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per signal.
    #[arg(long, default_value_t = experiment::DEFAULT_LENGTH)]
    length: usize,
    /// Override the additive noise level in dB (`none` disables noise).
    #[arg(long)]
    snr_db: Option<String>,
    /// Use seeded synthetic speech when no recordings are given.
    #[arg(long)]
    surrogate_speech: bool,
    /// Speech recordings (WAV/CSV) for exp2/exp3.
    #[arg(long, num_args = 1..)]
    speech: Vec<PathBuf>,
}

impl DataArgs {
    fn synth_options(&self) -> Result<SynthOptions> {
        let speech = if !self.speech.is_empty() {
            Some(SpeechInput::Files(self.speech.clone()))
        } else if self.surrogate_speech {
            Some(SpeechInput::Surrogate)
        } else {
            None
        };
        let noise = match self.snr_db.as_deref() {
            None => None,
            Some("none") => Some(NoiseSpec::None),
            Some(v) => Some(NoiseSpec::SnrDb(v.parse().map_err(|_| {
                Error::InvalidArgument(format!("invalid --snr-db {v:?}"))
            })?)),
        };
        Ok(SynthOptions {
            length: self.length,
            noise,
            speech,
        })
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Hyperparameter overrides applied on top of defaults or a config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_parser = parse_variant)]
    gradient: Option<GradientVariant>,
}

fn parse_variant(s: &str) -> std::result::Result<GradientVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Overrides {
    fn apply(&self, mut c: RunConfig) -> Result<RunConfig> {
        if let Some(v) = self.eta {
            c.adam.eta = v;
        }
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.beta1 {
            c.adam.beta1 = v;
        }
        if let Some(v) = self.beta2 {
            c.adam.beta2 = v;
        }
        if let Some(v) = self.epsilon {
            c.adam.epsilon = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.block_size {
            c.block_size = v;
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.gradient {
            c.gradient_variant = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct SeparateArgs {
    /// Mixture files (CSV or WAV); defaults to the manifest's mixtures.
    mixtures: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest written by `synth`; supplies mixtures and the true mixing matrix.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// True mixing matrix (CSV) for the performance index.
    #[arg(long)]
    mixing: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    seed: Option<u64>,
    /// Truncate inputs of unequal length to the shortest.
    #[arg(long)]
    truncate: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Separate(args) => cmd_separate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_synth(args: SynthArgs) -> Result<bool> {
    let data = experiment::synthesize(
        args.data.experiment,
        args.data.seed,
        &args.data.synth_options()?,
    )?;
    warn_all(&data.warnings);
    experiment::write_experiment(&data, &args.out)?;
    println!(
        "wrote {} ({} x {} mixtures) to {}",
        data.experiment.name(),
        data.mixtures.channels(),
        data.mixtures.samples(),
        args.out.display()
    );
    Ok(true)
}

fn relative_to(manifest: &Path, value: &str) -> PathBuf {
    manifest.parent().unwrap_or(Path::new(".")).join(value)
}

fn cmd_separate(args: SeparateArgs) -> Result<bool> {
    let manifest = args.manifest.as_deref().map(KeyValues::read).transpose()?;

    let mut inputs = args.mixtures.clone();
    if inputs.is_empty() {
        if let (Some(kv), Some(path)) = (&manifest, &args.manifest) {
            if let Some(m) = kv.get("mixtures") {
                inputs.push(relative_to(path, m));
            }
        }
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument(
            "no mixture files given (pass files or --manifest)".into(),
        ));
    }
    let files: Vec<SignalFile> = inputs.iter().map(SignalFile::from_path).collect();
    let read = io::read_signals(&files, args.truncate)?;
    warn_all(&read.warnings);
    let mixtures = read.signals;

    let mixing_path = args.mixing.clone().or_else(|| {
        let kv = manifest.as_ref()?;
        Some(relative_to(args.manifest.as_ref()?, kv.get("mixing")?))
    });
    let mixing: Option<MixingMatrix> = mixing_path
        .as_ref()
        .map(io::read_mixing_matrix)
        .transpose()?;

    let mut base = RunConfig::default();
    if let Some(kv) = &manifest {
        if let Some(seed) = kv.get("seed") {
            base.seed = seed
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad manifest seed {seed:?}")))?;
        }
    }
    let mut cfg = match &args.config {
        Some(path) => config::read_config(path, base)?,
        None => base,
    };
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let cfg = args.overrides.apply(cfg)?;

    let (result, trace) = experiment::run_reduced(&mixtures, &cfg, mixing.as_ref())?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    io::write_signals(
        &result.separated,
        &SignalFile::from_path(args.out.join("separated.csv")),
    )?;
    io::write_matrix_csv(
        result.w_final.as_array().view(),
        args.out.join("w_final.csv"),
    )?;
    io::write_trace(&trace, args.out.join("trace.csv"))?;

    let mut out_manifest = config::config_to_kv(&cfg);
    out_manifest.set(
        "mixtures",
        inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(";"),
    );
    out_manifest.set(
        "mixing",
        mixing_path
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "none".into()),
    );
    out_manifest.write(args.out.join("manifest.txt"))?;

    match trace.last() {
        Some(last) => println!(
            "{}: {} epochs, final pi {}, final grad norm {}",
            cfg.algorithm.name(),
            trace.len(),
            last.pi
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "n/a".into()),
            last.grad_norm
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_default()
        ),
        None => println!("{}: empty trace", cfg.algorithm.name()),
    }
    Ok(true)
}

fn cmd_bench(args: BenchArgs) -> Result<bool> {
    let exp = args.data.experiment;
    let data = experiment::synthesize(exp, args.data.seed, &args.data.synth_options()?)?;
    warn_all(&data.warnings);
    let configs = experiment::bench_configs(exp, args.data.seed)
        .into_iter()
        .map(|c| args.overrides.apply(c))
        .collect::<Result<Vec<_>>>()?;

    let runs = experiment::bench(&data, configs);
    experiment::write_experiment(&data, &args.out.join("data"))?;
    let ok = experiment::write_bench(&runs, &args.out)?;

    for run in &runs {
        match &run.outcome {
            Ok(_) => println!(
                "{:<9} final pi {}",
                run.algorithm().name(),
                run.final_pi()
                    .map(|v| format!("{v:.6}"))
                    .unwrap_or_else(|| "n/a".into())
            ),
            Err(e) => println!("{:<9} FAILED: {e}", run.algorithm().name()),
        }
    }
    Ok(ok)
}
