use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmu_events::eval::{
    accuracy, evaluate, leave_one_out, run_sweep, stratified_subsample, train_and_evaluate, Method,
    MethodConfig, SweepSpec, TrainedModel,
};
use pmu_events::exec::Exec;
use pmu_events::phasor::{class_counts, Dataset, EventRecord};
use pmu_events::synth::{build_dataset, GeneratorConfig};
use pmu_events::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "pmu-events", version, about = "Synthetic PMU event generation and classification")]
struct Cli {
    /// Run every job on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset file.
    Gen(GenArgs),
    /// Train on a stratified split and evaluate on the held-out side.
    Train(TrainArgs),
    /// Evaluate a saved model on every record of a dataset file.
    Eval(EvalArgs),
    /// Leave-one-out accuracy.
    Loo(LooArgs),
    /// Accuracy over training fractions, sampling rates, methods and seeds.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_sps)]
    sps: Option<u32>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    generator: GeneratorArgs,
}

/// Generator settings: a TOML file, then individual flag overrides.
#[derive(Args, Default)]
struct GeneratorArgs {
    /// Flat key = value file with generator config fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    thevenin_source: Option<f64>,
    #[arg(long)]
    thevenin_impedance_mag: Option<f64>,
    #[arg(long)]
    thevenin_impedance_angle_deg: Option<f64>,
    #[arg(long)]
    base_load_current: Option<f64>,
    #[arg(long)]
    cap_step_v: Option<f64>,
    #[arg(long)]
    cap_transition_s: Option<f64>,
    #[arg(long)]
    tap_step_v: Option<f64>,
    #[arg(long)]
    noise_std_fraction: Option<f64>,
}

impl GeneratorArgs {
    fn resolve(&self) -> Result<GeneratorConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
                GeneratorConfig::from_toml_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
            }
            None => GeneratorConfig::default(),
        };
        let overrides = [
            (self.thevenin_source, &mut cfg.thevenin_source),
            (self.thevenin_impedance_mag, &mut cfg.thevenin_impedance_mag),
            (self.thevenin_impedance_angle_deg, &mut cfg.thevenin_impedance_angle_deg),
            (self.base_load_current, &mut cfg.base_load_current),
            (self.cap_step_v, &mut cfg.cap_step_v),
            (self.cap_transition_s, &mut cfg.cap_transition_s),
            (self.tap_step_v, &mut cfg.tap_step_v),
            (self.noise_std_fraction, &mut cfg.noise_std_fraction),
        ];
        for (value, slot) in overrides {
            if let Some(v) = value {
                *slot = v;
            }
        }
        Ok(cfg)
    }
}

/// Hyperparameters of both pipelines; unset flags keep the defaults.
#[derive(Args, Default)]
struct HyperArgs {
    /// SVM box constraint.
    #[arg(long)]
    c: Option<f64>,
    /// Gaussian kernel width, in standardized eigenvalue units.
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of leading eigenvalues fed to the SVM (1..=6).
    #[arg(long)]
    k: Option<usize>,
    /// Choose c and sigma by 3-fold cross-validation on the training side.
    #[arg(long)]
    cross_validate: bool,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_passes: Option<usize>,
    /// Autoencoder hidden size.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs_ae: Option<usize>,
    #[arg(long)]
    epochs_softmax: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    /// Backpropagate through the encoder after softmax training.
    #[arg(long)]
    fine_tune: bool,
}

impl HyperArgs {
    fn resolve(&self) -> MethodConfig {
        let mut cfg = MethodConfig::default();
        let svm = &mut cfg.pca_svm;
        svm.hyper.c = self.c.unwrap_or(svm.hyper.c);
        svm.hyper.sigma = self.sigma.unwrap_or(svm.hyper.sigma);
        svm.hyper.tol = self.tol.unwrap_or(svm.hyper.tol);
        svm.hyper.max_passes = self.max_passes.unwrap_or(svm.hyper.max_passes);
        svm.k = self.k.unwrap_or(svm.k);
        svm.cross_validate = self.cross_validate;
        let ae = &mut cfg.ae_softmax;
        ae.hidden = self.hidden.unwrap_or(ae.hidden);
        ae.fine_tune = self.fine_tune;
        let t = &mut ae.train;
        t.learning_rate = self.learning_rate.unwrap_or(t.learning_rate);
        t.epochs_ae = self.epochs_ae.unwrap_or(t.epochs_ae);
        t.epochs_softmax = self.epochs_softmax.unwrap_or(t.epochs_softmax);
        t.batch_size = self.batch_size.unwrap_or(t.batch_size);
        t.l2 = self.l2.unwrap_or(t.l2);
        cfg
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    PcaSvm,
    AeSoftmax,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::PcaSvm => Method::PcaSvm,
            MethodArg::AeSoftmax => Method::AeSoftmax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodsArg {
    PcaSvm,
    AeSoftmax,
    Both,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_fraction)]
    fraction: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    model_out: PathBuf,
    /// Defaults to the model path with a `.confusion.json` suffix.
    #[arg(long)]
    confusion_out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    confusion_out: Option<PathBuf>,
}

#[derive(Args)]
struct LooArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run on this many randomly chosen records per class instead of all.
    #[arg(long)]
    per_class: Option<usize>,
    /// Also write accuracy and confusion matrix as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "both")]
    methods: MethodsArg,
    #[arg(long, value_delimiter = ',', default_value = "60,120", value_parser = parse_sps)]
    sps: Vec<u32>,
    /// Inclusive range `a..b` or a comma-separated list.
    #[arg(long, value_parser = parse_seeds, default_value = "1..5")]
    seeds: SeedList,
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction,
          default_value = "0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    fractions: Vec<f64>,
    /// Results CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_sps(s: &str) -> Result<u32, String> {
    match s.trim().parse::<u32>() {
        Ok(v @ (60 | 120)) => Ok(v),
        _ => Err(format!("sps must be 60 or 120, got {s:?}")),
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(f) if f > 0.0 && f < 1.0 => Ok(f),
        _ => Err(format!("fraction must lie strictly between 0 and 1, got {s:?}")),
    }
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let bad = || format!("expected a seed range like 1..5 or a list like 1,2,3, got {s:?}");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok(SeedList((a..=b).collect()));
    }
    let seeds = s
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    Ok(SeedList(seeds))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }

    fn from_error(context: &Path, e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => Self::usage(msg),
            other => Self::io(context, other),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => Self::usage(msg),
            other => Self { code: EXIT_IO, message: other.to_string() },
        }
    }
}

/// Write-then-rename so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let f = File::open(path).map_err(|e| Failure::io(path, e))?;
    Dataset::read_from(BufReader::new(f)).map_err(|e| Failure::io(path, e))
}

fn read_model(path: &Path) -> Result<TrainedModel, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    TrainedModel::from_slice(&bytes).map_err(|e| Failure::io(path, e))
}

fn print_counts(ds: &Dataset) {
    for (class, n) in class_counts(ds) {
        println!("{class}: {n}");
    }
}

/// Exit status for a finished run.
fn finish(converged: bool) -> Result<u8, Failure> {
    if converged {
        Ok(0)
    } else {
        eprintln!("warning: SVM training hit the iteration limit before meeting the KKT tolerance");
        Ok(EXIT_UNCONVERGED)
    }
}

fn cmd_gen(a: &GenArgs, exec: Exec) -> Result<u8, Failure> {
    let mut cfg = a.generator.resolve()?;
    if let Some(sps) = a.sps {
        cfg.sps = sps;
    }
    cfg.master_seed = a.seed;
    cfg.validate()?;
    let ds = build_dataset(&cfg, exec)?;
    write_atomic(&a.out, &ds.to_bytes()?)?;
    println!("wrote {} records at {} sps to {}", ds.len(), ds.sps, a.out.display());
    print_counts(&ds);
    Ok(0)
}

fn cmd_train(a: &TrainArgs, exec: Exec) -> Result<u8, Failure> {
    let ds = read_dataset(&a.data)?;
    let method = Method::from(a.method);
    let (model, cm) = train_and_evaluate(&ds, method, &a.hyper.resolve(), a.fraction, a.seed, exec)
        .map_err(|e| Failure::from_error(&a.data, e))?;
    write_atomic(&a.model_out, &model.to_bytes()?)?;
    let confusion_path = a.confusion_out.clone().unwrap_or_else(|| {
        let mut p = a.model_out.clone().into_os_string();
        p.push(".confusion.json");
        PathBuf::from(p)
    });
    write_atomic(&confusion_path, format!("{}\n", cm.to_json(method.name())).as_bytes())?;
    print!("{cm}");
    println!("accuracy {:.4}", accuracy(&cm)?);
    finish(model.converged())
}

fn cmd_eval(a: &EvalArgs, exec: Exec) -> Result<u8, Failure> {
    let model = read_model(&a.model)?;
    let ds = read_dataset(&a.data)?;
    let records: Vec<&EventRecord> = ds.records.iter().collect();
    let cm = evaluate(&model, &records, exec).map_err(|e| Failure::from_error(&a.data, e))?;
    if let Some(path) = &a.confusion_out {
        write_atomic(path, format!("{}\n", cm.to_json(model.method().name())).as_bytes())?;
    }
    print!("{cm}");
    println!("accuracy {:.4}", accuracy(&cm)?);
    Ok(0)
}

fn cmd_loo(a: &LooArgs, exec: Exec) -> Result<u8, Failure> {
    let mut ds = read_dataset(&a.data)?;
    if let Some(n) = a.per_class {
        ds = stratified_subsample(&ds, n, a.seed)?;
    }
    let method = Method::from(a.method);
    let res = leave_one_out(&ds, method, &a.hyper.resolve(), a.seed, exec)?;
    if let Some(path) = &a.out {
        let json = serde_json::json!({
            "method": method.name(),
            "folds": ds.len(),
            "accuracy": res.accuracy,
            "confusion": serde_json::from_str::<serde_json::Value>(&res.confusion.to_json(method.name()))
                .expect("confusion JSON parses"),
        });
        let text = serde_json::to_string_pretty(&json).expect("serializes");
        write_atomic(path, format!("{text}\n").as_bytes())?;
    }
    println!("{method} leave-one-out over {} folds: accuracy {:.4}", ds.len(), res.accuracy);
    finish(res.converged)
}

fn cmd_sweep(a: &SweepArgs, exec: Exec) -> Result<u8, Failure> {
    let base = a.generator.resolve()?;
    base.validate()?;
    let methods = match a.methods {
        MethodsArg::PcaSvm => vec![Method::PcaSvm],
        MethodsArg::AeSoftmax => vec![Method::AeSoftmax],
        MethodsArg::Both => Method::ALL.to_vec(),
    };
    let spec = SweepSpec {
        methods,
        sps: a.sps.clone(),
        fractions: a.fractions.clone(),
        seeds: a.seeds.0.clone(),
    };
    let res = run_sweep(&spec, &base, &a.hyper.resolve(), exec)?;
    let mut csv = Vec::new();
    res.write_csv(&mut csv)?;
    match &a.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            println!("wrote {} rows to {}", res.rows.len(), path.display());
        }
        None => std::io::stdout().write_all(&csv).map_err(|e| Failure::io(Path::new("<stdout>"), e))?,
    }
    finish(res.converged())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, exec),
        Command::Train(a) => cmd_train(a, exec),
        Command::Eval(a) => cmd_eval(a, exec),
        Command::Loo(a) => cmd_loo(a, exec),
        Command::Sweep(a) => cmd_sweep(a, exec),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
