//! `infoshape` — generate data, train encoders, release variants and score them.
//!
//! `--seed` is always the master seed; stages draw their own streams from it
//! (see `infoshape::experiment::STAGES`), so chaining the subcommands with one
//! seed reproduces `run-experiment` exactly.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infoshape::data::{load_dataset, LabelChoice, LabelRule, LabeledDataset};
use infoshape::eval::evaluate_matrix;
use infoshape::experiment::{
    apply_reduced_schedule, encode_variant, estimate_mi, load_encoder, preset_for_dim, run_experiment,
    save_dataset_with_manifest, split_variants, train_encoder_to_dir, write_report, DatasetSource, EncodeOptions,
    ExperimentConfig, Manifest, Variant,
};
use infoshape::trainer::ArchitecturePreset;
use infoshape::Error;

#[derive(Parser)]
#[command(name = "infoshape", version, about = "Task-based lossy encoders via neural MI estimation")]
struct Cli {
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled dataset file (synthetic, or MNIST IDX with derived labels).
    GenData(GenData),
    /// Train an InfoShape encoder on a dataset file.
    TrainEncoder(TrainEncoder),
    /// Release a dataset through one of the four variants.
    Encode(Encode),
    /// Train public/private classifiers on released datasets and report AUCs.
    Evaluate(Evaluate),
    /// Estimate I[label; T(x)] with a single estimator run.
    EstimateMi(EstimateMi),
    /// Run the full pipeline from a config file.
    RunExperiment(RunExperiment),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScheduleFlags {
    /// Reduced estimator schedule (500 iterations at lr 3e-3) instead of the full one.
    #[arg(long)]
    reduced_schedule: bool,
    /// Run everything sequentially.
    #[arg(long)]
    single_thread: bool,
}

impl ScheduleFlags {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.reduced_schedule |= self.reduced_schedule;
        cfg.single_thread |= self.single_thread;
    }
}

#[derive(Args)]
struct GenData {
    #[command(flatten)]
    common: Common,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_samples: Option<usize>,
    /// MNIST images (IDX); switches the source to MNIST.
    #[arg(long, requires = "mnist_labels")]
    mnist_images: Option<PathBuf>,
    #[arg(long, requires = "mnist_images")]
    mnist_labels: Option<PathBuf>,
    /// Keep the first N digits.
    #[arg(long)]
    subset: Option<usize>,
    /// bit-split or parity-magnitude.
    #[arg(long)]
    label_rule: Option<LabelRule>,
}

#[derive(Args)]
struct TrainEncoder {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    schedule: ScheduleFlags,
    /// Dataset file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// synthetic, mnist (default: from the feature count).
    #[arg(long)]
    preset: Option<ArchitecturePreset>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    steps_per_epoch: Option<usize>,
    #[arg(long)]
    estimator_iterations: Option<usize>,
    /// Train on every row instead of the training split.
    #[arg(long)]
    no_split: bool,
}

#[derive(Args)]
struct Encode {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data: PathBuf,
    /// infoshape, random, noise or identity.
    #[arg(long)]
    variant: Variant,
    #[arg(long)]
    out: PathBuf,
    /// Encoder checkpoint (infoshape variant).
    #[arg(long)]
    encoder: Option<PathBuf>,
    /// Noise standard deviation (noise variant).
    #[arg(long)]
    sigma: Option<f64>,
    /// Architecture for the random variant.
    #[arg(long)]
    preset: Option<ArchitecturePreset>,
}

#[derive(Args)]
struct Evaluate {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    single_thread: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long)]
    classifier_lr: Option<f64>,
    #[arg(long)]
    classifier_epochs: Option<usize>,
    #[arg(long)]
    classifier_hidden: Option<usize>,
    /// Released datasets as `name=path` or `path` (name = file stem).
    #[arg(required = true)]
    datasets: Vec<String>,
}

#[derive(Args)]
struct EstimateMi {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    schedule: ScheduleFlags,
    #[arg(long)]
    data: PathBuf,
    /// Encoder checkpoint; omitted means identity.
    #[arg(long)]
    encoder: Option<PathBuf>,
    /// public or private.
    #[arg(long)]
    label: LabelChoice,
    /// Trace CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args)]
struct RunExperiment {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    schedule: ScheduleFlags,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
}

fn gen_data(args: GenData) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    if let (Some(images), Some(labels)) = (args.mnist_images, args.mnist_labels) {
        cfg.dataset = DatasetSource::Mnist {
            images,
            labels,
            subset: args.subset,
            label_rule: args.label_rule.unwrap_or(LabelRule::ParityMagnitude),
        };
    } else if let DatasetSource::Synthetic(spec) = &mut cfg.dataset {
        if let Some(n) = args.n_samples {
            spec.n_samples = n;
        }
    } else if let DatasetSource::Mnist { subset, label_rule, .. } = &mut cfg.dataset {
        if args.subset.is_some() {
            *subset = args.subset;
        }
        if let Some(r) = args.label_rule {
            *label_rule = r;
        }
    }
    cfg.validate()?;
    let mut manifest = Manifest::new("gen-data", &cfg.dataset, cfg.seed);
    let data_seed = manifest.seed("data");
    let ds = cfg.dataset.load(data_seed)?;
    save_dataset_with_manifest(&ds, &args.out, &mut manifest)?;
    println!("wrote {} samples × {} features to {}", ds.len(), ds.dim(), args.out.display());
    Ok(())
}

fn preset_or_infer(preset: Option<ArchitecturePreset>, ds: &LabeledDataset) -> Result<ArchitecturePreset, Error> {
    match preset {
        Some(p) => Ok(p),
        None => preset_for_dim(ds.dim()),
    }
}

fn train_encoder(args: TrainEncoder) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    args.schedule.apply(&mut cfg);
    let mut tradeoff = cfg.tradeoff.clone();
    if cfg.reduced_schedule {
        apply_reduced_schedule(&mut tradeoff.estimator);
    }
    if let Some(l) = args.lambda {
        tradeoff.lambda = l;
    }
    if let Some(e) = args.epochs {
        tradeoff.epochs = e;
    }
    if let Some(s) = args.steps_per_epoch {
        tradeoff.steps_per_epoch = s;
    }
    if let Some(i) = args.estimator_iterations {
        tradeoff.estimator.iterations = i;
    }
    tradeoff.parallel_estimators = !cfg.single_thread;
    tradeoff.validate()?;
    let ds = load_dataset(&args.data)?;
    let preset = preset_or_infer(args.preset.or(cfg.architecture), &ds)?;
    let split = (!args.no_split).then_some(cfg.val_fraction);
    let outcome = train_encoder_to_dir(&ds, preset, &tradeoff, split, cfg.seed, &args.out_dir)?;
    if let (Some(first), Some(last)) = (outcome.record.epochs.first(), outcome.record.epochs.last()) {
        println!(
            "epoch 1: I_L {:.4} I_S {:.4}; epoch {}: I_L {:.4} I_S {:.4}",
            first.i_public, first.i_private, last.epoch, last.i_public, last.i_private
        );
    }
    println!("wrote encoder and training record to {}", args.out_dir.display());
    Ok(())
}

fn encode(args: Encode) -> Result<(), Error> {
    let seed = args.seed.unwrap_or(0);
    let ds = load_dataset(&args.data)?;
    let encoder = args.encoder.as_deref().map(load_encoder).transpose()?;
    let stage = match args.variant {
        Variant::Random => "baseline-random",
        Variant::Noise => "baseline-noise",
        _ => "encode",
    };
    #[derive(serde::Serialize)]
    struct Cfg {
        variant: &'static str,
        data: String,
        encoder: Option<String>,
        sigma: Option<f64>,
        preset: Option<&'static str>,
    }
    let mut manifest = Manifest::new(
        "encode",
        &Cfg {
            variant: args.variant.name(),
            data: args.data.display().to_string(),
            encoder: args.encoder.as_ref().map(|p| p.display().to_string()),
            sigma: args.sigma,
            preset: args.preset.map(ArchitecturePreset::name),
        },
        seed,
    );
    let opts = EncodeOptions {
        encoder,
        preset: args.preset,
        sigma: args.sigma,
        seed: manifest.seed(stage),
    };
    let out = encode_variant(&ds, args.variant, &opts)?;
    save_dataset_with_manifest(&out, &args.out, &mut manifest)?;
    println!(
        "{} variant: {} × {} written to {}",
        args.variant.name(),
        out.len(),
        out.dim(),
        args.out.display()
    );
    Ok(())
}

fn evaluate(args: Evaluate) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    cfg.single_thread |= args.single_thread;
    if let Some(f) = args.val_fraction {
        cfg.val_fraction = f;
    }
    let mut variants = Vec::new();
    for spec in &args.datasets {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_owned(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .ok_or_else(|| Error::Usage(format!("cannot name dataset {spec:?}")))?;
                (stem, p)
            }
        };
        variants.push((name, load_dataset(&path)?));
    }
    let mut classifier = match variants.first() {
        Some((_, d)) if d.dim() == 784 && cfg.classifier.is_none() => infoshape::eval::ClassifierConfig::mnist(),
        _ => cfg.classifier.clone().unwrap_or_default(),
    };
    if let Some(lr) = args.classifier_lr {
        classifier.lr = lr;
    }
    if let Some(e) = args.classifier_epochs {
        classifier.epochs = e;
    }
    if let Some(h) = args.classifier_hidden {
        classifier.hidden = h;
    }
    let mut manifest = Manifest::new("evaluate", &(&classifier, cfg.val_fraction, &args.datasets), cfg.seed);
    manifest.single_thread = cfg.single_thread;
    let split_seed = manifest.seed("split");
    let eval_seed = manifest.seed("evaluate");
    let variants = split_variants(variants, cfg.val_fraction, split_seed)?;
    let report = evaluate_matrix(&variants, &classifier, eval_seed, !cfg.single_thread)?;
    write_report(&mut manifest, &args.out_dir, Path::new(""), &report)?;
    manifest.save(args.out_dir.join("manifest.json"))?;
    print!("{}", report.to_csv());
    Ok(())
}

fn estimate(args: EstimateMi) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    args.schedule.apply(&mut cfg);
    let mut est = cfg.tradeoff.estimator.clone();
    if cfg.reduced_schedule {
        apply_reduced_schedule(&mut est);
    }
    if let Some(i) = args.iterations {
        est.iterations = i;
    }
    est.validate()?;
    let ds = load_dataset(&args.data)?;
    let encoder = args.encoder.as_deref().map(load_encoder).transpose()?;
    let mut manifest = Manifest::new("estimate-mi", &(&est, args.label.name()), cfg.seed);
    let result = estimate_mi(&ds, encoder.as_ref(), args.label, &est, cfg.seed);
    let estimate = match result {
        Ok(e) => e,
        Err(Error::Divergence { iteration, estimate, trace }) => {
            trace.write_csv(&args.out)?;
            return Err(Error::Divergence { iteration, estimate, trace });
        }
        Err(e) => return Err(e),
    };
    manifest.seeds.insert("estimate-mi".into(), cfg.seed);
    let root = args.out.parent().unwrap_or(Path::new(""));
    let name = args.out.file_name().ok_or_else(|| Error::Usage("--out has no file name".into()))?;
    manifest.write_output(root, name, estimate.trace.to_csv().as_bytes())?;
    let mut mpath = args.out.clone().into_os_string();
    mpath.push(".manifest.json");
    manifest.save(PathBuf::from(mpath))?;
    println!("{:?}", estimate.final_estimate);
    Ok(())
}

fn run(args: RunExperiment) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    args.schedule.apply(&mut cfg);
    if let Some(d) = args.out_dir {
        cfg.output_dir = d;
    }
    if let Some(e) = args.epochs {
        cfg.tradeoff.epochs = e;
    }
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.report.to_csv());
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::TrainEncoder(a) => train_encoder(a),
        Command::Encode(a) => encode(a),
        Command::Evaluate(a) => evaluate(a),
        Command::EstimateMi(a) => estimate(a),
        Command::RunExperiment(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("infoshape: error[{}]: {e}", e.kind());
            if let Some(d) = e.diagnostics() {
                eprintln!("  {d}");
            }
            ExitCode::from(match e {
                Error::Usage(_) | Error::Config(_) => 2,
                Error::Io { .. } | Error::Parse { .. } | Error::Serde(_) => 3,
                Error::Training { .. } | Error::Divergence { .. } => 4,
            })
        }
    }
}
