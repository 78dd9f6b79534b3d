//! End-to-end pipelines behind the command-line tool: experiment configs,
//! seed fan-out, artifact writing and run manifests.
//!
//! Seed fan-out: every stochastic stage draws from
//! `Prng::substream(master_seed, <stage>)` with the stage names listed in
//! [`STAGES`]; the derived seeds are written into each manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{apply_encoder, gaussian_noise_encoder, identity_encoder, random_encoder, DEFAULT_NOISE_SIGMA};
use crate::data::{
    derive_labels, generate_synthetic, load_dataset, load_mnist_idx, split, DatasetMeta, LabelChoice,
    LabelRule, LabeledDataset, Provenance, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_matrix, roc_svg, ClassifierConfig, EvalVariant, EvaluationReport};
use crate::mi::{train_mi_estimator, MiEstimate, MiEstimatorConfig, SampleSet};
use crate::nn::Checkpoint;
use crate::rng::{substream_key, Prng};
use crate::trainer::{encode_dataset, train_infoshape, ArchitecturePreset, EncoderModel, EncoderTrainRecord, TradeoffConfig};

/// Stage names used for seed fan-out.
pub const STAGES: [&str; 6] = ["data", "split", "infoshape", "baseline-random", "baseline-noise", "evaluate"];

/// Estimator iterations under the reduced (desk-scale) schedule.
pub const REDUCED_ITERATIONS: usize = 500;
/// Estimator learning rate under the reduced schedule; the default 1e-4 does
/// not converge in 500 iterations.
pub const REDUCED_LR: f64 = 3e-3;

/// Swaps the estimator schedule for the reduced one.
pub fn apply_reduced_schedule(config: &mut MiEstimatorConfig) {
    config.iterations = REDUCED_ITERATIONS;
    config.lr = REDUCED_LR;
}

/// Where the experiment's labeled samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Generated; `SyntheticSpec::seed` is replaced by the `data` stage seed.
    Synthetic(SyntheticSpec),
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        /// Keep only the first `subset` digits.
        #[serde(default)]
        subset: Option<usize>,
        #[serde(default = "default_mnist_rule")]
        label_rule: LabelRule,
    },
    /// A file written by `save_dataset`.
    File { path: PathBuf },
}

fn default_mnist_rule() -> LabelRule {
    LabelRule::ParityMagnitude
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticSpec::default())
    }
}

impl DatasetSource {
    pub fn load(&self, seed: u64) -> Result<LabeledDataset> {
        match self {
            DatasetSource::Synthetic(spec) => generate_synthetic(&SyntheticSpec {
                seed,
                ..spec.clone()
            }),
            DatasetSource::Mnist {
                images,
                labels,
                subset,
                label_rule,
            } => load_mnist(images, labels, *subset, *label_rule),
            DatasetSource::File { path } => load_dataset(path),
        }
    }

    fn default_preset(&self) -> Option<ArchitecturePreset> {
        match self {
            DatasetSource::Synthetic(_) => Some(ArchitecturePreset::Synthetic),
            DatasetSource::Mnist { .. } => Some(ArchitecturePreset::Mnist),
            DatasetSource::File { .. } => None,
        }
    }

    fn check_paths(&self) -> Result<()> {
        let paths: Vec<&PathBuf> = match self {
            DatasetSource::Synthetic(_) => vec![],
            DatasetSource::Mnist { images, labels, .. } => vec![images, labels],
            DatasetSource::File { path } => vec![path],
        };
        for p in paths {
            if !p.exists() {
                return Err(Error::config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// IDX digits → labeled dataset with the given rule.
pub fn load_mnist(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    subset: Option<usize>,
    rule: LabelRule,
) -> Result<LabeledDataset> {
    let mut digits = load_mnist_idx(images, labels)?;
    if let Some(n) = subset {
        digits = digits.head(n);
    }
    let (public, private) = derive_labels(&digits.digits, rule)?;
    LabeledDataset::new(
        digits.features,
        public,
        private,
        Provenance::DesignerSet,
        DatasetMeta {
            label_rule: Some(rule),
            generator: "mnist".into(),
            seed: None,
        },
    )
}

/// Rows the encoder may train on: the training side of the stratified split
/// drawn from the `split` stage seed. Validation rows stay unseen.
pub fn training_split(dataset: &LabeledDataset, val_fraction: f64, master_seed: u64) -> Result<LabeledDataset> {
    let seed = substream_key(master_seed, "split");
    let (train, _) = crate::data::split_indices(dataset, val_fraction, &mut Prng::new(seed))?;
    Ok(dataset.subset(&train))
}

/// Architecture implied by a dataset's feature count.
pub fn preset_for_dim(dim: usize) -> Result<ArchitecturePreset> {
    [ArchitecturePreset::Synthetic, ArchitecturePreset::Mnist]
        .into_iter()
        .find(|p| p.layer_dims().is_some_and(|d| d[0] == dim))
        .ok_or_else(|| Error::config(format!("no architecture preset takes {dim} input features")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub random: bool,
    pub noise: bool,
    pub noise_sigma: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            random: true,
            noise: true,
            noise_sigma: DEFAULT_NOISE_SIGMA,
        }
    }
}

/// Everything `run-experiment` needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub val_fraction: f64,
    /// Defaults to the preset matching the data source.
    pub architecture: Option<ArchitecturePreset>,
    pub dataset: DatasetSource,
    pub tradeoff: TradeoffConfig,
    /// Defaults to 20 hidden / 50 epochs, or 50 hidden / 10 epochs for MNIST.
    pub classifier: Option<ClassifierConfig>,
    pub baselines: BaselineConfig,
    /// Use the reduced estimator schedule instead of the full one.
    pub reduced_schedule: bool,
    /// Run everything sequentially.
    pub single_thread: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("infoshape-out"),
            val_fraction: 0.2,
            architecture: None,
            dataset: DatasetSource::default(),
            tradeoff: TradeoffConfig::default(),
            classifier: None,
            baselines: BaselineConfig::default(),
            reduced_schedule: false,
            single_thread: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// The configuration actually run: reduced schedule and preset defaults applied.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        if out.reduced_schedule {
            apply_reduced_schedule(&mut out.tradeoff.estimator);
        }
        if out.classifier.is_none() {
            out.classifier = match self.dataset {
                DatasetSource::Mnist { .. } => Some(ClassifierConfig::mnist()),
                DatasetSource::Synthetic(_) => Some(ClassifierConfig::default()),
                // decided once the file's feature count is known
                DatasetSource::File { .. } => None,
            };
        }
        if out.architecture.is_none() {
            out.architecture = self.dataset.default_preset();
        }
        out.tradeoff.parallel_estimators = !out.single_thread;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config("val_fraction must be in (0, 1)"));
        }
        self.tradeoff.validate()?;
        if let Some(c) = &self.classifier {
            c.validate()?;
        }
        if self.baselines.noise && !(self.baselines.noise_sigma > 0.0) {
            return Err(Error::config("noise_sigma must be positive"));
        }
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        self.dataset.check_paths()
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(&self.resolved()).expect("config serialises").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-run record of what was run and what was written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub single_thread: bool,
    pub reduced_schedule: bool,
    /// Output paths relative to the manifest, with their SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, master_seed: u64) -> Self {
        let config = serde_json::to_value(config).expect("config serialises");
        Self {
            tool: "infoshape".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: sha256_hex(config.to_string().as_bytes()),
            config,
            master_seed,
            seeds: BTreeMap::new(),
            single_thread: true,
            reduced_schedule: false,
            outputs: BTreeMap::new(),
        }
    }

    pub fn seed(&mut self, stage: &str) -> u64 {
        let s = substream_key(self.master_seed, stage);
        self.seeds.insert(stage.into(), s);
        s
    }

    /// Writes `contents` under `root` and records its hash.
    pub fn write_output(&mut self, root: &Path, rel: impl AsRef<Path>, contents: &[u8]) -> Result<PathBuf> {
        let rel = rel.as_ref();
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.outputs
            .insert(rel.to_string_lossy().replace('\\', "/"), sha256_hex(contents));
        Ok(path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
    }
}

/// All estimator traces of a training run in one long-format CSV.
pub fn traces_csv(record: &EncoderTrainRecord) -> String {
    let mut out = String::from("epoch,label,iteration,raw_estimate,smoothed_estimate\n");
    for (i, (public, private)) in record.traces.iter().enumerate() {
        for (label, trace) in [("public", public), ("private", private)] {
            for (it, (raw, smooth)) in trace.raw.iter().zip(trace.smoothed()).enumerate() {
                writeln!(out, "{},{label},{},{raw:?},{smooth:?}", i + 1, it + 1).unwrap();
            }
        }
    }
    out
}

/// Per-epoch `Ĩ[L;T]` and `Ĩ[S;T]` as an SVG line chart.
pub fn mi_epochs_svg(record: &EncoderTrainRecord) -> String {
    let (w, h, m) = (480.0, 300.0, 50.0);
    let n = record.epochs.len().max(2) as f64;
    let ymax = record
        .epochs
        .iter()
        .flat_map(|e| [e.i_public, e.i_private, e.h_public, e.h_private])
        .fold(0.1f64, f64::max);
    let line = |values: Vec<f64>| -> String {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = m + w * i as f64 / (n - 1.0);
                let y = m + h * (1.0 - v.max(0.0) / ymax);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        w + 2.0 * m + 120.0,
        h + 2.0 * m
    )
    .unwrap();
    writeln!(out, r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="25" text-anchor="middle">MI estimates per epoch (nats, max {ymax:.3})</text>"#, m + w / 2.0).unwrap();
    let series = [
        ("I[L;T]", "#1f77b4", record.epochs.iter().map(|e| e.i_public).collect::<Vec<_>>()),
        ("I[S;T]", "#d62728", record.epochs.iter().map(|e| e.i_private).collect()),
    ];
    for (i, (name, color, values)) in series.into_iter().enumerate() {
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, line(values)).unwrap();
        let ly = m + 15.0 + 18.0 * i as f64;
        writeln!(out, r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#, w + m + 10.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Outputs of a training run, in memory.
pub struct TrainOutcome {
    pub encoder: EncoderModel,
    pub record: EncoderTrainRecord,
    pub manifest: Manifest,
}

/// Trains an encoder and writes `encoder.json`, `record.csv`, `traces.csv`,
/// `mi_epochs.svg` and `manifest.json` into `out_dir`.
///
/// With `val_fraction`, training uses only [`training_split`] of `dataset`,
/// exactly as `run_experiment` does. On failure the partial record is still
/// written before the error is returned.
pub fn train_encoder_to_dir(
    dataset: &LabeledDataset,
    preset: ArchitecturePreset,
    config: &TradeoffConfig,
    val_fraction: Option<f64>,
    master_seed: u64,
    out_dir: &Path,
) -> Result<TrainOutcome> {
    #[derive(Serialize)]
    struct Cfg<'a> {
        preset: ArchitecturePreset,
        val_fraction: Option<f64>,
        tradeoff: &'a TradeoffConfig,
    }
    let mut manifest = Manifest::new(
        "train-encoder",
        &Cfg {
            preset,
            val_fraction,
            tradeoff: config,
        },
        master_seed,
    );
    manifest.single_thread = !config.parallel_estimators;
    let designer = match val_fraction {
        Some(f) => {
            manifest.seed("split");
            training_split(dataset, f, master_seed)?
        }
        None => dataset.clone(),
    };
    let stream = manifest.seed("infoshape");
    let (encoder, record) = match train_infoshape(&designer, preset, config, &mut Prng::new(stream)) {
        Ok(v) => v,
        Err(aborted) => {
            manifest.write_output(out_dir, "record.csv", aborted.record.to_csv().as_bytes())?;
            manifest.save(out_dir.join("manifest.json"))?;
            return Err(aborted.error);
        }
    };
    write_training_artifacts(&mut manifest, out_dir, Path::new(""), &encoder, &record)?;
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(TrainOutcome {
        encoder,
        record,
        manifest,
    })
}

fn write_training_artifacts(
    manifest: &mut Manifest,
    root: &Path,
    sub: &Path,
    encoder: &EncoderModel,
    record: &EncoderTrainRecord,
) -> Result<()> {
    let ckpt = encoder.checkpoint(&manifest.config_hash);
    manifest.write_output(root, sub.join("encoder.json"), ckpt.to_json().as_bytes())?;
    manifest.write_output(root, sub.join("record.csv"), record.to_csv().as_bytes())?;
    manifest.write_output(root, sub.join("traces.csv"), traces_csv(record).as_bytes())?;
    manifest.write_output(root, sub.join("mi_epochs.svg"), mi_epochs_svg(record).as_bytes())?;
    Ok(())
}

/// The four release variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Infoshape,
    Random,
    Noise,
    Identity,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Infoshape => "infoshape",
            Variant::Random => "random",
            Variant::Noise => "noise",
            Variant::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infoshape" => Ok(Variant::Infoshape),
            "random" => Ok(Variant::Random),
            "noise" => Ok(Variant::Noise),
            "identity" | "original" => Ok(Variant::Identity),
            other => Err(Error::usage(format!(
                "unknown variant {other:?} (infoshape, random, noise, identity)"
            ))),
        }
    }
}

/// Options for [`encode_variant`]; `encoder` is required for `infoshape`.
#[derive(Debug, Clone, Default)]
pub struct EncodeOptions {
    pub encoder: Option<EncoderModel>,
    pub preset: Option<ArchitecturePreset>,
    pub sigma: Option<f64>,
    pub seed: u64,
}

pub fn encode_variant(dataset: &LabeledDataset, variant: Variant, opts: &EncodeOptions) -> Result<LabeledDataset> {
    let mut out = match variant {
        Variant::Infoshape => {
            let enc = opts
                .encoder
                .as_ref()
                .ok_or_else(|| Error::usage("the infoshape variant needs an encoder checkpoint"))?;
            encode_dataset(enc, dataset)?
        }
        Variant::Random => {
            let preset = match opts.preset {
                Some(p) => p,
                None => preset_for_dim(dataset.dim())?,
            };
            apply_encoder(&random_encoder(preset, opts.seed)?, dataset)?
        }
        Variant::Noise => apply_encoder(
            &gaussian_noise_encoder(opts.sigma.unwrap_or(DEFAULT_NOISE_SIGMA), opts.seed)?,
            dataset,
        )?,
        Variant::Identity => apply_encoder(&identity_encoder(), dataset)?,
    };
    out.meta.generator = format!("{}:{}", variant.name(), dataset.meta.generator);
    Ok(out)
}

/// Splits every variant with the same seed. Splits depend only on labels and
/// the seed, and variants share labels row for row, so every variant is
/// split identically.
pub fn split_variants(
    variants: Vec<(String, LabeledDataset)>,
    val_fraction: f64,
    seed: u64,
) -> Result<Vec<EvalVariant>> {
    let first_labels = variants.first().map(|(_, d)| (d.public_labels().to_vec(), d.private_labels().to_vec()));
    variants
        .into_iter()
        .map(|(name, ds)| {
            if let Some((p, s)) = &first_labels {
                if ds.public_labels() != p.as_slice() || ds.private_labels() != s.as_slice() {
                    return Err(Error::usage(format!("variant {name} does not share labels with the others")));
                }
            }
            let (train, val) = split(&ds, val_fraction, &mut Prng::new(seed))?;
            Ok(EvalVariant { name, train, val })
        })
        .collect()
}

/// Writes the evaluation report, one ROC CSV per cell and one SVG per label.
pub fn write_report(manifest: &mut Manifest, root: &Path, sub: &Path, report: &EvaluationReport) -> Result<()> {
    manifest.write_output(root, sub.join("report.csv"), report.to_csv().as_bytes())?;
    for c in &report.cells {
        manifest.write_output(root, sub.join(format!("roc_{}_{}.csv", c.variant, c.label)), c.roc.to_csv().as_bytes())?;
    }
    for label in [LabelChoice::Public, LabelChoice::Private] {
        let curves: Vec<(String, _)> = report
            .cells
            .iter()
            .filter(|c| c.label == label)
            .map(|c| (format!("{} (AUC {:.3})", c.variant, c.auc), &c.roc))
            .collect();
        let svg = roc_svg(&format!("Validation ROC, {label} label"), &curves);
        manifest.write_output(root, sub.join(format!("roc_{label}.svg")), svg.as_bytes())?;
    }
    Ok(())
}

/// Trains one estimator on `(T(x), label)` for `cmd_estimate_mi`.
pub fn estimate_mi(
    dataset: &LabeledDataset,
    encoder: Option<&EncoderModel>,
    label: LabelChoice,
    config: &MiEstimatorConfig,
    seed: u64,
) -> Result<MiEstimate> {
    let features = match encoder {
        Some(e) => encode_dataset(e, dataset)?.features().clone(),
        None => dataset.features().clone(),
    };
    let beta = dataset.labels(label).iter().map(|&l| f64::from(l)).collect();
    let mut source = SampleSet::new(features, beta)?;
    train_mi_estimator(&mut source, config, &mut Prng::substream(seed, "estimate-mi"))
}

/// Result of a full experiment.
pub struct ExperimentOutcome {
    pub record: EncoderTrainRecord,
    pub report: EvaluationReport,
    pub manifest: Manifest,
}

/// Data → split → encoder → baselines → classifiers, writing the artifact tree:
///
/// ```text
/// <out>/manifest.json  config.toml
/// <out>/data/dataset.txt
/// <out>/encoder/{encoder.json, record.csv, traces.csv, mi_epochs.svg}
/// <out>/released/<variant>.txt          (one per variant)
/// <out>/report/{report.csv, roc_<variant>_<label>.csv, roc_<label>.svg}
/// ```
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let cfg = config.resolved();
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    let mut manifest = Manifest::new("run-experiment", &cfg, cfg.seed);
    manifest.single_thread = cfg.single_thread;
    manifest.reduced_schedule = cfg.reduced_schedule;
    let data_seed = manifest.seed("data");
    let split_seed = manifest.seed("split");
    let train_seed = manifest.seed("infoshape");
    let random_seed = manifest.seed("baseline-random");
    let noise_seed = manifest.seed("baseline-noise");
    let eval_seed = manifest.seed("evaluate");

    manifest.write_output(&out, "config.toml", cfg.to_toml()?.as_bytes())?;
    let dataset = cfg.dataset.load(data_seed)?;
    manifest.write_output(&out, "data/dataset.txt", crate::data::dataset_to_string(&dataset).as_bytes())?;
    let preset = match cfg.architecture {
        Some(p) => p,
        None => preset_for_dim(dataset.dim())?,
    };

    // The encoder only sees the training split; the validation rows are held
    // out for the downstream classifiers.
    let designer = training_split(&dataset, cfg.val_fraction, cfg.seed)?;
    log::info!("training {} encoder on {} samples", preset.name(), designer.len());
    let (encoder, record) = match train_infoshape(&designer, preset, &cfg.tradeoff, &mut Prng::new(train_seed)) {
        Ok(v) => v,
        Err(aborted) => {
            manifest.write_output(&out, "encoder/record.csv", aborted.record.to_csv().as_bytes())?;
            manifest.save(out.join("manifest.json"))?;
            return Err(aborted.error);
        }
    };
    write_training_artifacts(&mut manifest, &out, Path::new("encoder"), &encoder, &record)?;

    let mut released = vec![
        ("original".to_owned(), encode_variant(&dataset, Variant::Identity, &EncodeOptions::default())?),
        (
            "infoshape".to_owned(),
            encode_variant(
                &dataset,
                Variant::Infoshape,
                &EncodeOptions {
                    encoder: Some(encoder),
                    ..Default::default()
                },
            )?,
        ),
    ];
    if cfg.baselines.random {
        let opts = EncodeOptions {
            preset: Some(preset),
            seed: random_seed,
            ..Default::default()
        };
        released.push(("random".to_owned(), encode_variant(&dataset, Variant::Random, &opts)?));
    }
    if cfg.baselines.noise {
        let opts = EncodeOptions {
            sigma: Some(cfg.baselines.noise_sigma),
            seed: noise_seed,
            ..Default::default()
        };
        released.push(("noise".to_owned(), encode_variant(&dataset, Variant::Noise, &opts)?));
    }
    for (name, ds) in &released {
        manifest.write_output(&out, format!("released/{name}.txt"), crate::data::dataset_to_string(ds).as_bytes())?;
    }

    let variants = split_variants(released, cfg.val_fraction, split_seed)?;
    let classifier = cfg.classifier.clone().unwrap_or_else(|| match preset {
        ArchitecturePreset::Mnist => ClassifierConfig::mnist(),
        _ => ClassifierConfig::default(),
    });
    let report = evaluate_matrix(&variants, &classifier, eval_seed, !cfg.single_thread)?;
    write_report(&mut manifest, &out, Path::new("report"), &report)?;
    manifest.save(out.join("manifest.json"))?;
    Ok(ExperimentOutcome {
        record,
        report,
        manifest,
    })
}

/// Writes `dataset` and a manifest beside it (`<path>.manifest.json`).
pub fn save_dataset_with_manifest(dataset: &LabeledDataset, path: &Path, manifest: &mut Manifest) -> Result<()> {
    let text = crate::data::dataset_to_string(dataset);
    let root = path.parent().unwrap_or(Path::new(""));
    let name = path.file_name().ok_or_else(|| Error::usage("output path has no file name"))?;
    manifest.write_output(root, name, text.as_bytes())?;
    let mut mpath = path.as_os_str().to_owned();
    mpath.push(".manifest.json");
    manifest.save(PathBuf::from(mpath))
}

/// Loads an encoder checkpoint file.
pub fn load_encoder(path: impl AsRef<Path>) -> Result<EncoderModel> {
    EncoderModel::from_checkpoint(&Checkpoint::load(path)?)
}
