//! Downstream classifiers, ROC curves and the variant × label AUC matrix.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{LabelChoice, LabeledDataset};
use crate::error::{Error, Result};
use crate::nn::{sgd_step, Activation, Matrix, Mlp};
use crate::rng::{substream_key, Prng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 20,
            epochs: 50,
            lr: 0.1,
            batch_size: 100,
        }
    }
}

impl ClassifierConfig {
    /// The small step size (1e-4). With batch-averaged BCE and 50 epochs it
    /// leaves the classifier far from converged; see the README.
    pub const SMALL_LR: f64 = 1e-4;

    pub fn small_lr() -> Self {
        Self {
            lr: Self::SMALL_LR,
            ..Self::default()
        }
    }

    /// 50 hidden units, 10 epochs.
    pub fn mnist() -> Self {
        Self {
            hidden: 50,
            epochs: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.batch_size == 0 {
            return Err(Error::config("classifier hidden width and batch size must be positive"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::config("classifier lr must be positive"));
        }
        Ok(())
    }
}

/// `d → hidden (ReLU) → 1 (Sigmoid)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    net: Mlp,
}

impl ClassifierModel {
    pub fn init(input_dim: usize, hidden: usize, rng: &mut Prng) -> Result<Self> {
        let net = Mlp::init(&[input_dim, hidden, 1], &[Activation::Relu, Activation::Sigmoid], rng)?;
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    /// P(label = 1 | x) per row.
    pub fn predict_proba(&self, features: &Matrix) -> Result<Vec<f64>> {
        Ok(self.net.predict(features)?.into_values())
    }
}

fn bce(p: &[f64], t: &[f64]) -> f64 {
    let eps = 1e-12;
    let total: f64 = p
        .iter()
        .zip(t)
        .map(|(&p, &t)| -(t * p.max(eps).ln() + (1.0 - t) * (1.0 - p).max(eps).ln()))
        .sum();
    total / p.len() as f64
}

/// Mean binary cross-entropy of `model` on `dataset`.
pub fn classifier_loss(model: &ClassifierModel, dataset: &LabeledDataset, label: LabelChoice) -> Result<f64> {
    let p = model.predict_proba(dataset.features())?;
    let t: Vec<f64> = dataset.labels(label).iter().map(|&l| f64::from(l)).collect();
    Ok(bce(&p, &t))
}

/// Mini-batch SGD on binary cross-entropy, reshuffling every epoch.
pub fn train_classifier(
    train_set: &LabeledDataset,
    label: LabelChoice,
    config: &ClassifierConfig,
    rng: &mut Prng,
) -> Result<ClassifierModel> {
    train_classifier_with(train_set, label, config, rng, |_, _| {})
}

/// [`train_classifier`] with a callback receiving `(epoch, mean batch loss)`.
pub fn train_classifier_with(
    train_set: &LabeledDataset,
    label: LabelChoice,
    config: &ClassifierConfig,
    rng: &mut Prng,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<ClassifierModel> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::usage("classifier training set is empty"));
    }
    let mut init = rng.fork("classifier-init");
    let mut model = ClassifierModel::init(train_set.dim(), config.hidden, &mut init)?;
    let targets: Vec<f64> = train_set.labels(label).iter().map(|&l| f64::from(l)).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for rows in order.chunks(config.batch_size) {
            let x = train_set.features().select_rows(rows);
            let t: Vec<f64> = rows.iter().map(|&r| targets[r]).collect();
            let (p, cache) = model.net.forward(&x)?;
            let p = p.into_values();
            let loss = bce(&p, &t);
            if !loss.is_finite() {
                return Err(Error::training(
                    "non-finite classifier loss",
                    format!("epoch {epoch}, batch of {}", rows.len()),
                ));
            }
            epoch_loss += loss * rows.len() as f64;
            let scale = 1.0 / rows.len() as f64;
            let dlogit: Vec<f64> = p.iter().zip(&t).map(|(p, t)| (p - t) * scale).collect();
            let (grads, _) = model
                .net
                .backward_from_logits(&cache, &Matrix::from_vec(rows.len(), 1, dlogit)?)?;
            sgd_step(&mut model.net, &grads, config.lr)?;
        }
        on_epoch(epoch, epoch_loss / train_set.len() as f64);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    /// (false-positive rate, true-positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RocReport {
    /// Trapezoidal area under `points`.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            writeln!(out, "{f:?},{t:?}").unwrap();
        }
        out
    }
}

/// ROC over every distinct score and the Mann–Whitney AUC (ties count half).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocReport> {
    if scores.len() != labels.len() {
        return Err(Error::usage(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::usage("labels must be 0 or 1"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::usage("scores contain NaN"));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::usage("ROC needs at least one positive and one negative"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // Walk thresholds from high to low; each tie group is one ROC step.
    // The rank statistic falls out of the same walk: a positive beats every
    // negative below its group and ties with those inside it.
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut wins = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0usize, 0usize);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        // positives in this group vs negatives strictly below + half the tied ones
        wins += gp as f64 * ((n_neg - fp - gn) as f64 + 0.5 * gn as f64);
        tp += gp;
        fp += gn;
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(RocReport {
        points,
        auc: wins / (n_pos as f64 * n_neg as f64),
        n_pos,
        n_neg,
    })
}

/// Exhaustive pairwise AUC; quadratic, for tests.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 0).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::usage("ROC needs at least one positive and one negative"));
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// One released dataset, split the same way as every other variant.
#[derive(Debug, Clone)]
pub struct EvalVariant {
    pub name: String,
    pub train: LabeledDataset,
    pub val: LabeledDataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub variant: String,
    pub label: LabelChoice,
    pub auc: f64,
    pub n_val: usize,
    /// Seed of the cell's classifier stream.
    pub seed: u64,
    pub roc: RocReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub cells: Vec<EvalCell>,
}

impl EvaluationReport {
    pub const CSV_HEADER: &'static str = "variant,label_type,auc,n_val,seed";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for c in &self.cells {
            writeln!(out, "{},{},{:?},{},{}", c.variant, c.label, c.auc, c.n_val, c.seed).unwrap();
        }
        out
    }

    pub fn auc(&self, variant: &str, label: LabelChoice) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.label == label)
            .map(|c| c.auc)
    }

    /// Writes `report.csv`, `roc_<variant>_<label>.csv` and `roc_<label>.svg`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: String, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write("report.csv".into(), self.to_csv())?;
        for c in &self.cells {
            write(format!("roc_{}_{}.csv", c.variant, c.label), c.roc.to_csv())?;
        }
        for label in [LabelChoice::Public, LabelChoice::Private] {
            let curves: Vec<(String, &RocReport)> = self
                .cells
                .iter()
                .filter(|c| c.label == label)
                .map(|c| (format!("{} (AUC {:.3})", c.variant, c.auc), &c.roc))
                .collect();
            if !curves.is_empty() {
                write(
                    format!("roc_{label}.svg"),
                    roc_svg(&format!("Validation ROC, {label} label"), &curves),
                )?;
            }
        }
        Ok(())
    }
}

/// Trains and scores one classifier per variant × label.
///
/// Each cell draws its classifier stream from `(seed, variant, label)` only,
/// so the table does not depend on cell order or on `parallel`.
pub fn evaluate_matrix(
    variants: &[EvalVariant],
    config: &ClassifierConfig,
    seed: u64,
    parallel: bool,
) -> Result<EvaluationReport> {
    config.validate()?;
    let jobs: Vec<(&EvalVariant, LabelChoice)> = variants
        .iter()
        .flat_map(|v| [(v, LabelChoice::Public), (v, LabelChoice::Private)])
        .collect();
    let run = |(variant, label): (&EvalVariant, LabelChoice)| -> Result<EvalCell> {
        let cell_seed = substream_key(seed, &format!("classifier/{}/{label}", variant.name));
        let mut rng = Prng::new(cell_seed);
        let model = train_classifier(&variant.train, label, config, &mut rng)?;
        let scores = model.predict_proba(variant.val.features())?;
        let roc = roc_auc(&scores, variant.val.labels(label))?;
        Ok(EvalCell {
            variant: variant.name.clone(),
            label,
            auc: roc.auc,
            n_val: variant.val.len(),
            seed: cell_seed,
            roc,
        })
    };
    let cells = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs.iter().map(|&job| s.spawn(move || run(job))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::training("classifier thread panicked", ""))))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        jobs.into_iter().map(run).collect::<Result<Vec<_>>>()?
    };
    Ok(EvaluationReport { cells })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static SVG with one polyline per curve plus the chance diagonal.
pub fn roc_svg<S: AsRef<str>>(title: &str, curves: &[(S, &RocReport)]) -> String {
    let (size, margin) = (360.0, 50.0);
    let map = |(f, t): (f64, f64)| (margin + f * size, margin + (1.0 - t) * size);
    let mut out = String::new();
    let total = size + 2.0 * margin;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#,
        w = total + 180.0,
        h = total
    )
    .unwrap();
    writeln!(out, r#"<text x="{}" y="25" text-anchor="middle">{}</text>"#, margin + size / 2.0, xml_escape(title)).unwrap();
    writeln!(
        out,
        r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{margin}" y1="{y}" x2="{x}" y2="{margin}" stroke="gray" stroke-dasharray="4 4"/>"#,
        y = margin + size,
        x = margin + size
    )
    .unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">false positive rate</text>"#, margin + size / 2.0, total - 15.0).unwrap();
    writeln!(
        out,
        r#"<text x="15" y="{y}" text-anchor="middle" transform="rotate(-90 15 {y})">true positive rate</text>"#,
        y = margin + size / 2.0
    )
    .unwrap();
    for (i, (name, roc)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = roc
            .points
            .iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        let ly = margin + 15.0 + 18.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{x0}" y1="{ly}" x2="{x1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{ty}">{}</text>"#,
            xml_escape(name.as_ref()),
            x0 = total,
            x1 = total + 20.0,
            tx = total + 25.0,
            ty = ly + 4.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetMeta, Provenance};

    #[test]
    fn auc_examples() {
        let r = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert!((r.auc - 0.75).abs() < 1e-15);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.3, 0.9], &[0, 0, 1, 1]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap().auc, 0.5);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::Usage(_))));
        assert!(roc_auc(&[0.1], &[1, 0]).is_err());
    }

    #[test]
    fn roc_points_anchor_and_area() {
        let r = roc_auc(&[0.1, 0.4, 0.35, 0.8, 0.4], &[0, 0, 1, 1, 1]).unwrap();
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        assert!((r.trapezoid_area() - r.auc).abs() < 1e-12);
        assert_eq!((r.n_pos, r.n_neg), (3, 2));
    }

    fn separable() -> LabeledDataset {
        LabeledDataset::new(
            Matrix::from_vec(2, 1, vec![-1.0, 1.0]).unwrap(),
            vec![0, 1],
            vec![1, 0],
            Provenance::Original,
            DatasetMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn toy_loss_decreases() {
        let ds = separable();
        let cfg = ClassifierConfig {
            hidden: 4,
            epochs: 10,
            lr: 0.1,
            batch_size: 2,
        };
        let mut losses = vec![];
        train_classifier_with(&ds, LabelChoice::Public, &cfg, &mut Prng::new(3), |_, l| losses.push(l)).unwrap();
        assert_eq!(losses.len(), 10);
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let ds = separable();
        let cfg = ClassifierConfig {
            hidden: 4,
            epochs: 0,
            ..Default::default()
        };
        let mut rng = Prng::new(9);
        let model = train_classifier(&ds, LabelChoice::Public, &cfg, &mut rng.clone()).unwrap();
        let init = ClassifierModel::init(1, 4, &mut rng.fork("classifier-init")).unwrap();
        assert_eq!(model, init);
    }

    #[test]
    fn report_csv_and_svg() {
        let roc = roc_auc(&[0.1, 0.9], &[0, 1]).unwrap();
        let report = EvaluationReport {
            cells: vec![EvalCell {
                variant: "original".into(),
                label: LabelChoice::Public,
                auc: 1.0,
                n_val: 2,
                seed: 7,
                roc: roc.clone(),
            }],
        };
        assert_eq!(report.to_csv(), "variant,label_type,auc,n_val,seed\noriginal,public,1.0,2,7\n");
        let svg = roc_svg("t", &[("a<b", &roc)]);
        assert!(svg.starts_with("<svg") && svg.contains("polyline") && svg.contains("a&lt;b"));
    }
}
