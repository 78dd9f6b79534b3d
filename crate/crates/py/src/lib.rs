//! Python bindings: datasets, encoders, training, MI estimation and AUC.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::infoshape::data::{self, LabelChoice, LabeledDataset, SyntheticSpec};
use ::infoshape::eval;
use ::infoshape::experiment::{self, ExperimentConfig};
use ::infoshape::mi::{self, MiEstimatorConfig, SampleSet};
use ::infoshape::nn::Matrix;
use ::infoshape::trainer::{self, ArchitecturePreset, EncoderModel, TradeoffConfig};
use ::infoshape::{Error, Prng};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Config(_) | Error::Usage(_) | Error::Parse { .. } | Error::Serde(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Training { .. } | Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Features with a public and a private binary label per row.
#[pyclass(name = "Dataset", module = "infoshape", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: LabeledDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, public: Vec<u8>, private: Vec<u8>) -> PyResult<Self> {
        let inner = LabeledDataset::new(
            matrix(features)?,
            public,
            private,
            data::Provenance::DesignerSet,
            data::DatasetMeta::default(),
        )
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        data::load_dataset(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        data::save_dataset(&self.inner, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn provenance(&self) -> String {
        self.inner.provenance.to_string()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.features())
    }

    fn public_labels(&self) -> Vec<u8> {
        self.inner.public_labels().to_vec()
    }

    fn private_labels(&self) -> Vec<u8> {
        self.inner.private_labels().to_vec()
    }

    /// Stratified (train, validation) split.
    #[pyo3(signature = (val_fraction = 0.2, seed = 0))]
    fn split(&self, val_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (a, b) = data::split(&self.inner, val_fraction, &mut Prng::new(seed)).map_err(to_py)?;
        Ok((Self { inner: a }, Self { inner: b }))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, dim={}, provenance={})",
            self.inner.len(),
            self.inner.dim(),
            self.inner.provenance
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n_samples = 10_000, seed = 0))]
fn generate_synthetic(n_samples: usize, seed: u64) -> PyResult<PyDataset> {
    data::generate_synthetic(&SyntheticSpec {
        n_samples,
        seed,
        ..Default::default()
    })
    .map(|inner| PyDataset { inner })
    .map_err(to_py)
}

/// A Tanh encoder network.
#[pyclass(name = "Encoder", module = "infoshape", skip_from_py_object)]
#[derive(Clone)]
struct PyEncoder {
    inner: EncoderModel,
}

fn preset(name: &str) -> PyResult<ArchitecturePreset> {
    name.parse().map_err(to_py)
}

#[pymethods]
impl PyEncoder {
    /// Untrained encoder of a preset ("synthetic" or "mnist").
    #[staticmethod]
    #[pyo3(signature = (name = "synthetic", seed = 0))]
    fn from_preset(name: &str, seed: u64) -> PyResult<Self> {
        EncoderModel::from_preset(preset(name)?, &mut Prng::new(seed))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        experiment::load_encoder(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.checkpoint("").save(path).map_err(to_py)
    }

    #[getter]
    fn code_dim(&self) -> usize {
        self.inner.code_dim()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn encode(&self, dataset: &PyDataset) -> PyResult<PyDataset> {
        trainer::encode_dataset(&self.inner, &dataset.inner)
            .map(|inner| PyDataset { inner })
            .map_err(to_py)
    }
}

/// Trains an encoder; returns it with the per-epoch record as a list of dicts.
#[pyfunction]
#[pyo3(signature = (dataset, preset_name = "synthetic", lambda_ = 1.0, epochs = 50, steps_per_epoch = 1,
                    estimator_iterations = None, reduced_schedule = false, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn train_infoshape(
    dataset: &PyDataset,
    preset_name: &str,
    lambda_: f64,
    epochs: usize,
    steps_per_epoch: usize,
    estimator_iterations: Option<usize>,
    reduced_schedule: bool,
    seed: u64,
) -> PyResult<(PyEncoder, Vec<std::collections::BTreeMap<String, f64>>)> {
    let mut cfg = TradeoffConfig {
        lambda: lambda_,
        epochs,
        steps_per_epoch,
        ..Default::default()
    };
    if reduced_schedule {
        experiment::apply_reduced_schedule(&mut cfg.estimator);
    }
    if let Some(i) = estimator_iterations {
        cfg.estimator.iterations = i;
    }
    let (enc, record) = trainer::train_infoshape(&dataset.inner, preset(preset_name)?, &cfg, &mut Prng::new(seed))
        .map_err(|a| to_py(a.error))?;
    let rows = record
        .epochs
        .iter()
        .map(|e| {
            [
                ("epoch", e.epoch as f64),
                ("I_L", e.i_public),
                ("I_S", e.i_private),
                ("H_L", e.h_public),
                ("H_S", e.h_private),
                ("M_utility", e.m_utility),
                ("M_privacy", e.m_privacy),
                ("Q", e.q),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v))
            .collect()
        })
        .collect();
    Ok((PyEncoder { inner: enc }, rows))
}

/// Trains a ReMINE estimator on paired samples; returns (estimate, raw trace).
#[pyfunction]
#[pyo3(signature = (alpha, beta, iterations = 500, lr = 3e-3, batch_size = 2000, seed = 0))]
fn estimate_mi(
    alpha: Vec<Vec<f64>>,
    beta: Vec<f64>,
    iterations: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> PyResult<(f64, Vec<f64>)> {
    let cfg = MiEstimatorConfig {
        iterations,
        lr,
        batch_size,
        ..Default::default()
    };
    let mut source = SampleSet::new(matrix(alpha)?, beta).map_err(to_py)?;
    let est = mi::train_mi_estimator(&mut source, &cfg, &mut Prng::new(seed)).map_err(to_py)?;
    Ok((est.final_estimate, est.trace.raw))
}

#[pyfunction]
fn exact_discrete_mi(pmf: Vec<Vec<f64>>) -> PyResult<f64> {
    mi::exact_discrete_mi(&pmf).map_err(to_py)
}

#[pyfunction]
fn gaussian_mi_oracle(rho: f64) -> PyResult<f64> {
    mi::gaussian_mi_oracle(rho).map_err(to_py)
}

#[pyfunction]
fn label_entropy(labels: Vec<u8>) -> PyResult<f64> {
    trainer::label_entropy(&labels).map_err(to_py)
}

/// Returns (auc, [(fpr, tpr), ...]).
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let r = eval::roc_auc(&scores, &labels).map_err(to_py)?;
    Ok((r.auc, r.points))
}

/// Trains a classifier on `train` and returns its validation AUC.
#[pyfunction]
#[pyo3(signature = (train, val, label = "public", seed = 0))]
fn classifier_auc(train: &PyDataset, val: &PyDataset, label: &str, seed: u64) -> PyResult<f64> {
    let label: LabelChoice = label.parse().map_err(to_py)?;
    let cfg = eval::ClassifierConfig::default();
    let model = eval::train_classifier(&train.inner, label, &cfg, &mut Prng::new(seed)).map_err(to_py)?;
    let scores = model.predict_proba(val.inner.features()).map_err(to_py)?;
    eval::roc_auc(&scores, val.inner.labels(label)).map(|r| r.auc).map_err(to_py)
}

/// Runs a full experiment from TOML text; returns the report CSV.
#[pyfunction]
fn run_experiment(config_toml: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    experiment::run_experiment(&cfg).map(|o| o.report.to_csv()).map_err(to_py)
}

#[pymodule(name = "infoshape")]
fn infoshape_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEncoder>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(train_infoshape, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mi, m)?)?;
    m.add_function(wrap_pyfunction!(exact_discrete_mi, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_mi_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(label_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(classifier_auc, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
