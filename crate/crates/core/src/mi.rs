//! Neural mutual-information estimation.
//!
//! A critic `F(α, β)` is trained to maximise the Donsker–Varadhan bound
//!
//! ```text
//! I_F = mean_joint F − log mean_product e^F
//! ```
//!
//! with the ReMINE penalty `−c · (log mean_product e^F)²` added to the
//! training objective. Product samples are formed by permuting β inside the
//! joint batch, which keeps both empirical marginals exact. All values are in
//! nats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{accumulate_grads, adam_step, Activation, AdamState, Gradients, Matrix, Mlp};
use crate::rng::Prng;

/// Samples of α (one row each) paired with scalar β values.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBatch {
    alpha: Matrix,
    beta: Vec<f64>,
}

impl PairedBatch {
    pub fn new(alpha: Matrix, beta: Vec<f64>) -> Result<Self> {
        if alpha.rows() != beta.len() {
            return Err(Error::usage(format!(
                "{} alpha rows but {} beta values",
                alpha.rows(),
                beta.len()
            )));
        }
        if beta.len() < 2 {
            return Err(Error::usage("a paired batch needs at least 2 rows"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> &Matrix {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn alpha_dim(&self) -> usize {
        self.alpha.cols()
    }

    /// Critic input `[α | β]`.
    pub fn critic_input(&self) -> Matrix {
        self.alpha
            .with_column(&self.beta)
            .expect("lengths checked at construction")
    }

    pub(crate) fn into_parts(self) -> (Matrix, Vec<f64>) {
        (self.alpha, self.beta)
    }
}

/// Critic network `F(α, β)`: `[dim α + 1] → hidden (ReLU) → 1 (identity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiEstimatorNet {
    net: Mlp,
}

impl MiEstimatorNet {
    pub fn new(alpha_dim: usize, hidden: &[usize], rng: &mut Prng) -> Result<Self> {
        let mut dims = vec![alpha_dim + 1];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Identity);
        Self::from_mlp(Mlp::init(&dims, &acts, rng)?)
    }

    pub fn from_mlp(net: Mlp) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(Error::config("critic must have a single output"));
        }
        if net.input_dim() < 2 {
            return Err(Error::config("critic input must hold α and β"));
        }
        Ok(Self { net })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.net
    }

    pub fn alpha_dim(&self) -> usize {
        self.net.input_dim() - 1
    }

    fn check(&self, batch: &PairedBatch) -> Result<()> {
        if batch.alpha_dim() != self.alpha_dim() {
            return Err(Error::config(format!(
                "critic expects α of dim {}, batch has {}",
                self.alpha_dim(),
                batch.alpha_dim()
            )));
        }
        Ok(())
    }

    /// `F` evaluated on every row of the batch.
    pub fn scores(&self, batch: &PairedBatch) -> Result<Vec<f64>> {
        self.check(batch)?;
        let out = self.net.predict(&batch.critic_input())?;
        finite_scores(out.into_values())
    }
}

fn finite_scores(values: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::training(
            "critic produced a non-finite score",
            format!("value {bad}"),
        ));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiEstimatorConfig {
    pub iterations: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Minibatch gradients averaged into each Adam step.
    pub accumulation_window: usize,
    pub reg_coefficient: f64,
    /// Trailing iterations averaged into the final estimate; `None` means the last 10%.
    pub final_average_window: Option<usize>,
    /// Moving-average window for reported traces only.
    pub smoothing_window: usize,
    pub hidden: Vec<usize>,
    /// Estimates above this many nats abort training.
    pub divergence_cap: f64,
}

impl Default for MiEstimatorConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr: 1e-4,
            batch_size: 2000,
            accumulation_window: 10,
            reg_coefficient: 0.1,
            final_average_window: None,
            smoothing_window: 50,
            hidden: vec![100, 100],
            divergence_cap: 50.0,
        }
    }
}

impl MiEstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.batch_size < 2 || self.accumulation_window == 0 {
            return Err(Error::config(
                "iterations and accumulation_window must be positive, batch_size at least 2",
            ));
        }
        if !(self.lr > 0.0) || !(self.reg_coefficient >= 0.0) || !(self.divergence_cap > 0.0) {
            return Err(Error::config("lr and divergence_cap must be positive, reg_coefficient non-negative"));
        }
        if self.final_average_window == Some(0) || self.smoothing_window == 0 {
            return Err(Error::config("averaging windows must be positive"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        Ok(())
    }

    pub fn final_window(&self) -> usize {
        self.final_average_window
            .unwrap_or_else(|| self.iterations.div_ceil(10))
            .clamp(1, self.iterations)
    }
}

/// Per-iteration DV estimates of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiTrace {
    pub raw: Vec<f64>,
    pub smoothing_window: usize,
}

impl MiTrace {
    pub fn smoothed(&self) -> Vec<f64> {
        smooth_trace(&self.raw, self.smoothing_window)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// CSV with header `iteration,raw_estimate,smoothed_estimate`; iterations count from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,raw_estimate,smoothed_estimate\n");
        for (i, (r, s)) in self.raw.iter().zip(self.smoothed()).enumerate() {
            writeln!(out, "{},{r:?},{s:?}", i + 1).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `log(mean(exp(v)))`, shifted by the maximum so it never overflows.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}

/// Product-of-marginals batch: α untouched, β uniformly permuted.
pub fn sample_product_batch(joint: &PairedBatch, rng: &mut Prng) -> Result<PairedBatch> {
    if joint.len() < 2 {
        return Err(Error::usage("product sampling needs at least 2 rows"));
    }
    let mut beta = joint.beta.clone();
    beta.shuffle(rng);
    Ok(PairedBatch {
        alpha: joint.alpha.clone(),
        beta,
    })
}

fn check_pair(net: &MiEstimatorNet, joint: &PairedBatch, product: &PairedBatch) -> Result<()> {
    if joint.len() != product.len() || joint.alpha_dim() != product.alpha_dim() {
        return Err(Error::usage("joint and product batches differ in size or dimension"));
    }
    net.check(joint)
}

/// Donsker–Varadhan estimate `mean F(joint) − logmeanexp F(product)`.
pub fn dv_objective(net: &MiEstimatorNet, joint: &PairedBatch, product: &PairedBatch) -> Result<f64> {
    check_pair(net, joint, product)?;
    let fj = net.scores(joint)?;
    let fp = net.scores(product)?;
    Ok(dv_from_scores(&fj, &fp))
}

pub(crate) fn dv_from_scores(joint_scores: &[f64], product_scores: &[f64]) -> f64 {
    mean(joint_scores) - log_mean_exp(product_scores)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Regularised objective at one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemineObjective {
    /// Negated regularised bound; what the optimiser minimises.
    pub loss: f64,
    /// Plain DV estimate (nats).
    pub dv_estimate: f64,
    /// `log mean e^F` over the product batch.
    pub product_log_mean_exp: f64,
}

impl RemineObjective {
    fn from_scores(joint_scores: &[f64], product_scores: &[f64], reg_coefficient: f64) -> Self {
        let lme = log_mean_exp(product_scores);
        let dv = mean(joint_scores) - lme;
        Self {
            loss: -(dv - reg_coefficient * lme * lme),
            dv_estimate: dv,
            product_log_mean_exp: lme,
        }
    }

    /// Value being maximised: `dv − c·lme²`.
    pub fn regularized(&self) -> f64 {
        -self.loss
    }
}

pub fn remine_training_objective(
    net: &MiEstimatorNet,
    joint: &PairedBatch,
    product: &PairedBatch,
    reg_coefficient: f64,
) -> Result<RemineObjective> {
    check_pair(net, joint, product)?;
    let fj = net.scores(joint)?;
    let fp = net.scores(product)?;
    Ok(RemineObjective::from_scores(&fj, &fp, reg_coefficient))
}

/// Derivatives of the *maximised* quantity `mean F_j − lme − c·lme²` with
/// respect to each joint score and each product score.
pub(crate) fn score_gradients(
    joint_scores: &[f64],
    product_scores: &[f64],
    reg_coefficient: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = joint_scores.len() as f64;
    let lme = log_mean_exp(product_scores);
    let max = product_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = product_scores.iter().map(|f| (f - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let coef = 1.0 + 2.0 * reg_coefficient * lme;
    let dj = vec![1.0 / n; joint_scores.len()];
    let dp = weights.iter().map(|w| -coef * w / total).collect();
    (dj, dp)
}

/// One forward/backward pass of the critic on a joint batch and its product partner.
/// Returns the objective and the gradient of `loss` with respect to the critic parameters.
pub(crate) fn remine_step_gradients(
    net: &MiEstimatorNet,
    joint: &PairedBatch,
    product: &PairedBatch,
    reg_coefficient: f64,
) -> Result<(RemineObjective, Gradients)> {
    check_pair(net, joint, product)?;
    let n = joint.len();
    let stacked = joint.critic_input().vstack(&product.critic_input())?;
    let (out, cache) = net.net.forward(&stacked)?;
    let scores = finite_scores(out.into_values())?;
    let (fj, fp) = scores.split_at(n);
    let objective = RemineObjective::from_scores(fj, fp, reg_coefficient);
    let (dj, dp) = score_gradients(fj, fp, reg_coefficient);
    // loss = −objective
    let grad_out: Vec<f64> = dj.iter().chain(&dp).map(|g| -g).collect();
    let (grads, _) = net
        .net
        .backward(&cache, &Matrix::from_vec(2 * n, 1, grad_out)?)?;
    Ok((objective, grads))
}

/// Supplies joint batches for estimator training.
pub trait BatchSource {
    fn alpha_dim(&self) -> usize;
    fn next_batch(&mut self, size: usize, rng: &mut Prng) -> Result<PairedBatch>;
}

/// A finite sample set; batches are drawn without replacement when they fit,
/// otherwise with replacement. A batch equal to the whole set uses every row.
#[derive(Debug, Clone)]
pub struct SampleSet {
    alpha: Matrix,
    beta: Vec<f64>,
}

impl SampleSet {
    pub fn new(alpha: Matrix, beta: Vec<f64>) -> Result<Self> {
        let (alpha, beta) = PairedBatch::new(alpha, beta)?.into_parts();
        Ok(Self { alpha, beta })
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn as_batch(&self) -> PairedBatch {
        PairedBatch {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
        }
    }
}

impl BatchSource for SampleSet {
    fn alpha_dim(&self) -> usize {
        self.alpha.cols()
    }

    fn next_batch(&mut self, size: usize, rng: &mut Prng) -> Result<PairedBatch> {
        let n = self.len();
        if size < 2 {
            return Err(Error::usage("batch size must be at least 2"));
        }
        if size == n {
            return Ok(self.as_batch());
        }
        let rows: Vec<usize> = if size < n {
            index::sample(rng, n, size).into_vec()
        } else {
            (0..size).map(|_| rng.random_range(0..n)).collect()
        };
        Ok(PairedBatch {
            alpha: self.alpha.select_rows(&rows),
            beta: rows.iter().map(|&r| self.beta[r]).collect(),
        })
    }
}

/// Result of a full estimator run.
#[derive(Debug, Clone)]
pub struct MiEstimate {
    pub net: MiEstimatorNet,
    pub trace: MiTrace,
    /// Mean raw estimate over the final averaging window (nats).
    pub final_estimate: f64,
}

/// Trains a freshly initialised critic on batches from `source`.
pub fn train_mi_estimator(
    source: &mut dyn BatchSource,
    config: &MiEstimatorConfig,
    rng: &mut Prng,
) -> Result<MiEstimate> {
    config.validate()?;
    let mut init_rng = rng.fork("critic-init");
    let net = MiEstimatorNet::new(source.alpha_dim(), &config.hidden, &mut init_rng)?;
    train_mi_estimator_from(net, source, config, rng)
}

/// Continues training `net`. Every iteration draws one joint batch and its
/// permuted partner; gradients are averaged over `accumulation_window`
/// iterations before each Adam step.
pub fn train_mi_estimator_from(
    mut net: MiEstimatorNet,
    source: &mut dyn BatchSource,
    config: &MiEstimatorConfig,
    rng: &mut Prng,
) -> Result<MiEstimate> {
    config.validate()?;
    if net.alpha_dim() != source.alpha_dim() {
        return Err(Error::config(format!(
            "critic expects α of dim {}, source yields {}",
            net.alpha_dim(),
            source.alpha_dim()
        )));
    }
    let mut adam = AdamState::new(&net.net, config.lr);
    let mut raw = Vec::with_capacity(config.iterations);
    let mut pending: Vec<Gradients> = Vec::with_capacity(config.accumulation_window);

    for iteration in 0..config.iterations {
        let joint = source.next_batch(config.batch_size, rng)?;
        let product = sample_product_batch(&joint, rng)?;
        let (objective, grads) = remine_step_gradients(&net, &joint, &product, config.reg_coefficient)?;
        let estimate = objective.dv_estimate;
        if !estimate.is_finite() || estimate > config.divergence_cap {
            return Err(Error::Divergence {
                iteration,
                estimate,
                trace: Box::new(MiTrace {
                    raw,
                    smoothing_window: config.smoothing_window,
                }),
            });
        }
        raw.push(estimate);
        pending.push(grads);
        if pending.len() == config.accumulation_window {
            let averaged = accumulate_grads(&pending)?;
            pending.clear();
            adam_step(&mut net.net, &averaged, &mut adam)?;
        }
    }

    let window = config.final_window();
    let final_estimate = mean(&raw[raw.len() - window..]);
    Ok(MiEstimate {
        net,
        trace: MiTrace {
            raw,
            smoothing_window: config.smoothing_window,
        },
        final_estimate,
    })
}

/// Exact MI (nats) of a joint pmf given as rows over α and columns over β.
pub fn exact_discrete_mi(pmf: &[Vec<f64>]) -> Result<f64> {
    let cols = pmf.first().map_or(0, Vec::len);
    if cols == 0 || pmf.iter().any(|r| r.len() != cols) {
        return Err(Error::usage("pmf must be a non-empty rectangular table"));
    }
    if pmf.iter().flatten().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::usage("pmf entries must be finite and non-negative"));
    }
    let total: f64 = pmf.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::usage(format!("pmf sums to {total}, not 1")));
    }
    let row_marg: Vec<f64> = pmf.iter().map(|r| r.iter().sum()).collect();
    let col_marg: Vec<f64> = (0..cols).map(|c| pmf.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (r, row) in pmf.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (row_marg[r] * col_marg[c])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// `−½ ln(1 − ρ²)`: MI of a standard bivariate Gaussian with correlation ρ.
pub fn gaussian_mi_oracle(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::usage(format!("|rho| must be < 1, got {rho}")));
    }
    Ok(-0.5 * (1.0 - rho * rho).ln())
}

/// Trailing moving average over `min(window, i + 1)` points.
pub fn smooth_trace(trace: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..trace.len())
        .map(|i| {
            let count = window.min(i + 1);
            trace[i + 1 - count..=i].iter().sum::<f64>() / count as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(alpha: Vec<Vec<f64>>, beta: Vec<f64>) -> PairedBatch {
        PairedBatch::new(Matrix::from_rows(&alpha).unwrap(), beta).unwrap()
    }

    fn constant_critic(alpha_dim: usize, c: f64) -> MiEstimatorNet {
        let mut net = Mlp::zeros(
            &[alpha_dim + 1, 4, 1],
            &[Activation::Relu, Activation::Identity],
        )
        .unwrap();
        net.layers_mut()[1].biases[0] = c;
        MiEstimatorNet::from_mlp(net).unwrap()
    }

    #[test]
    fn log_mean_exp_cases() {
        let v = [0.0, 3f64.ln()];
        assert!((log_mean_exp(&v) - 2f64.ln()).abs() < 1e-15);
        let big = [700.0, -700.0, 699.0];
        let got = log_mean_exp(&big);
        assert!(got.is_finite());
        let want = 700.0 + ((1.0 + (-1400f64).exp() + (-1f64).exp()) / 3.0).ln();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn batch_invariants() {
        assert!(PairedBatch::new(Matrix::zeros(3, 1), vec![0.0; 2]).is_err());
        assert!(PairedBatch::new(Matrix::zeros(1, 1), vec![0.0]).is_err());
    }

    #[test]
    fn product_batch_of_constant_beta_is_identity() {
        let b = batch(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1.0; 3]);
        let p = sample_product_batch(&b, &mut Prng::new(1)).unwrap();
        assert_eq!(p, b);
    }

    #[test]
    fn product_batch_swap_frequency() {
        let b = batch(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]);
        let mut rng = Prng::new(77);
        let swapped = (0..10_000)
            .filter(|_| sample_product_batch(&b, &mut rng).unwrap().beta()[0] == 1.0)
            .count();
        let frac = swapped as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn constant_critic_gives_zero() {
        let net = constant_critic(2, 1.7);
        let j = batch(vec![vec![0.1, 0.2], vec![0.3, -1.0], vec![2.0, 0.0]], vec![0.0, 1.0, 1.0]);
        let p = sample_product_batch(&j, &mut Prng::new(2)).unwrap();
        assert!(dv_objective(&net, &j, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn remine_substitution() {
        let j = batch(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]);
        let p = sample_product_batch(&j, &mut Prng::new(3)).unwrap();
        let zero = remine_training_objective(&constant_critic(1, 0.0), &j, &p, 0.1).unwrap();
        assert_eq!(zero.dv_estimate, 0.0);
        assert_eq!(zero.loss, 0.0);
        let two = remine_training_objective(&constant_critic(1, 2.0), &j, &p, 0.1).unwrap();
        assert!(two.dv_estimate.abs() < 1e-12);
        assert!((two.regularized() + 0.4).abs() < 1e-12);
        assert!((two.loss - 0.4).abs() < 1e-12);
    }

    #[test]
    fn remine_shift_identity() {
        // objective(F + c) = objective(F) + c - [pen(lme + c) - pen(lme)] with the
        // constant only added to the joint side via the shifted product lme.
        let fj = [0.3, -0.2, 1.1, 0.4];
        let fp = [0.5, -1.0, 0.2, 2.0];
        let reg = 0.1;
        let c = 0.75;
        let pen = |l: f64| reg * l * l;
        let lme: f64 = (fp.iter().map(|f: &f64| f.exp()).sum::<f64>() / 4.0).ln();
        let base = fj.iter().sum::<f64>() / 4.0 - lme - pen(lme);
        let fj_shift: Vec<f64> = fj.iter().map(|f| f + c).collect();
        let fp_shift: Vec<f64> = fp.iter().map(|f| f + c).collect();
        let shifted = RemineObjective::from_scores(&fj_shift, &fp_shift, reg).regularized();
        // joint mean and lme both move by c, so only the penalty changes
        let oracle = base + c - c - (pen(lme + c) - pen(lme));
        assert!((shifted - oracle).abs() < 1e-12);
        let unshifted = RemineObjective::from_scores(&fj, &fp, reg).regularized();
        assert!((unshifted - base).abs() < 1e-12);
    }

    #[test]
    fn score_gradients_match_finite_differences() {
        let fj = [0.3, -0.2, 1.1];
        let fp = [0.5, -1.0, 2.0];
        let reg = 0.1;
        let (dj, dp) = score_gradients(&fj, &fp, reg);
        let h = 1e-6;
        let f = |a: &[f64], b: &[f64]| RemineObjective::from_scores(a, b, reg).regularized();
        for i in 0..3 {
            let mut up = fj;
            let mut dn = fj;
            up[i] += h;
            dn[i] -= h;
            assert!(((f(&up, &fp) - f(&dn, &fp)) / (2.0 * h) - dj[i]).abs() < 1e-8);
            let mut up = fp;
            let mut dn = fp;
            up[i] += h;
            dn[i] -= h;
            assert!(((f(&fj, &up) - f(&fj, &dn)) / (2.0 * h) - dp[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_mi_cases() {
        let product = vec![vec![0.12, 0.28], vec![0.18, 0.42]];
        assert!(exact_discrete_mi(&product).unwrap().abs() < 1e-15);
        let ident: Vec<Vec<f64>> = (0..4)
            .map(|r| (0..4).map(|c| if r == c { 0.25 } else { 0.0 }).collect())
            .collect();
        assert!((exact_discrete_mi(&ident).unwrap() - 4f64.ln()).abs() < 1e-15);
        // 0.8 ln 1.6 + 0.2 ln 0.4
        let v = exact_discrete_mi(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert!((v - 0.192_745_2).abs() < 1e-6, "{v}");
        assert!(exact_discrete_mi(&[vec![0.5, 0.6]]).is_err());
        assert!(exact_discrete_mi(&[vec![1.2, -0.2]]).is_err());
    }

    #[test]
    fn gaussian_oracle_values() {
        assert_eq!(gaussian_mi_oracle(0.0).unwrap(), 0.0);
        assert!((gaussian_mi_oracle(0.5).unwrap() - 0.143_841_036).abs() < 1e-8);
        assert!((gaussian_mi_oracle(0.9).unwrap() - 0.830_366_1).abs() < 1e-6);
        assert!(gaussian_mi_oracle(1.0).is_err());
        assert!(gaussian_mi_oracle(-1.5).is_err());
    }

    #[test]
    fn smoothing() {
        let s = [0.0, 2.0, 4.0];
        assert_eq!(smooth_trace(&s, 2), vec![0.0, 1.0, 3.0]);
        assert_eq!(smooth_trace(&s, 1), s.to_vec());
        assert_eq!(smooth_trace(&[5.0; 10], 4), vec![5.0; 10]);
        let long: Vec<f64> = (0..500).map(|i| (i % 7) as f64).collect();
        let a = smooth_trace(&long, 100);
        for (i, v) in a.iter().enumerate() {
            let lo = (i + 1).saturating_sub(100);
            let want = long[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64;
            assert!((v - want).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_iteration() {
        let t = MiTrace {
            raw: vec![0.0, 2.0, 4.0],
            smoothing_window: 2,
        };
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,raw_estimate,smoothed_estimate");
        assert_eq!(lines[3], "3,4.0,3.0");
    }

    #[test]
    fn sample_set_batches() {
        let alpha = Matrix::from_fn(10, 1, |r, _| r as f64);
        let beta: Vec<f64> = (0..10).map(|r| r as f64).collect();
        let mut set = SampleSet::new(alpha, beta).unwrap();
        let mut rng = Prng::new(4);
        let b = set.next_batch(6, &mut rng).unwrap();
        let mut seen: Vec<f64> = b.beta().to_vec();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 6);
        for r in 0..6 {
            assert_eq!(b.alpha().get(r, 0), b.beta()[r]);
        }
        assert_eq!(set.next_batch(25, &mut rng).unwrap().len(), 25);
        assert_eq!(set.next_batch(10, &mut rng).unwrap(), set.as_batch());
    }

    #[test]
    fn divergence_guard_aborts_with_trace() {
        let alpha = Matrix::from_fn(64, 1, |r, _| (r % 2) as f64);
        let beta: Vec<f64> = (0..64).map(|r| (r % 2) as f64).collect();
        let mut set = SampleSet::new(alpha, beta).unwrap();
        let config = MiEstimatorConfig {
            iterations: 50,
            batch_size: 32,
            accumulation_window: 1,
            lr: 1e-2,
            hidden: vec![8],
            divergence_cap: 1e-3,
            ..Default::default()
        };
        match train_mi_estimator(&mut set, &config, &mut Prng::new(9)) {
            Err(Error::Divergence { trace, iteration, .. }) => assert_eq!(trace.len(), iteration),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
