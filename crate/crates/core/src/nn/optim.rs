use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

/// Bias-corrected Adam (Kingma & Ba) with `ε` added outside the square root.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self::with_betas(net, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(net: &Mlp, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

fn check_grads(net: &Mlp, grads: &Gradients) -> Result<()> {
    if !grads.matches(net) {
        return Err(Error::config("gradient shapes do not match network parameters"));
    }
    if !grads.is_finite() {
        let bad = grads.iter().filter(|g| !g.is_finite()).count();
        return Err(Error::training(
            "non-finite gradient",
            format!(
                "{bad} of {} entries non-finite; network dims {:?}",
                net.num_params(),
                net.layer_dims()
            ),
        ));
    }
    Ok(())
}

pub fn adam_step(net: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    check_grads(net, grads)?;
    if !state.m.matches(net) {
        return Err(Error::config("optimizer state shape does not match network"));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let (lr, eps) = (state.lr, state.eps);
    for (((p, g), m), v) in net
        .params_mut()
        .zip(grads.iter())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// `θ ← θ − lr·g`
pub fn sgd_step(net: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
    check_grads(net, grads)?;
    for (p, g) in net.params_mut().zip(grads.iter()) {
        *p -= lr * g;
    }
    Ok(())
}

/// Element-wise mean of a non-empty list of same-shaped gradients.
pub fn accumulate_grads(grads: &[Gradients]) -> Result<Gradients> {
    let (first, rest) = grads
        .split_first()
        .ok_or_else(|| Error::usage("cannot average an empty gradient list"))?;
    let mut sum = first.clone();
    for g in rest {
        if !g.same_shape(first) {
            return Err(Error::usage("gradient shapes differ within accumulation window"));
        }
        sum.add_scaled(g, 1.0);
    }
    sum.scale(1.0 / grads.len() as f64);
    Ok(sum)
}
