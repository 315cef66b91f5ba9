use crate::{Error, Real, Result};

/// Adam optimizer state for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub base_lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
    m: Vec<F>,
    v: Vec<F>,
    t: u64,
}

impl<F: Real> AdamState<F> {
    /// Standard constants: β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(param_count: usize, base_lr: F) -> Self {
        Self::with_constants(param_count, base_lr, F::lit(0.9), F::lit(0.999), F::lit(1e-8))
    }

    pub fn with_constants(param_count: usize, base_lr: F, beta1: F, beta2: F, eps: F) -> Self {
        AdamState {
            base_lr,
            beta1,
            beta2,
            eps,
            m: vec![F::zero(); param_count],
            v: vec![F::zero(); param_count],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[F] {
        &self.m
    }

    pub fn second_moments(&self) -> &[F] {
        &self.v
    }

    /// One bias-corrected Adam update with learning rate
    /// `base_lr · lr_multiplier`.
    pub fn step(&mut self, params: &mut [F], grads: &[F], lr_multiplier: F) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::usage("adam: parameter, gradient, and moment shapes differ"));
        }
        self.t += 1;
        let one = F::one();
        let t = self.t as i32;
        let bc1 = one - self.beta1.powi(t);
        let bc2 = one - self.beta2.powi(t);
        let lr = self.base_lr * lr_multiplier;
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step<F: Real>(state: &mut AdamState<F>, params: &mut [F], grads: &[F], lr_multiplier: F) -> Result<()> {
    state.step(params, grads, lr_multiplier)
}
