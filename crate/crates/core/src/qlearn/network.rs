use rand::Rng;

use crate::{Error, Real, Result};

/// Hidden width used throughout unless configured otherwise.
pub const DEFAULT_HIDDEN: usize = 32;

/// `input → hidden → hidden → output` perceptron, tanh on both hidden
/// layers, identity on the output.
///
/// All parameters live in one flat vector so optimizers and Polyak updates
/// are plain element-wise loops. Weight blocks are stored input-major
/// (`w[i * fan_out + k]` connects input `i` to unit `k`), which lets the
/// first layer skip the zero entries of the sparse one-hot states.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<F> {
    input: usize,
    hidden: usize,
    output: usize,
    params: Vec<F>,
}

/// Offsets of each block inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

impl Layout {
    fn new(input: usize, hidden: usize, output: usize) -> Self {
        let w1 = 0;
        let b1 = w1 + input * hidden;
        let w2 = b1 + hidden;
        let b2 = w2 + hidden * hidden;
        let w3 = b2 + hidden;
        let b3 = w3 + hidden * output;
        let end = b3 + output;
        Layout { w1, b1, w2, b2, w3, b3, end }
    }
}

/// Hidden activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Activations<F> {
    pub h1: Vec<F>,
    pub h2: Vec<F>,
    pub q: Vec<F>,
}

impl<F: Real> Activations<F> {
    pub fn for_net(net: &QNetwork<F>) -> Self {
        Activations {
            h1: vec![F::zero(); net.hidden],
            h2: vec![F::zero(); net.hidden],
            q: vec![F::zero(); net.output],
        }
    }
}

/// Scratch for a backward pass.
#[derive(Debug, Clone, Default)]
pub struct BackwardScratch<F> {
    dz1: Vec<F>,
    dz2: Vec<F>,
}

impl<F: Real> QNetwork<F> {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Result<Self> {
        if input == 0 || hidden == 0 || output == 0 {
            return Err(Error::usage("network layer sizes must be positive"));
        }
        let layout = Layout::new(input, hidden, output);
        Ok(QNetwork {
            input,
            hidden,
            output,
            params: vec![F::zero(); layout.end],
        })
    }

    /// Uniform `[-1/√fan_in, 1/√fan_in]` init for weights and biases of
    /// every layer.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(input, hidden, output)?;
        let l = net.layout();
        let blocks = [
            (l.w1, l.w2, input),
            (l.w2, l.w3, hidden),
            (l.w3, l.end, hidden),
        ];
        for (start, end, fan_in) in blocks {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[start..end] {
                *p = F::lit(rng.gen_range(-bound..=bound));
            }
        }
        Ok(net)
    }

    /// Build from explicit blocks, each given output-major
    /// (`w[k][i]` connects input `i` to unit `k`).
    pub fn from_layers(
        w1: &[Vec<F>],
        b1: &[F],
        w2: &[Vec<F>],
        b2: &[F],
        w3: &[Vec<F>],
        b3: &[F],
    ) -> Result<Self> {
        let hidden = b1.len();
        let output = b3.len();
        let input = w1.first().map_or(0, Vec::len);
        let mut net = Self::zeros(input, hidden, output)?;
        let shape_ok = w1.len() == hidden
            && w1.iter().all(|r| r.len() == input)
            && w2.len() == hidden
            && w2.iter().all(|r| r.len() == hidden)
            && b2.len() == hidden
            && w3.len() == output
            && w3.iter().all(|r| r.len() == hidden);
        if !shape_ok {
            return Err(Error::usage("inconsistent layer shapes"));
        }
        let l = net.layout();
        let fill = |params: &mut [F], w: &[Vec<F>], fan_out: usize| {
            for (k, row) in w.iter().enumerate() {
                for (i, &x) in row.iter().enumerate() {
                    params[i * fan_out + k] = x;
                }
            }
        };
        fill(&mut net.params[l.w1..l.b1], w1, hidden);
        net.params[l.b1..l.w2].copy_from_slice(b1);
        fill(&mut net.params[l.w2..l.b2], w2, hidden);
        net.params[l.b2..l.w3].copy_from_slice(b2);
        fill(&mut net.params[l.w3..l.b3], w3, output);
        net.params[l.b3..l.end].copy_from_slice(b3);
        Ok(net)
    }

    fn layout(&self) -> Layout {
        Layout::new(self.input, self.hidden, self.output)
    }

    pub fn input_len(&self) -> usize {
        self.input
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden
    }

    pub fn output_len(&self) -> usize {
        self.output
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.input, self.hidden, self.output) == (other.input, other.hidden, other.output)
    }

    /// Weight from input `i` of layer `layer` (0..3) to unit `k`.
    pub fn weight(&self, layer: usize, k: usize, i: usize) -> F {
        let l = self.layout();
        match layer {
            0 => self.params[l.w1 + i * self.hidden + k],
            1 => self.params[l.w2 + i * self.hidden + k],
            2 => self.params[l.w3 + i * self.output + k],
            _ => panic!("layer index out of range"),
        }
    }

    pub fn bias(&self, layer: usize, k: usize) -> F {
        let l = self.layout();
        match layer {
            0 => self.params[l.b1 + k],
            1 => self.params[l.b2 + k],
            2 => self.params[l.b3 + k],
            _ => panic!("layer index out of range"),
        }
    }

    pub fn forward(&self, state: &[F]) -> Result<Vec<F>> {
        if state.len() != self.input {
            return Err(Error::usage(format!(
                "state has {} entries, network expects {}",
                state.len(),
                self.input
            )));
        }
        let mut act = Activations::for_net(self);
        self.forward_into(state, &mut act);
        Ok(act.q)
    }

    /// Forward pass into preallocated activations. Panics on shape mismatch.
    pub fn forward_into(&self, state: &[F], act: &mut Activations<F>) {
        assert_eq!(state.len(), self.input);
        let l = self.layout();
        let (h, o) = (self.hidden, self.output);
        let p = &self.params;

        act.h1.copy_from_slice(&p[l.b1..l.w2]);
        for (i, &x) in state.iter().enumerate() {
            if x == F::zero() {
                continue;
            }
            let row = &p[l.w1 + i * h..l.w1 + (i + 1) * h];
            for (acc, &w) in act.h1.iter_mut().zip(row) {
                *acc = *acc + x * w;
            }
        }
        act.h1.iter_mut().for_each(|v| *v = v.tanh());

        act.h2.copy_from_slice(&p[l.b2..l.w3]);
        for (i, &x) in act.h1.iter().enumerate() {
            let row = &p[l.w2 + i * h..l.w2 + (i + 1) * h];
            for (acc, &w) in act.h2.iter_mut().zip(row) {
                *acc = *acc + x * w;
            }
        }
        act.h2.iter_mut().for_each(|v| *v = v.tanh());

        act.q.copy_from_slice(&p[l.b3..l.end]);
        for (i, &x) in act.h2.iter().enumerate() {
            let row = &p[l.w3 + i * o..l.w3 + (i + 1) * o];
            for (acc, &w) in act.q.iter_mut().zip(row) {
                *acc = *acc + x * w;
            }
        }
    }

    /// Add `dq · ∂Q(state, action)/∂θ` into `grad`, using the activations of
    /// a prior [`forward_into`](Self::forward_into) on the same state.
    pub fn accumulate_gradient(
        &self,
        state: &[F],
        act: &Activations<F>,
        action: usize,
        dq: F,
        grad: &mut [F],
        scratch: &mut BackwardScratch<F>,
    ) {
        assert_eq!(grad.len(), self.params.len());
        assert!(action < self.output);
        let l = self.layout();
        let (h, o) = (self.hidden, self.output);
        let p = &self.params;
        scratch.dz1.resize(h, F::zero());
        scratch.dz2.resize(h, F::zero());

        grad[l.b3 + action] = grad[l.b3 + action] + dq;
        for (k, &h2) in act.h2.iter().enumerate() {
            let idx = l.w3 + k * o + action;
            grad[idx] = grad[idx] + dq * h2;
            let dh2 = dq * p[idx];
            scratch.dz2[k] = dh2 * (F::one() - h2 * h2);
        }

        for (k, &dz) in scratch.dz2.iter().enumerate() {
            grad[l.b2 + k] = grad[l.b2 + k] + dz;
        }
        for (i, &h1) in act.h1.iter().enumerate() {
            let wrow = &p[l.w2 + i * h..l.w2 + (i + 1) * h];
            let grow = &mut grad[l.w2 + i * h..l.w2 + (i + 1) * h];
            let mut dh1 = F::zero();
            for ((g, &w), &dz) in grow.iter_mut().zip(wrow).zip(&scratch.dz2) {
                *g = *g + h1 * dz;
                dh1 = dh1 + w * dz;
            }
            scratch.dz1[i] = dh1 * (F::one() - h1 * h1);
        }

        for (k, &dz) in scratch.dz1.iter().enumerate() {
            grad[l.b1 + k] = grad[l.b1 + k] + dz;
        }
        for (i, &x) in state.iter().enumerate() {
            if x == F::zero() {
                continue;
            }
            let grow = &mut grad[l.w1 + i * h..l.w1 + (i + 1) * h];
            for (g, &dz) in grow.iter_mut().zip(&scratch.dz1) {
                *g = *g + x * dz;
            }
        }
    }

    /// Polyak averaging `self ← τ·online + (1−τ)·self`.
    pub fn soft_update_from(&mut self, online: &QNetwork<F>, tau: F) -> Result<()> {
        if !self.same_shape(online) {
            return Err(Error::usage("soft update between different architectures"));
        }
        let keep = F::one() - tau;
        for (t, &o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + keep * *t;
        }
        Ok(())
    }
}

/// Free-function form of [`QNetwork::soft_update_from`].
pub fn soft_update<F: Real>(target: &mut QNetwork<F>, online: &QNetwork<F>, tau: F) -> Result<()> {
    target.soft_update_from(online, tau)
}
