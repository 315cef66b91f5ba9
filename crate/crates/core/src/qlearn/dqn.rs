use rand::Rng;

use super::adam::AdamState;
use super::network::{Activations, BackwardScratch, QNetwork};
use super::replay::PrioritizedReplayBuffer;
use crate::rng::StreamRng;
use crate::{Error, Real, Result};

/// Borrowed view of one `(s, a, u, s')` transition.
#[derive(Debug, Clone, Copy)]
pub struct TransitionRef<'a, F> {
    pub state: &'a [F],
    pub action: usize,
    pub utility: F,
    pub next_state: &'a [F],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<F> {
    /// `mean_i w_i·(y_i − Q(s_i, a_i))²`
    pub loss: F,
    /// `y_i − Q(s_i, a_i)` per sample.
    pub td_errors: Vec<F>,
    /// TD targets `y_i = u_i + γ·max_a' Q̄(s'_i, a')`.
    pub targets: Vec<F>,
}

/// Importance-weighted squared TD loss and its gradient with respect to the
/// online network. The target network only enters through the constant
/// `y_i`, so no gradient flows into it. `grad` is overwritten.
pub fn q_loss_and_gradient<F: Real>(
    online: &QNetwork<F>,
    target: &QNetwork<F>,
    batch: &[TransitionRef<'_, F>],
    gamma: F,
    is_weights: &[F],
    grad: &mut [F],
) -> Result<LossOutput<F>> {
    if batch.is_empty() {
        return Err(Error::usage("empty minibatch"));
    }
    if batch.len() != is_weights.len() {
        return Err(Error::usage("importance weights not aligned with batch"));
    }
    if grad.len() != online.param_count() || !online.same_shape(target) {
        return Err(Error::usage("gradient buffer or target network shape mismatch"));
    }
    grad.fill(F::zero());
    let n = F::lit(batch.len() as f64);
    let two = F::lit(2.0);
    let mut act = Activations::for_net(online);
    let mut target_act = Activations::for_net(target);
    let mut scratch = BackwardScratch::default();
    let mut loss = F::zero();
    let mut td_errors = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());

    for (tr, &w) in batch.iter().zip(is_weights) {
        if tr.state.len() != online.input_len() || tr.next_state.len() != online.input_len() {
            return Err(Error::usage("transition state length does not match network input"));
        }
        target.forward_into(tr.next_state, &mut target_act);
        let next_max = target_act.q.iter().copied().fold(F::neg_infinity(), F::max);
        let y = tr.utility + gamma * next_max;

        online.forward_into(tr.state, &mut act);
        let delta = y - act.q[tr.action];
        loss = loss + w * delta * delta;
        // ∂/∂Q of w·(y − Q)² / n
        let dq = -two * w * delta / n;
        online.accumulate_gradient(tr.state, &act, tr.action, dq, grad, &mut scratch);
        td_errors.push(delta);
        targets.push(y);
    }
    Ok(LossOutput {
        loss: loss / n,
        td_errors,
        targets,
    })
}

/// Hyperparameters shared by every learner in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig<F> {
    pub hidden: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub update_every: usize,
    pub gamma: F,
    pub base_lr: F,
    pub per_alpha: F,
}

/// Per-timestep schedule values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepHyper<F> {
    pub lr_multiplier: F,
    pub beta: F,
    pub tau: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LearnerCounters {
    pub transitions: u64,
    pub learn_steps: u64,
    pub soft_updates: u64,
}

/// One independent DQN learner: online and target networks, Adam state,
/// and its own prioritized replay buffer and sampling stream.
#[derive(Debug, Clone)]
pub struct DqnLearner<F> {
    online: QNetwork<F>,
    target: QNetwork<F>,
    adam: AdamState<F>,
    buffer: PrioritizedReplayBuffer<F>,
    config: LearnerConfig<F>,
    replay_rng: StreamRng,
    grad: Vec<F>,
    batch_states: Vec<F>,
    act: Activations<F>,
    since_update: usize,
    counters: LearnerCounters,
    last_loss: Option<F>,
}

impl<F: Real> DqnLearner<F> {
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        config: LearnerConfig<F>,
        init_rng: &mut R,
        replay_rng: StreamRng,
    ) -> Result<Self> {
        if config.batch_size == 0 || config.update_every == 0 {
            return Err(Error::config("batch_size", "batch size and update cadence must be positive"));
        }
        let online = QNetwork::new(input, config.hidden, output, init_rng)?;
        let target = online.clone();
        let adam = AdamState::new(online.param_count(), config.base_lr);
        let buffer = PrioritizedReplayBuffer::new(config.buffer_capacity, input, config.per_alpha)?;
        let grad = vec![F::zero(); online.param_count()];
        let act = Activations::for_net(&online);
        Ok(DqnLearner {
            online,
            target,
            adam,
            buffer,
            config,
            replay_rng,
            grad,
            batch_states: Vec::new(),
            act,
            since_update: 0,
            counters: LearnerCounters::default(),
            last_loss: None,
        })
    }

    pub fn online(&self) -> &QNetwork<F> {
        &self.online
    }

    /// Direct access to the online network. The target network is not
    /// touched; call sites that overwrite weights should expect the two to
    /// diverge until soft updates catch up.
    pub fn online_mut(&mut self) -> &mut QNetwork<F> {
        &mut self.online
    }

    pub fn target(&self) -> &QNetwork<F> {
        &self.target
    }

    pub fn buffer(&self) -> &PrioritizedReplayBuffer<F> {
        &self.buffer
    }

    pub fn adam(&self) -> &AdamState<F> {
        &self.adam
    }

    pub fn counters(&self) -> LearnerCounters {
        self.counters
    }

    pub fn last_loss(&self) -> Option<F> {
        self.last_loss
    }

    pub fn n_actions(&self) -> usize {
        self.online.output_len()
    }

    /// Online Q-values for `state`.
    pub fn q_values(&mut self, state: &[F]) -> &[F] {
        self.online.forward_into(state, &mut self.act);
        &self.act.q
    }

    /// Store a transition; every `update_every` stores run one gradient
    /// step on a prioritized minibatch. The target network is Polyak
    /// updated on every call.
    pub fn record(&mut self, transition: TransitionRef<'_, F>, hyper: StepHyper<F>) -> Result<()> {
        if transition.action >= self.n_actions() {
            return Err(Error::usage("action index outside the network's action space"));
        }
        self.buffer
            .add(transition.state, transition.action, transition.utility, transition.next_state);
        self.counters.transitions += 1;
        self.since_update += 1;
        if self.since_update >= self.config.update_every {
            self.since_update = 0;
            self.learn_step(hyper)?;
        }
        self.target.soft_update_from(&self.online, hyper.tau)?;
        self.counters.soft_updates += 1;
        Ok(())
    }

    /// One prioritized minibatch gradient step.
    pub fn learn_step(&mut self, hyper: StepHyper<F>) -> Result<F> {
        let sample = self
            .buffer
            .sample(self.config.batch_size, hyper.beta, &mut self.replay_rng)?;
        let width = self.buffer.state_len();
        self.batch_states.resize(2 * width * sample.indices.len(), F::zero());
        for (k, &i) in sample.indices.iter().enumerate() {
            let (state, next) = self.batch_states[2 * width * k..2 * width * (k + 1)].split_at_mut(width);
            self.buffer.read_states(i, state, next);
        }
        let batch: Vec<TransitionRef<'_, F>> = sample
            .indices
            .iter()
            .zip(self.batch_states.chunks(2 * width.max(1)))
            .map(|(&i, pair)| TransitionRef {
                state: &pair[..width],
                action: self.buffer.action(i),
                utility: self.buffer.utility(i),
                next_state: &pair[width..],
            })
            .collect();
        let out = q_loss_and_gradient(
            &self.online,
            &self.target,
            &batch,
            self.config.gamma,
            &sample.weights,
            &mut self.grad,
        )?;
        self.adam
            .step(self.online.params_mut(), &self.grad, hyper.lr_multiplier)?;
        self.buffer.update_priorities(&sample.indices, &out.td_errors);
        self.counters.learn_steps += 1;
        self.last_loss = Some(out.loss);
        Ok(out.loss)
    }
}
