use rand::Rng;

use crate::{Error, Real, Result};

/// Added to |TD error| so every transition stays sampleable.
pub const PRIORITY_FLOOR: f64 = 1e-6;

/// Binary tree over leaf values supporting point updates, prefix search,
/// and a running minimum. Unused leaves hold zero in the sum tree and +∞ in
/// the min tree.
#[derive(Debug, Clone)]
struct SegmentTrees<F> {
    leaves: usize,
    sum: Vec<F>,
    min: Vec<F>,
}

impl<F: Real> SegmentTrees<F> {
    fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        SegmentTrees {
            leaves,
            sum: vec![F::zero(); 2 * leaves],
            min: vec![F::infinity(); 2 * leaves],
        }
    }

    fn set(&mut self, index: usize, value: F) {
        let mut node = index + self.leaves;
        self.sum[node] = value;
        self.min[node] = value;
        while node > 1 {
            node /= 2;
            self.sum[node] = self.sum[2 * node] + self.sum[2 * node + 1];
            self.min[node] = self.min[2 * node].min(self.min[2 * node + 1]);
        }
    }

    fn get(&self, index: usize) -> F {
        self.sum[index + self.leaves]
    }

    fn total(&self) -> F {
        self.sum[1]
    }

    fn min(&self) -> F {
        self.min[1]
    }

    /// Leaf whose cumulative interval contains `mass`.
    fn find(&self, mut mass: F) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = 2 * node;
            if mass < self.sum[left] {
                node = left;
            } else {
                mass = mass - self.sum[left];
                node = left + 1;
            }
        }
        node - self.leaves
    }
}

/// Flat state storage. Encoded observations are one-hot, so states start
/// bit-packed (64 entries per word); the first non-binary value switches the
/// store to dense scalars.
#[derive(Debug, Clone)]
enum StateStore<F> {
    Bits { len: usize, words: usize, data: Vec<u64> },
    Dense { len: usize, data: Vec<F> },
}

impl<F: Real> StateStore<F> {
    fn new(capacity: usize, len: usize) -> Self {
        let words = len.div_ceil(64);
        StateStore::Bits {
            len,
            words,
            data: vec![0; capacity * words],
        }
    }

    fn write(&mut self, slot: usize, state: &[F]) {
        let binary = state.iter().all(|&x| x == F::zero() || x == F::one());
        if !binary {
            self.make_dense();
        }
        match self {
            StateStore::Bits { words, data, .. } => {
                let row = &mut data[slot * *words..(slot + 1) * *words];
                row.fill(0);
                for (k, &x) in state.iter().enumerate() {
                    if x == F::one() {
                        row[k / 64] |= 1 << (k % 64);
                    }
                }
            }
            StateStore::Dense { len, data } => data[slot * *len..(slot + 1) * *len].copy_from_slice(state),
        }
    }

    fn make_dense(&mut self) {
        if let StateStore::Bits { len, words, data } = self {
            let (len, capacity) = (*len, data.len().checked_div(*words).unwrap_or(0));
            let mut dense = vec![F::zero(); capacity * len];
            for s in 0..capacity {
                self.read_into(s, &mut dense[s * len..(s + 1) * len]);
            }
            *self = StateStore::Dense { len, data: dense };
        }
    }

    fn read_into(&self, slot: usize, out: &mut [F]) {
        match self {
            StateStore::Bits { len, words, data } => {
                let row = &data[slot * words..(slot + 1) * words];
                for (k, o) in out[..*len].iter_mut().enumerate() {
                    *o = if row[k / 64] >> (k % 64) & 1 == 1 { F::one() } else { F::zero() };
                }
            }
            StateStore::Dense { len, data } => out.copy_from_slice(&data[slot * len..(slot + 1) * len]),
        }
    }
}

/// A sampled minibatch: buffer indices and normalized importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<F> {
    pub indices: Vec<usize>,
    pub weights: Vec<F>,
}

/// Capacity-bounded FIFO transition store with proportional prioritization.
///
/// States are stored flat (`state_len` entries per slot). Sampling is with
/// replacement, `P(i) = p_i^α / Σ_k p_k^α`, and importance weights are
/// `(N·P(i))^{−β}` divided by the largest weight any stored transition could
/// receive, so every weight lies in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct PrioritizedReplayBuffer<F> {
    capacity: usize,
    state_len: usize,
    alpha: F,
    len: usize,
    next: usize,
    max_priority: F,
    states: StateStore<F>,
    next_states: StateStore<F>,
    actions: Vec<usize>,
    utilities: Vec<F>,
    trees: SegmentTrees<F>,
}

impl<F: Real> PrioritizedReplayBuffer<F> {
    pub fn new(capacity: usize, state_len: usize, alpha: F) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("buffer_capacity", "must be positive"));
        }
        if !(alpha >= F::zero()) {
            return Err(Error::config("per_alpha", "must be non-negative"));
        }
        Ok(PrioritizedReplayBuffer {
            capacity,
            state_len,
            alpha,
            len: 0,
            next: 0,
            max_priority: F::one(),
            states: StateStore::new(capacity, state_len),
            next_states: StateStore::new(capacity, state_len),
            actions: vec![0; capacity],
            utilities: vec![F::zero(); capacity],
            trees: SegmentTrees::new(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    /// Store a transition at the current maximum priority, evicting the
    /// oldest when full. Returns the slot written.
    pub fn add(&mut self, state: &[F], action: usize, utility: F, next_state: &[F]) -> usize {
        assert_eq!(state.len(), self.state_len);
        assert_eq!(next_state.len(), self.state_len);
        let slot = self.next;
        self.states.write(slot, state);
        self.next_states.write(slot, next_state);
        self.actions[slot] = action;
        self.utilities[slot] = utility;
        self.trees.set(slot, self.max_priority.powf(self.alpha));
        self.next = (self.next + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        slot
    }

    pub fn state(&self, index: usize) -> Vec<F> {
        let mut out = vec![F::zero(); self.state_len];
        self.states.read_into(index, &mut out);
        out
    }

    pub fn next_state(&self, index: usize) -> Vec<F> {
        let mut out = vec![F::zero(); self.state_len];
        self.next_states.read_into(index, &mut out);
        out
    }

    /// Copy the stored state and next state of `index` into the two slices.
    pub fn read_states(&self, index: usize, state: &mut [F], next_state: &mut [F]) {
        self.states.read_into(index, state);
        self.next_states.read_into(index, next_state);
    }

    /// Whether states are still held in the packed 0/1 form.
    pub fn is_packed(&self) -> bool {
        matches!(self.states, StateStore::Bits { .. }) && matches!(self.next_states, StateStore::Bits { .. })
    }

    pub fn action(&self, index: usize) -> usize {
        self.actions[index]
    }

    pub fn utility(&self, index: usize) -> F {
        self.utilities[index]
    }

    /// `p_i^α` as stored in the sum tree.
    pub fn scaled_priority(&self, index: usize) -> F {
        self.trees.get(index)
    }

    /// Incrementally maintained `Σ p^α`.
    pub fn total_priority(&self) -> F {
        self.trees.total()
    }

    /// `Σ p^α` recomputed leaf by leaf.
    pub fn recompute_total(&self) -> F {
        (0..self.len).map(|i| self.trees.get(i)).fold(F::zero(), |a, b| a + b)
    }

    pub fn probability(&self, index: usize) -> F {
        self.trees.get(index) / self.trees.total()
    }

    /// Draw `batch` indices with replacement and their importance weights.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, beta: F, rng: &mut R) -> Result<Sample<F>> {
        if self.len == 0 {
            return Err(Error::usage("sampling from an empty replay buffer"));
        }
        let total = self.trees.total();
        let n = F::lit(self.len as f64);
        let max_weight = (n * self.trees.min() / total).powf(-beta);
        let mut indices = Vec::with_capacity(batch);
        let mut weights = Vec::with_capacity(batch);
        for _ in 0..batch {
            let mass = F::lit(rng.gen::<f64>()) * total;
            let mut index = self.trees.find(mass);
            // float round-off can walk past the last populated leaf
            if index >= self.len {
                index = self.len - 1;
            }
            let p = self.trees.get(index) / total;
            indices.push(index);
            weights.push((n * p).powf(-beta) / max_weight);
        }
        Ok(Sample { indices, weights })
    }

    /// Set `p_i = |δ_i| + 1e-6` for each sampled index.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[F]) {
        assert_eq!(indices.len(), td_errors.len());
        for (&index, &td) in indices.iter().zip(td_errors) {
            let p = td.abs() + F::lit(PRIORITY_FLOOR);
            if p > self.max_priority {
                self.max_priority = p;
            }
            self.trees.set(index, p.powf(self.alpha));
        }
    }
}
