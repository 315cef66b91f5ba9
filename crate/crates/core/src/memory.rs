//! Per-agent experience: the payoff memory behind the weighted moving
//! average, the observation window, and the two Q-network input encodings.

use std::collections::VecDeque;

use crate::lattice::{DilemmaAction, SelectionAction, DEGREE};
use crate::{Error, Real, Result};

/// Weight below which a past payoff is dropped from the moving average.
pub const MEMORY_CUTOFF: f64 = 0.01;

/// Scalars per frame in the dilemma-network input.
pub const DILEMMA_FRAME_LEN: usize = 2 * (DEGREE + 1);
/// Scalars per frame in the selection-network input.
pub const SELECTION_FRAME_LEN: usize = 2 * 4 * DEGREE;

/// Payoff memory length for decay weight `alpha`: zero when `alpha == 0`,
/// otherwise the smallest `n >= 1` with `alpha^n < 0.01`.
pub fn memory_length(alpha: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config("alpha", "memory weight must lie in [0, 1)"));
    }
    if alpha == 0.0 {
        return Ok(0);
    }
    let mut n = 1;
    let mut w = alpha;
    while w >= MEMORY_CUTOFF {
        w *= alpha;
        n += 1;
    }
    Ok(n)
}

/// Ring buffer of the last `M` raw round payoffs, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMemory<F> {
    alpha: F,
    capacity: usize,
    history: VecDeque<F>,
}

impl<F: Real> PayoffMemory<F> {
    pub fn new(alpha: F) -> Result<Self> {
        let capacity = memory_length(alpha.as_f64())?;
        Ok(PayoffMemory {
            alpha,
            capacity,
            history: VecDeque::with_capacity(capacity),
        })
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    /// Memory length `M`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Past payoffs, newest first.
    pub fn history(&self) -> impl Iterator<Item = F> + '_ {
        self.history.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Weighted average of `current` with the stored history:
    /// `(r + Σ α^m r_{t-m}) / (1 + Σ α^m)` over the entries present.
    pub fn smoothed(&self, current: F) -> F {
        let mut weight = F::one();
        let mut num = current;
        let mut den = F::one();
        for &past in &self.history {
            weight = weight * self.alpha;
            num = num + weight * past;
            den = den + weight;
        }
        num / den
    }

    pub fn push(&mut self, raw: F) {
        if self.capacity == 0 {
            return;
        }
        if self.history.len() == self.capacity {
            self.history.pop_back();
        }
        self.history.push_front(raw);
    }
}

/// What one agent saw in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Frame {
    pub own: DilemmaAction,
    /// Neighbour dilemma actions in slot order.
    pub neighbours: [DilemmaAction; DEGREE],
    pub own_offers: SelectionAction,
    /// Bit `slot` set when that neighbour offered to this agent.
    pub offers_toward_me: SelectionAction,
}

/// The last `W` frames, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceWindow {
    capacity: usize,
    frames: VecDeque<Frame>,
}

impl ExperienceWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("window", "observation window must be at least 1"));
        }
        Ok(ExperienceWindow {
            capacity,
            frames: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn push(&mut self, frame: Frame) {
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    /// Frames oldest first.
    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }

    /// Frames for every slot of the encoding, oldest first; warm-up slots
    /// come first and are `None`.
    fn padded(&self) -> impl Iterator<Item = Option<&Frame>> {
        let pad = self.capacity - self.frames.len();
        std::iter::repeat_n(None, pad).chain(self.frames.iter().map(Some))
    }

    pub fn dilemma_state_len(&self) -> usize {
        DILEMMA_FRAME_LEN * self.capacity
    }

    pub fn selection_state_len(&self) -> usize {
        SELECTION_FRAME_LEN * self.capacity
    }
}

#[inline]
fn put_one_hot<F: Real>(out: &mut [F], pair: [u8; 2]) {
    out[0] = if pair[0] == 1 { F::one() } else { F::zero() };
    out[1] = if pair[1] == 1 { F::one() } else { F::zero() };
}

#[inline]
fn offer_one_hot(on: bool) -> [u8; 2] {
    if on {
        [1, 0]
    } else {
        [0, 1]
    }
}

/// Dilemma-network input: per frame, one-hot pairs for (self, up, right,
/// down, left). Length `10·W`.
pub fn encode_dilemma_state_into<F: Real>(window: &ExperienceWindow, out: &mut [F]) {
    assert_eq!(out.len(), window.dilemma_state_len());
    for (chunk, frame) in out.chunks_exact_mut(DILEMMA_FRAME_LEN).zip(window.padded()) {
        match frame {
            None => chunk.fill(F::zero()),
            Some(f) => {
                put_one_hot(&mut chunk[0..2], f.own.one_hot());
                for (slot, nb) in f.neighbours.iter().enumerate() {
                    put_one_hot(&mut chunk[2 + 2 * slot..4 + 2 * slot], nb.one_hot());
                }
            }
        }
    }
}

pub fn encode_dilemma_state<F: Real>(window: &ExperienceWindow) -> Vec<F> {
    let mut out = vec![F::zero(); window.dilemma_state_len()];
    encode_dilemma_state_into(window, &mut out);
    out
}

/// Selection-network input: per frame and neighbour slot, one-hot pairs for
/// (neighbour dilemma, own offer, neighbour's offer, own dilemma). An offer
/// encodes as `[1,0]`, no offer as `[0,1]`. Length `32·W`.
pub fn encode_selection_state_into<F: Real>(window: &ExperienceWindow, out: &mut [F]) {
    assert_eq!(out.len(), window.selection_state_len());
    for (chunk, frame) in out.chunks_exact_mut(SELECTION_FRAME_LEN).zip(window.padded()) {
        match frame {
            None => chunk.fill(F::zero()),
            Some(f) => {
                for (slot, block) in chunk.chunks_exact_mut(8).enumerate() {
                    put_one_hot(&mut block[0..2], f.neighbours[slot].one_hot());
                    put_one_hot(&mut block[2..4], offer_one_hot(f.own_offers.offers(slot)));
                    put_one_hot(&mut block[4..6], offer_one_hot(f.offers_toward_me.offers(slot)));
                    put_one_hot(&mut block[6..8], f.own.one_hot());
                }
            }
        }
    }
}

pub fn encode_selection_state<F: Real>(window: &ExperienceWindow) -> Vec<F> {
    let mut out = vec![F::zero(); window.selection_state_len()];
    encode_selection_state_into(window, &mut out);
    out
}

fn read_pair<F: Real>(pair: &[F]) -> Result<Option<bool>> {
    let (a, b) = (pair[0], pair[1]);
    match (a == F::one(), b == F::one(), a == F::zero(), b == F::zero()) {
        (true, _, _, true) => Ok(Some(true)),
        (_, true, true, _) => Ok(Some(false)),
        (_, _, true, true) => Ok(None),
        _ => Err(Error::usage("encoded pair is neither one-hot nor padding")),
    }
}

fn read_action<F: Real>(pair: &[F]) -> Result<DilemmaAction> {
    match read_pair(pair)? {
        Some(true) => Ok(DilemmaAction::Cooperate),
        Some(false) => Ok(DilemmaAction::Defect),
        None => Err(Error::usage("padding inside a recorded frame")),
    }
}

/// Inverse of [`encode_dilemma_state`]: `(own, neighbours)` per frame,
/// `None` for padding.
#[allow(clippy::type_complexity)]
pub fn decode_dilemma_state<F: Real>(
    state: &[F],
) -> Result<Vec<Option<(DilemmaAction, [DilemmaAction; DEGREE])>>> {
    if state.len() % DILEMMA_FRAME_LEN != 0 {
        return Err(Error::usage("dilemma state length is not a multiple of 10"));
    }
    state
        .chunks_exact(DILEMMA_FRAME_LEN)
        .map(|chunk| {
            if chunk.iter().all(|&x| x == F::zero()) {
                return Ok(None);
            }
            let own = read_action(&chunk[0..2])?;
            let mut nbs = [DilemmaAction::Cooperate; DEGREE];
            for (slot, nb) in nbs.iter_mut().enumerate() {
                *nb = read_action(&chunk[2 + 2 * slot..4 + 2 * slot])?;
            }
            Ok(Some((own, nbs)))
        })
        .collect()
}

/// Inverse of [`encode_selection_state`], `None` for padding.
pub fn decode_selection_state<F: Real>(state: &[F]) -> Result<Vec<Option<Frame>>> {
    if state.len() % SELECTION_FRAME_LEN != 0 {
        return Err(Error::usage("selection state length is not a multiple of 32"));
    }
    state
        .chunks_exact(SELECTION_FRAME_LEN)
        .map(|chunk| {
            if chunk.iter().all(|&x| x == F::zero()) {
                return Ok(None);
            }
            let mut frame = Frame::default();
            for (slot, block) in chunk.chunks_exact(8).enumerate() {
                frame.neighbours[slot] = read_action(&block[0..2])?;
                let mine = read_pair(&block[2..4])?.ok_or_else(|| Error::usage("padded offer"))?;
                let theirs = read_pair(&block[4..6])?.ok_or_else(|| Error::usage("padded offer"))?;
                frame.own_offers = frame.own_offers.with(slot, mine);
                frame.offers_toward_me = frame.offers_toward_me.with(slot, theirs);
                let own = read_action(&block[6..8])?;
                if slot > 0 && own != frame.own {
                    return Err(Error::usage("own action differs across slots"));
                }
                frame.own = own;
            }
            Ok(Some(frame))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use DilemmaAction::*;

    #[test]
    fn memory_length_examples() {
        assert_eq!(memory_length(0.0).unwrap(), 0);
        assert_eq!(memory_length(0.5).unwrap(), 7);
        assert_eq!(memory_length(0.6).unwrap(), 10);
        assert!(matches!(memory_length(1.0), Err(Error::Config { .. })));
        assert!(memory_length(-0.1).is_err());
    }

    #[test]
    fn smoothed_examples() {
        let mut m = PayoffMemory::new(0.0).unwrap();
        m.push(5.0);
        assert_eq!(m.smoothed(2.0), 2.0);

        let mut m = PayoffMemory::new(0.5).unwrap();
        assert_eq!(m.smoothed(2.0), 2.0);
        m.push(8.0);
        m.push(4.0); // newest first: (4, 8)
        assert_relative_eq!(m.smoothed(2.0), 6.0 / 1.75, epsilon = 1e-15);

        let mut m = PayoffMemory::new(0.6).unwrap();
        m.push(1.0);
        assert_relative_eq!(m.smoothed(2.0), 1.625, epsilon = 1e-15);
    }

    #[test]
    fn memory_evicts_beyond_length() {
        let mut m = PayoffMemory::new(0.5).unwrap();
        for k in 0..20 {
            m.push(k as f64);
        }
        assert_eq!(m.len(), 7);
        assert_eq!(m.history().next(), Some(19.0));
    }

    fn frame(own: DilemmaAction, nbs: [DilemmaAction; 4]) -> Frame {
        Frame {
            own,
            neighbours: nbs,
            ..Frame::default()
        }
    }

    #[test]
    fn dilemma_encoding_example() {
        let mut w = ExperienceWindow::new(1).unwrap();
        w.push(frame(Cooperate, [Cooperate, Defect, Cooperate, Defect]));
        let s: Vec<f64> = encode_dilemma_state(&w);
        assert_eq!(s, vec![1., 0., 1., 0., 0., 1., 1., 0., 0., 1.]);
    }

    #[test]
    fn empty_windows_encode_to_zero() {
        let w = ExperienceWindow::new(3).unwrap();
        let d: Vec<f64> = encode_dilemma_state(&w);
        let s: Vec<f64> = encode_selection_state(&w);
        assert_eq!(d.len(), 30);
        assert_eq!(s.len(), 96);
        assert!(d.iter().chain(&s).all(|&x| x == 0.0));
    }

    #[test]
    fn dilemma_frames_oldest_first_with_front_padding() {
        let mut w = ExperienceWindow::new(3).unwrap();
        let old = frame(Defect, [Defect; 4]);
        let new = frame(Cooperate, [Cooperate; 4]);
        w.push(old);
        w.push(new);
        let s: Vec<f64> = encode_dilemma_state(&w);
        assert!(s[0..10].iter().all(|&x| x == 0.0));
        assert_eq!(&s[10..12], &[0., 1.]);
        assert_eq!(&s[20..22], &[1., 0.]);
        let decoded = decode_dilemma_state(&s).unwrap();
        assert_eq!(decoded, vec![None, Some((Defect, [Defect; 4])), Some((Cooperate, [Cooperate; 4]))]);
    }

    #[test]
    fn selection_encoding_example() {
        let mut w = ExperienceWindow::new(1).unwrap();
        w.push(Frame {
            own: Defect,
            neighbours: [Cooperate; 4],
            own_offers: SelectionAction::NONE.with(0, true),
            offers_toward_me: SelectionAction::NONE.with(0, true),
        });
        let s: Vec<f64> = encode_selection_state(&w);
        assert_eq!(&s[0..8], &[1., 0., 1., 0., 1., 0., 0., 1.]);
        assert_eq!(&s[8..16], &[1., 0., 0., 1., 0., 1., 0., 1.]);
    }

    #[test]
    fn window_keeps_last_frames() {
        let mut w = ExperienceWindow::new(2).unwrap();
        for own in [Cooperate, Defect, Defect] {
            w.push(frame(own, [Cooperate; 4]));
        }
        let owns: Vec<_> = w.frames().map(|f| f.own).collect();
        assert_eq!(owns, vec![Defect, Defect]);
        assert!(ExperienceWindow::new(0).is_err());
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_dilemma_state(&[1.0f64, 1.0, 0., 0., 0., 0., 0., 0., 0., 0.]).is_err());
        assert!(decode_selection_state(&[0.0f64; 31]).is_err());
    }
}
