//! The spatial game world: a periodic L×L lattice with von Neumann
//! neighbourhoods, two-phase action resolution (mutual offers, then one
//! dilemma round per effective edge), and round payoffs.
//!
//! Agents are indexed row-major. Neighbour slots are always ordered
//! up, right, down, left; selection bits, state encodings, and metrics all
//! use that order.

use std::fmt;

use num_traits::Num;

use crate::memory::{ExperienceWindow, Frame, PayoffMemory};
use crate::{Error, Real, Result};

/// Number of neighbour slots per agent.
pub const DEGREE: usize = 4;

/// Slot names in their fixed order.
pub const SLOT_NAMES: [&str; DEGREE] = ["up", "right", "down", "left"];

/// The slot on the neighbour's side of the same edge.
#[inline]
pub const fn opposite_slot(slot: usize) -> usize {
    (slot + 2) % DEGREE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DilemmaAction {
    #[default]
    Cooperate,
    Defect,
}

impl DilemmaAction {
    /// `[1,0]` for cooperate, `[0,1]` for defect.
    #[inline]
    pub fn one_hot(self) -> [u8; 2] {
        match self {
            DilemmaAction::Cooperate => [1, 0],
            DilemmaAction::Defect => [0, 1],
        }
    }

    /// Action index used by the dilemma Q-network (0 = cooperate).
    #[inline]
    pub fn index(self) -> usize {
        match self {
            DilemmaAction::Cooperate => 0,
            DilemmaAction::Defect => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(DilemmaAction::Cooperate),
            1 => Some(DilemmaAction::Defect),
            _ => None,
        }
    }

    #[inline]
    pub fn other(self) -> Self {
        match self {
            DilemmaAction::Cooperate => DilemmaAction::Defect,
            DilemmaAction::Defect => DilemmaAction::Cooperate,
        }
    }

    #[inline]
    pub fn is_cooperate(self) -> bool {
        self == DilemmaAction::Cooperate
    }

    pub fn symbol(self) -> char {
        match self {
            DilemmaAction::Cooperate => 'C',
            DilemmaAction::Defect => 'D',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'C' => Some(DilemmaAction::Cooperate),
            'D' => Some(DilemmaAction::Defect),
            _ => None,
        }
    }
}

impl fmt::Display for DilemmaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Four offer bits, one per neighbour slot. Bit `j` set means "offer to
/// play with the neighbour in slot `j`". The bit pattern is also the action
/// index in `0..16`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SelectionAction(u8);

impl SelectionAction {
    pub const NONE: Self = SelectionAction(0);
    pub const ALL: Self = SelectionAction(0b1111);
    pub const COUNT: usize = 16;

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(SelectionAction(index as u8))
    }

    pub fn from_bits(bits: [bool; DEGREE]) -> Self {
        let mut mask = 0u8;
        for (slot, &on) in bits.iter().enumerate() {
            if on {
                mask |= 1 << slot;
            }
        }
        SelectionAction(mask)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn offers(self, slot: usize) -> bool {
        self.0 >> slot & 1 == 1
    }

    pub fn bits(self) -> [bool; DEGREE] {
        std::array::from_fn(|slot| self.offers(slot))
    }

    #[inline]
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    #[must_use]
    pub fn with(self, slot: usize, on: bool) -> Self {
        if on {
            SelectionAction(self.0 | 1 << slot)
        } else {
            SelectionAction(self.0 & !(1 << slot))
        }
    }
}

impl fmt::Debug for SelectionAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SelectionAction(")?;
        for slot in 0..DEGREE {
            write!(f, "{}", self.offers(slot) as u8)?;
        }
        write!(f, ")")
    }
}

/// Weak prisoner's dilemma: R = 1, S = P = 0, T = b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMatrix<T> {
    b: T,
}

impl<T: Num + Copy + PartialOrd> PayoffMatrix<T> {
    /// `b` must lie in `[1, 2]`.
    pub fn new(b: T) -> Result<Self> {
        let one = T::one();
        if !(b >= one && b <= one + one) {
            return Err(Error::config("b", "dilemma strength must lie in [1, 2]"));
        }
        Ok(PayoffMatrix { b })
    }
}

impl<T: Num + Copy> PayoffMatrix<T> {
    pub fn b(&self) -> T {
        self.b
    }

    /// Payoff to a player choosing `me` against `other`.
    #[inline]
    pub fn payoff(&self, me: DilemmaAction, other: DilemmaAction) -> T {
        use DilemmaAction::*;
        match (me, other) {
            (Cooperate, Cooperate) => T::one(),
            (Defect, Cooperate) => self.b,
            (_, Defect) => T::zero(),
        }
    }
}

/// Periodic square lattice with a precomputed neighbour table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    side: usize,
    neighbours: Vec<[usize; DEGREE]>,
}

impl Lattice {
    /// Side lengths below 3 would give agents duplicate neighbours.
    pub fn new(side: usize) -> Result<Self> {
        if side < 3 {
            return Err(Error::config("side", "lattice side must be at least 3"));
        }
        let n = side * side;
        let neighbours = (0..n)
            .map(|agent| {
                let (row, col) = (agent / side, agent % side);
                [
                    ((row + side - 1) % side) * side + col,
                    row * side + (col + 1) % side,
                    ((row + 1) % side) * side + col,
                    row * side + (col + side - 1) % side,
                ]
            })
            .collect();
        Ok(Lattice { side, neighbours })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Undirected edge count; every agent owns its `right` and `down` edges.
    pub fn edge_count(&self) -> usize {
        2 * self.len()
    }

    pub fn coords(&self, agent: usize) -> (usize, usize) {
        (agent / self.side, agent % self.side)
    }

    /// Up/right/down/left neighbours with wraparound.
    pub fn neighbour_indices(&self, agent: usize) -> Result<[usize; DEGREE]> {
        self.neighbours
            .get(agent)
            .copied()
            .ok_or_else(|| Error::config("agent", format!("{agent} outside [0, {})", self.len())))
    }

    /// Unchecked variant for hot loops.
    #[inline]
    pub fn neighbours(&self, agent: usize) -> &[usize; DEGREE] {
        &self.neighbours[agent]
    }

    /// Each undirected edge once, as `(agent, slot, neighbour)` with slot
    /// `right` or `down`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| [1usize, 2].map(|slot| (i, slot, self.neighbours[i][slot])))
    }
}

/// Effective-interaction flags for one agent: bit `slot` set when the agent
/// and that neighbour offered to each other.
pub type EffectiveMask = u8;

/// Mutual-offer resolution for every agent.
pub fn resolve_interactions(lattice: &Lattice, selections: &[SelectionAction]) -> Vec<EffectiveMask> {
    assert_eq!(selections.len(), lattice.len(), "one selection per agent");
    (0..lattice.len())
        .map(|i| {
            let mut mask = 0;
            for (slot, &j) in lattice.neighbours(i).iter().enumerate() {
                if selections[i].offers(slot) && selections[j].offers(opposite_slot(slot)) {
                    mask |= 1 << slot;
                }
            }
            mask
        })
        .collect()
}

/// Offer bits pointing at `agent`, in the agent's own slot order.
pub fn offers_toward(lattice: &Lattice, selections: &[SelectionAction], agent: usize) -> SelectionAction {
    let mut toward = SelectionAction::NONE;
    for (slot, &j) in lattice.neighbours(agent).iter().enumerate() {
        toward = toward.with(slot, selections[j].offers(opposite_slot(slot)));
    }
    toward
}

/// Sum of dilemma payoffs over the agent's effective neighbours. Agents
/// with no effective interaction earn exactly zero.
pub fn round_payoff<T: Num + Copy>(
    lattice: &Lattice,
    agent: usize,
    dilemmas: &[DilemmaAction],
    effective: &[EffectiveMask],
    matrix: &PayoffMatrix<T>,
) -> T {
    let mine = dilemmas[agent];
    let mut total = T::zero();
    for (slot, &j) in lattice.neighbours(agent).iter().enumerate() {
        if effective[agent] >> slot & 1 == 1 {
            total = total + matrix.payoff(mine, dilemmas[j]);
        }
    }
    total
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome<F> {
    pub timestep: u64,
    pub dilemmas: Vec<DilemmaAction>,
    pub selections: Vec<SelectionAction>,
    pub effective: Vec<EffectiveMask>,
    /// Raw round payoffs r_i.
    pub raw_payoffs: Vec<F>,
    /// Memory-weighted payoffs R_i.
    pub final_payoffs: Vec<F>,
}

impl<F> RoundOutcome<F> {
    pub fn interactions(&self, agent: usize) -> u32 {
        self.effective[agent].count_ones()
    }
}

/// Lattice world plus the per-agent observation and payoff memories that
/// each round is appended to.
#[derive(Debug, Clone)]
pub struct LatticeEnv<F> {
    lattice: Lattice,
    matrix: PayoffMatrix<F>,
    windows: Vec<ExperienceWindow>,
    memories: Vec<PayoffMemory<F>>,
    timestep: u64,
}

impl<F: Real> LatticeEnv<F> {
    pub fn new(lattice: Lattice, b: F, alpha: F, window: usize) -> Result<Self> {
        let matrix = PayoffMatrix::new(b)?;
        let n = lattice.len();
        let memory = PayoffMemory::new(alpha)?;
        let window = ExperienceWindow::new(window)?;
        Ok(LatticeEnv {
            lattice,
            matrix,
            windows: vec![window; n],
            memories: vec![memory; n],
            timestep: 0,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn matrix(&self) -> &PayoffMatrix<F> {
        &self.matrix
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    pub fn window(&self, agent: usize) -> &ExperienceWindow {
        &self.windows[agent]
    }

    pub fn memory(&self, agent: usize) -> &PayoffMemory<F> {
        &self.memories[agent]
    }

    /// Record a round in every agent's window without playing it. Used to
    /// seed the first observation from the initial configuration.
    pub fn observe(&mut self, dilemmas: &[DilemmaAction], selections: &[SelectionAction]) {
        for i in 0..self.lattice.len() {
            let frame = self.frame_for(i, dilemmas, selections);
            self.windows[i].push(frame);
        }
    }

    fn frame_for(&self, agent: usize, dilemmas: &[DilemmaAction], selections: &[SelectionAction]) -> Frame {
        let nb = self.lattice.neighbours(agent);
        Frame {
            own: dilemmas[agent],
            neighbours: nb.map(|j| dilemmas[j]),
            own_offers: selections[agent],
            offers_toward_me: offers_toward(&self.lattice, selections, agent),
        }
    }

    /// Play one round: resolve offers, score every effective edge, smooth
    /// payoffs with each agent's memory, then append the round to windows
    /// and memories and advance the clock.
    pub fn step(&mut self, dilemmas: &[DilemmaAction], selections: &[SelectionAction]) -> RoundOutcome<F> {
        let n = self.lattice.len();
        assert_eq!(dilemmas.len(), n, "one dilemma action per agent");
        assert_eq!(selections.len(), n, "one selection action per agent");

        let effective = resolve_interactions(&self.lattice, selections);
        let raw_payoffs: Vec<F> = (0..n)
            .map(|i| round_payoff(&self.lattice, i, dilemmas, &effective, &self.matrix))
            .collect();
        let final_payoffs: Vec<F> = (0..n)
            .map(|i| self.memories[i].smoothed(raw_payoffs[i]))
            .collect();

        for i in 0..n {
            let frame = self.frame_for(i, dilemmas, selections);
            self.windows[i].push(frame);
            self.memories[i].push(raw_payoffs[i]);
        }

        let outcome = RoundOutcome {
            timestep: self.timestep,
            dilemmas: dilemmas.to_vec(),
            selections: selections.to_vec(),
            effective,
            raw_payoffs,
            final_payoffs,
        };
        self.timestep += 1;
        outcome
    }
}

/// Sum of payoff contributions over both ends of every effective edge.
/// Equals the population total of raw payoffs.
pub fn edge_payoff_total<T: Num + Copy>(
    lattice: &Lattice,
    dilemmas: &[DilemmaAction],
    effective: &[EffectiveMask],
    matrix: &PayoffMatrix<T>,
) -> T {
    lattice
        .edges()
        .filter(|&(i, slot, _)| effective[i] >> slot & 1 == 1)
        .fold(T::zero(), |acc, (i, _, j)| {
            acc + matrix.payoff(dilemmas[i], dilemmas[j]) + matrix.payoff(dilemmas[j], dilemmas[i])
        })
}
