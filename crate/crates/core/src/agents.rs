//! The four agent kinds behind one act/learn interface:
//!
//! * `Dual`: separate dilemma and selection Q-networks (the main model);
//! * `Single`: one network over the 32 joint (dilemma, selection) actions;
//! * `DilemmaOnly`: learns the dilemma action, always offers to everyone;
//! * `Egt`: no networks, imitates neighbours through the Fermi rule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::lattice::{DilemmaAction, Lattice, SelectionAction, DEGREE};
use crate::memory::{encode_dilemma_state_into, encode_selection_state_into, ExperienceWindow};
use crate::qlearn::{epsilon_greedy, DqnLearner, LearnerConfig, StepHyper, TransitionRef};
use crate::rng::{stream, Purpose, StreamRng};
use crate::{Error, Real, Result};

/// Joint action count of the single-network variant.
pub const JOINT_ACTIONS: usize = 2 * SelectionAction::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentVariant {
    Dual,
    Single,
    DilemmaOnly,
    Egt,
}

impl AgentVariant {
    pub const ALL: [AgentVariant; 4] = [
        AgentVariant::Dual,
        AgentVariant::Single,
        AgentVariant::DilemmaOnly,
        AgentVariant::Egt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentVariant::Dual => "dual",
            AgentVariant::Single => "single",
            AgentVariant::DilemmaOnly => "dilemma-only",
            AgentVariant::Egt => "egt",
        }
    }

    pub fn is_rl(self) -> bool {
        self != AgentVariant::Egt
    }
}

impl fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "dual" | "dual-rl" => Ok(AgentVariant::Dual),
            "single" | "single-rl" => Ok(AgentVariant::Single),
            "dilemma-only" | "dilemma-only-rl" | "dilemma" => Ok(AgentVariant::DilemmaOnly),
            "egt" | "fermi" => Ok(AgentVariant::Egt),
            other => Err(Error::config(
                "variant",
                format!("unknown variant `{other}` (expected dual, single, dilemma-only, egt)"),
            )),
        }
    }
}

/// Pack a (dilemma, selection) pair into the 5-bit joint index: bit 4 is
/// the dilemma action (0 = cooperate), bits 0–3 the offer bits.
pub fn encode_joint_action(dilemma: DilemmaAction, selection: SelectionAction) -> usize {
    dilemma.index() << DEGREE | selection.index()
}

pub fn decode_joint_action(index: usize) -> Option<(DilemmaAction, SelectionAction)> {
    if index >= JOINT_ACTIONS {
        return None;
    }
    let dilemma = DilemmaAction::from_index(index >> DEGREE)?;
    let selection = SelectionAction::from_index(index & (SelectionAction::COUNT - 1))?;
    Some((dilemma, selection))
}

/// Network inputs for one agent at one timestep. Only the vectors the
/// agent's variant consumes are non-empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation<F> {
    pub dilemma: Vec<F>,
    pub selection: Vec<F>,
    /// Dilemma state followed by selection state (single-network variant).
    pub joint: Vec<F>,
}

/// Exploration rates for the current timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exploration {
    pub dilemma: f64,
    pub selection: f64,
}

#[derive(Debug, Clone)]
pub enum Agent<F> {
    Dual {
        dilemma: DqnLearner<F>,
        selection: DqnLearner<F>,
        explore: StreamRng,
    },
    Single {
        joint: DqnLearner<F>,
        explore: StreamRng,
    },
    DilemmaOnly {
        dilemma: DqnLearner<F>,
        explore: StreamRng,
    },
    Egt {
        strategy: DilemmaAction,
    },
}

/// Where an agent sits in a run; keys all of its RNG streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentKey {
    pub seed: u64,
    pub arena: u64,
    pub agent: u64,
}

impl<F: Real> Agent<F> {
    pub fn new(
        variant: AgentVariant,
        window: usize,
        config: LearnerConfig<F>,
        key: AgentKey,
        initial_strategy: DilemmaAction,
    ) -> Result<Self> {
        let AgentKey { seed, arena, agent } = key;
        let mut init = stream(seed, arena, agent, Purpose::WeightInit);
        let explore = stream(seed, arena, agent, Purpose::Explore);
        let replay = stream(seed, arena, agent, Purpose::Replay);
        let dilemma_len = 2 * (DEGREE + 1) * window;
        let selection_len = 2 * 4 * DEGREE * window;
        Ok(match variant {
            AgentVariant::Dual => Agent::Dual {
                dilemma: DqnLearner::new(dilemma_len, 2, config, &mut init, replay)?,
                selection: DqnLearner::new(
                    selection_len,
                    SelectionAction::COUNT,
                    config,
                    &mut init,
                    stream(seed, arena, agent, Purpose::ReplaySelection),
                )?,
                explore,
            },
            AgentVariant::Single => Agent::Single {
                joint: DqnLearner::new(dilemma_len + selection_len, JOINT_ACTIONS, config, &mut init, replay)?,
                explore,
            },
            AgentVariant::DilemmaOnly => Agent::DilemmaOnly {
                dilemma: DqnLearner::new(dilemma_len, 2, config, &mut init, replay)?,
                explore,
            },
            AgentVariant::Egt => Agent::Egt {
                strategy: initial_strategy,
            },
        })
    }

    pub fn variant(&self) -> AgentVariant {
        match self {
            Agent::Dual { .. } => AgentVariant::Dual,
            Agent::Single { .. } => AgentVariant::Single,
            Agent::DilemmaOnly { .. } => AgentVariant::DilemmaOnly,
            Agent::Egt { .. } => AgentVariant::Egt,
        }
    }

    /// Learners owned by the agent (dilemma first).
    pub fn learners(&self) -> Vec<&DqnLearner<F>> {
        match self {
            Agent::Dual { dilemma, selection, .. } => vec![dilemma, selection],
            Agent::Single { joint, .. } => vec![joint],
            Agent::DilemmaOnly { dilemma, .. } => vec![dilemma],
            Agent::Egt { .. } => vec![],
        }
    }

    pub fn egt_strategy(&self) -> Option<DilemmaAction> {
        match self {
            Agent::Egt { strategy } => Some(*strategy),
            _ => None,
        }
    }

    pub fn set_egt_strategy(&mut self, action: DilemmaAction) {
        if let Agent::Egt { strategy } = self {
            *strategy = action;
        }
    }

    /// Fill `obs` with the encodings this agent's networks read.
    pub fn encode(&self, window: &ExperienceWindow, obs: &mut Observation<F>) {
        let d_len = window.dilemma_state_len();
        let s_len = window.selection_state_len();
        match self {
            Agent::Dual { .. } => {
                obs.dilemma.resize(d_len, F::zero());
                obs.selection.resize(s_len, F::zero());
                encode_dilemma_state_into(window, &mut obs.dilemma);
                encode_selection_state_into(window, &mut obs.selection);
            }
            Agent::Single { .. } => {
                obs.joint.resize(d_len + s_len, F::zero());
                let (d, s) = obs.joint.split_at_mut(d_len);
                encode_dilemma_state_into(window, d);
                encode_selection_state_into(window, s);
            }
            Agent::DilemmaOnly { .. } => {
                obs.dilemma.resize(d_len, F::zero());
                encode_dilemma_state_into(window, &mut obs.dilemma);
            }
            Agent::Egt { .. } => {}
        }
    }

    /// Choose this round's dilemma and selection actions.
    pub fn act(&mut self, obs: &Observation<F>, eps: Exploration) -> (DilemmaAction, SelectionAction) {
        match self {
            Agent::Dual {
                dilemma,
                selection,
                explore,
            } => {
                let d = epsilon_greedy(dilemma.q_values(&obs.dilemma), eps.dilemma, explore);
                let s = epsilon_greedy(selection.q_values(&obs.selection), eps.selection, explore);
                (
                    DilemmaAction::from_index(d).expect("2-way head"),
                    SelectionAction::from_index(s).expect("16-way head"),
                )
            }
            Agent::Single { joint, explore } => {
                // one draw over the joint space; the dilemma floor is used as
                // the single network's exploration rate
                let idx = epsilon_greedy(joint.q_values(&obs.joint), eps.dilemma, explore);
                decode_joint_action(idx).expect("32-way head")
            }
            Agent::DilemmaOnly { dilemma, explore } => {
                let d = epsilon_greedy(dilemma.q_values(&obs.dilemma), eps.dilemma, explore);
                (DilemmaAction::from_index(d).expect("2-way head"), SelectionAction::ALL)
            }
            Agent::Egt { strategy } => (*strategy, SelectionAction::ALL),
        }
    }

    /// Store `(s, a, U, s')` in every buffer the agent owns (the same
    /// utility goes to both buffers of a dual agent) and train per cadence.
    /// No-op for EGT agents.
    pub fn learn(
        &mut self,
        obs: &Observation<F>,
        action: (DilemmaAction, SelectionAction),
        utility: F,
        next_obs: &Observation<F>,
        hyper: StepHyper<F>,
    ) -> Result<()> {
        let (d, s) = action;
        match self {
            Agent::Dual { dilemma, selection, .. } => {
                dilemma.record(
                    TransitionRef {
                        state: &obs.dilemma,
                        action: d.index(),
                        utility,
                        next_state: &next_obs.dilemma,
                    },
                    hyper,
                )?;
                selection.record(
                    TransitionRef {
                        state: &obs.selection,
                        action: s.index(),
                        utility,
                        next_state: &next_obs.selection,
                    },
                    hyper,
                )
            }
            Agent::Single { joint, .. } => joint.record(
                TransitionRef {
                    state: &obs.joint,
                    action: encode_joint_action(d, s),
                    utility,
                    next_state: &next_obs.joint,
                },
                hyper,
            ),
            Agent::DilemmaOnly { dilemma, .. } => dilemma.record(
                TransitionRef {
                    state: &obs.dilemma,
                    action: d.index(),
                    utility,
                    next_state: &next_obs.dilemma,
                },
                hyper,
            ),
            Agent::Egt { .. } => Ok(()),
        }
    }
}

/// Probability that a player with payoff `r_self` adopts the strategy of a
/// player with payoff `r_other`: `1 / (1 + exp((r_self − r_other)/K))`.
pub fn fermi_adopt_probability<F: Real>(r_self: F, r_other: F, k: F) -> Result<F> {
    if !(k > F::zero()) {
        return Err(Error::config("fermi_k", "noise K must be positive"));
    }
    Ok(F::one() / (F::one() + ((r_self - r_other) / k).exp()))
}

/// One Monte Carlo step of random sequential Fermi imitation: `N` times,
/// pick a random agent and one of its neighbours uniformly; the agent copies
/// the neighbour's strategy with the Fermi probability. Payoffs are the
/// snapshot passed in; strategy writes are visible to later picks. Returns
/// the number of elementary updates performed (always `N`).
pub fn egt_mc_update<F: Real, R: Rng + ?Sized>(
    lattice: &Lattice,
    strategies: &mut [DilemmaAction],
    payoffs: &[F],
    k: F,
    rng: &mut R,
) -> Result<usize> {
    let n = lattice.len();
    if strategies.len() != n || payoffs.len() != n {
        return Err(Error::usage("strategies and payoffs must cover every agent"));
    }
    if !(k > F::zero()) {
        return Err(Error::config("fermi_k", "noise K must be positive"));
    }
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let j = lattice.neighbours(i)[rng.gen_range(0..DEGREE)];
        let p = fermi_adopt_probability(payoffs[i], payoffs[j], k)?;
        if rng.gen::<f64>() < p.as_f64() {
            strategies[i] = strategies[j];
        }
    }
    Ok(n)
}
