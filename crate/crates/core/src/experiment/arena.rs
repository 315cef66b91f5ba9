use rand::Rng;

use super::config::ExperimentConfig;
use crate::agents::{egt_mc_update, Agent, AgentKey, AgentVariant, Exploration, Observation};
use crate::lattice::{DilemmaAction, Lattice, LatticeEnv, RoundOutcome, SelectionAction};
use crate::metrics::{MetricsAccumulator, MetricsRecord};
use crate::qlearn::{LearnerConfig, LinearSchedule, StepHyper};
use crate::rng::{stream, Purpose, StreamRng, ARENA_LEVEL};
use crate::utility::{counterfactual_utility, population_averages};
use crate::{Real, Result};

/// Loop counters used to check the training cadence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArenaCounters {
    pub timesteps: u64,
    /// Elementary Fermi pair updates (imitation baseline only).
    pub imitation_updates: u64,
}

/// One independent lattice world: its agents, their memories, and the RNG
/// streams derived from `(seed, arena index)`.
#[derive(Debug, Clone)]
pub struct Arena<F> {
    seed: u64,
    index: usize,
    variant: AgentVariant,
    env: LatticeEnv<F>,
    agents: Vec<Agent<F>>,
    observations: Vec<Observation<F>>,
    scratch: Observation<F>,
    imitation_rng: StreamRng,
    eps_dilemma: LinearSchedule,
    eps_selection: LinearSchedule,
    lr: LinearSchedule,
    beta: LinearSchedule,
    tau: F,
    fermi_k: F,
    last: RoundOutcome<F>,
    counters: ArenaCounters,
}

impl<F: Real> Arena<F> {
    pub fn new(config: &ExperimentConfig, seed: u64, index: usize) -> Result<Self> {
        config.validate()?;
        let lattice = Lattice::new(config.side)?;
        let n = lattice.len();
        let mut env = LatticeEnv::new(lattice, F::lit(config.b), F::lit(config.alpha), config.window)?;

        let mut coin = stream(seed, index as u64, ARENA_LEVEL, Purpose::InitialStrategy);
        let strategies: Vec<DilemmaAction> = (0..n)
            .map(|_| {
                if coin.gen_bool(0.5) {
                    DilemmaAction::Cooperate
                } else {
                    DilemmaAction::Defect
                }
            })
            .collect();
        let selections = vec![SelectionAction::ALL; n];

        let learner = LearnerConfig {
            hidden: config.hidden,
            buffer_capacity: config.buffer_capacity,
            batch_size: config.batch_size,
            update_every: config.update_every,
            gamma: F::lit(config.gamma),
            base_lr: F::lit(config.lr),
            per_alpha: F::lit(config.per_alpha),
        };
        let agents = (0..n)
            .map(|i| {
                let key = AgentKey {
                    seed,
                    arena: index as u64,
                    agent: i as u64,
                };
                Agent::new(config.variant, config.window, learner, key, strategies[i])
            })
            .collect::<Result<Vec<_>>>()?;

        // the initial configuration is the first thing every agent observes
        env.observe(&strategies, &selections);
        let observations = (0..n)
            .map(|i| {
                let mut obs = Observation::default();
                agents[i].encode(env.window(i), &mut obs);
                obs
            })
            .collect();

        let last = RoundOutcome {
            timestep: 0,
            effective: vec![0b1111; n],
            raw_payoffs: vec![F::zero(); n],
            final_payoffs: vec![F::zero(); n],
            dilemmas: strategies,
            selections,
        };

        Ok(Arena {
            seed,
            index,
            variant: config.variant,
            env,
            agents,
            observations,
            scratch: Observation::default(),
            imitation_rng: stream(seed, index as u64, ARENA_LEVEL, Purpose::Imitation),
            eps_dilemma: config.eps_dilemma(),
            eps_selection: config.eps_selection(),
            lr: config.lr_schedule(),
            beta: config.beta_schedule(),
            tau: F::lit(config.tau),
            fermi_k: F::lit(config.fermi_k),
            last,
            counters: ArenaCounters::default(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn variant(&self) -> AgentVariant {
        self.variant
    }

    pub fn lattice(&self) -> &Lattice {
        self.env.lattice()
    }

    pub fn env(&self) -> &LatticeEnv<F> {
        &self.env
    }

    pub fn agents(&self) -> &[Agent<F>] {
        &self.agents
    }

    pub fn timestep(&self) -> u64 {
        self.env.timestep()
    }

    pub fn counters(&self) -> ArenaCounters {
        self.counters
    }

    /// The most recent round, or the initial configuration (all offers on,
    /// zero payoffs) before the first step.
    pub fn last_outcome(&self) -> &RoundOutcome<F> {
        &self.last
    }

    /// One timestep: act, play the round, smooth payoffs, then either learn
    /// from counterfactual utilities (RL variants) or run one Monte Carlo
    /// imitation step (baseline).
    pub fn step(&mut self) -> Result<&RoundOutcome<F>> {
        let t = self.env.timestep();
        let eps = Exploration {
            dilemma: self.eps_dilemma.value(t),
            selection: self.eps_selection.value(t),
        };
        let n = self.agents.len();
        let mut dilemmas = Vec::with_capacity(n);
        let mut selections = Vec::with_capacity(n);
        for (agent, obs) in self.agents.iter_mut().zip(&self.observations) {
            let (d, s) = agent.act(obs, eps);
            dilemmas.push(d);
            selections.push(s);
        }

        let outcome = self.env.step(&dilemmas, &selections);

        if self.variant == AgentVariant::Egt {
            let mut strategies = dilemmas.clone();
            let updates = egt_mc_update(
                self.env.lattice(),
                &mut strategies,
                &outcome.final_payoffs,
                self.fermi_k,
                &mut self.imitation_rng,
            )?;
            self.counters.imitation_updates += updates as u64;
            for (agent, s) in self.agents.iter_mut().zip(strategies) {
                agent.set_egt_strategy(s);
            }
        } else {
            let hyper = StepHyper {
                lr_multiplier: self.lr.value_as(t),
                beta: self.beta.value_as(t),
                tau: self.tau,
            };
            let averages = population_averages(&outcome.final_payoffs, &dilemmas);
            for i in 0..n {
                let nbs = self.env.lattice().neighbours(i).map(|j| dilemmas[j]);
                let utility = counterfactual_utility(outcome.final_payoffs[i], dilemmas[i], &nbs, &averages);
                self.agents[i].encode(self.env.window(i), &mut self.scratch);
                self.agents[i].learn(
                    &self.observations[i],
                    (dilemmas[i], selections[i]),
                    utility,
                    &self.scratch,
                    hyper,
                )?;
                std::mem::swap(&mut self.observations[i], &mut self.scratch);
            }
        }

        self.counters.timesteps += 1;
        self.last = outcome;
        Ok(&self.last)
    }

    /// Run `steps` timesteps, feeding each round's metrics to `acc`.
    pub fn run_steps(&mut self, steps: u64, acc: &mut MetricsAccumulator) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
            acc.add(&MetricsRecord::from_outcome(self.env.lattice(), &self.last));
        }
        Ok(())
    }
}
