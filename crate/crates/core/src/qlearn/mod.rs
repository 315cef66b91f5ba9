//! From-scratch value learning: the MLP, Adam, DQN loss with soft-updated
//! targets, epsilon-greedy selection, linear schedules, and proportional
//! prioritized replay.

pub mod adam;
pub mod dqn;
pub mod network;
pub mod policy;
pub mod replay;
pub mod schedule;

pub use adam::{adam_step, AdamState};
pub use dqn::{q_loss_and_gradient, DqnLearner, LearnerConfig, LearnerCounters, LossOutput, StepHyper, TransitionRef};
pub use network::{soft_update, Activations, BackwardScratch, QNetwork, DEFAULT_HIDDEN};
pub use policy::{argmax, epsilon_greedy};
pub use replay::{PrioritizedReplayBuffer, Sample, PRIORITY_FLOOR};
pub use schedule::{schedule_value, LinearSchedule};
