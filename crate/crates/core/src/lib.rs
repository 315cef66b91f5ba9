//! Spatial prisoner's dilemma on a periodic square lattice where every agent
//! learns two things at once: whether to cooperate, and which of its four
//! neighbours to play with. Learning is independent deep Q-learning with
//! prioritized replay; an evolutionary (Fermi imitation) baseline and two
//! ablations share the same arena loop.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (`f32` or `f64`). Payoff arithmetic only needs [`num_traits::Num`], so it
//! also runs on exact rationals. The aliases at the crate root pin the
//! concrete `f64` types the CLI uses.

pub mod agents;
pub mod error;
pub mod lattice;
pub mod memory;
pub mod metrics;
pub mod qlearn;
pub mod rng;
pub mod utility;

pub mod experiment;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Floating-point scalar used by networks, optimizers, and statistics.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or config value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

pub type PayoffMatrix64 = lattice::PayoffMatrix<f64>;
pub type QNetwork64 = qlearn::QNetwork<f64>;
pub type QNetwork32 = qlearn::QNetwork<f32>;
pub type DqnLearner64 = qlearn::DqnLearner<f64>;
pub type ReplayBuffer64 = qlearn::PrioritizedReplayBuffer<f64>;
pub type Agent64 = agents::Agent<f64>;
pub type Arena64 = experiment::Arena<f64>;
pub type PayoffMemory64 = memory::PayoffMemory<f64>;
