//! Adaptive pilot-beam selection for tracking sparse mmWave MIMO channels.
//!
//! The angular support of the channel moves as a banded random walk over
//! transmit beams. Each slot the transmitter sounds a few beams, the receiver
//! feeds back one detection bit per beam, and the transmitter keeps a belief
//! over the support. Pilot selection is a finite-horizon POMDP: solve it
//! exactly with [`solver::solve_finite_horizon`] or run one of the cheaper
//! policies in [`policy`], then evaluate with [`harness::monte_carlo`].

pub mod belief;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod model;
pub mod policy;
pub mod rng;
pub mod sensing;
pub mod solver;

pub use belief::{expected_reward, expected_reward_vector, predict, update_belief, Belief};
pub use channel::{CompositeState, StateSpace, TransitionModel};
pub use config::{ChannelConfig, InitialPrior, RewardKind};
pub use error::{Error, Result};
pub use harness::{monte_carlo, run_episode, EpisodeLog, RunSummary};
pub use model::PilotPomdp;
pub use policy::{GreedyPolicy, OptimalPolicy, Policy, RandomPolicy, TrackerPolicy};
pub use rng::{episode_rng, SimRng};
pub use sensing::{ActionSpace, ActionVector, DetectorModel, ObservationVector};
pub use solver::{solve_finite_horizon, AlphaVectorSet};
