use rand::Rng;

use crate::belief::{expected_reward, update_belief, Belief};
use crate::channel::{draw_rows, realize_channel, step_state, CompositeState};
use crate::config::{ChannelConfig, InitialPrior};
use crate::error::Result;
use crate::model::PilotPomdp;
use crate::policy::Policy;
use crate::rng::SimRng;
use crate::sensing::{sense_columns, ActionVector, DetectorModel, ObservationVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    /// True state after this slot's transition.
    pub state: CompositeState,
    pub action: ActionVector,
    pub observation: ObservationVector,
    /// `r(s, a, o)` for the true post-transition state.
    pub reward: f64,
    /// `<R(a), pi>` under the belief the action was chosen from.
    pub expected_reward: f64,
    /// Entropy (bits) of the belief the action was chosen from.
    pub belief_entropy: f64,
    /// That belief itself, when requested.
    pub belief: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub initial_state: Option<CompositeState>,
    pub slots: Vec<SlotRecord>,
}

impl EpisodeLog {
    pub fn rewards(&self) -> Vec<f64> {
        self.slots.iter().map(|s| s.reward).collect()
    }

    /// Running total of the reward after each slot.
    pub fn accumulated(&self) -> Vec<f64> {
        self.slots
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s.reward;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpisodeOptions {
    pub record_beliefs: bool,
}

/// One `cfg.horizon`-slot episode.
///
/// Each slot: the policy picks pilots from the current belief, the channel
/// moves, the receiver senses the chosen columns and feeds back one bit per
/// pilot, the slot is credited with the paths of the true state in the
/// columns that fired, and the belief is updated.
pub fn run_episode(
    cfg: &ChannelConfig,
    model: &PilotPomdp,
    policy: &dyn Policy,
    detector: &DetectorModel,
    rng: &mut SimRng,
    opts: EpisodeOptions,
) -> Result<EpisodeLog> {
    let n = model.n_states();
    let mut state = model.states.state(rng.random_range(0..n));
    let rows = draw_rows(cfg.n_paths, cfg.n_rx, rng);
    let mut belief = match cfg.prior {
        InitialPrior::Known => Belief::point(n, state.index),
        InitialPrior::Uniform => Belief::uniform(n),
    };
    let mut cursor = policy.start(&state);
    let mut log = EpisodeLog {
        initial_state: Some(state.clone()),
        slots: Vec::with_capacity(cfg.horizon),
    };

    for slot in 1..=cfg.horizon {
        let action = cursor.choose(&belief, slot, rng);
        let expected = expected_reward(&belief, &action, model);
        state = step_state(&state, &model.transition, &model.states, rng);
        let channel = realize_channel(&state, &rows, cfg, rng);
        let sensed = sense_columns(&channel, &action, detector, cfg, rng);
        let reward = model.slot_reward(state.index, &action, sensed.observation.index());
        cursor.notify(&action, &sensed.observation);
        let next = update_belief(&belief, &action, &sensed.observation, model)?;
        log.slots.push(SlotRecord {
            state: state.clone(),
            action,
            observation: sensed.observation,
            reward,
            expected_reward: expected,
            belief_entropy: belief.entropy(),
            belief: opts.record_beliefs.then(|| belief.probs().to_vec()),
        });
        belief = next;
    }
    Ok(log)
}
