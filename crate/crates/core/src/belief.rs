//! Belief filtering over composite states and the immediate expected reward.
//!
//! A belief is the distribution of the state at the start of a slot, before
//! that slot's transition. After acting and observing, the posterior over
//! the post-transition state becomes the next slot's belief.

use crate::error::{Error, Result};
use crate::model::PilotPomdp;
use crate::sensing::{ActionVector, ObservationVector};

/// Tolerance on `sum(probs) == 1` accepted by [`Belief::new`].
pub const BELIEF_SUM_TOL: f64 = 1e-10;

/// Bayes denominators below this are treated as impossible observations.
pub const MIN_MARGINAL: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty belief".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidArgument("belief has a negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > BELIEF_SUM_TOL {
            return Err(Error::InvalidArgument(format!("belief sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Scales a nonnegative weight vector to a belief.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 || weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::InvalidArgument("weights must be nonnegative with positive sum".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { probs: weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, state: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[state] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.probs.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }

    /// Most probable state, lowest index on ties.
    pub fn mode(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }
}

/// Distribution of the post-transition state.
pub fn predict(belief: &Belief, model: &PilotPomdp) -> Belief {
    Belief {
        probs: model.states.push_forward(&model.transition, belief.probs()),
    }
}

/// Unnormalized posterior `q(o | s', a) * (pi P)(s')` and its sum.
fn joint(predicted: &[f64], action: &ActionVector, obs: usize, model: &PilotPomdp) -> (Vec<f64>, f64) {
    let weights: Vec<f64> = predicted
        .iter()
        .enumerate()
        .map(|(s, &p)| if p == 0.0 { 0.0 } else { p * model.obs_prob(s, action, obs) })
        .collect();
    let total = weights.iter().sum();
    (weights, total)
}

/// Probability of observing `obs` after taking `action` from `belief`.
pub fn observation_marginal(
    belief: &Belief,
    action: &ActionVector,
    obs: &ObservationVector,
    model: &PilotPomdp,
) -> f64 {
    let predicted = predict(belief, model);
    joint(predicted.probs(), action, obs.index(), model).1
}

/// Bayes update of the belief after `action` and feedback `obs`.
pub fn update_belief(
    belief: &Belief,
    action: &ActionVector,
    obs: &ObservationVector,
    model: &PilotPomdp,
) -> Result<Belief> {
    let predicted = predict(belief, model);
    condition(&predicted, action, obs.index(), model)
}

/// Conditions an already predicted belief on an observation index.
pub fn condition(predicted: &Belief, action: &ActionVector, obs: usize, model: &PilotPomdp) -> Result<Belief> {
    let (mut weights, total) = joint(predicted.probs(), action, obs, model);
    if total.is_nan() || total < MIN_MARGINAL {
        return Err(Error::ZeroProbabilityObservation { marginal: total });
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Belief { probs: weights })
}

/// Expected reward of `action` in each post-transition state:
/// `sum_o q(o | s', a) r(s', a, o)`.
///
/// For the path-count reward this collapses, by linearity over independent
/// columns, to `sum_m k_m d(k_m)`.
pub fn post_transition_reward(action: &ActionVector, model: &PilotPomdp) -> Vec<f64> {
    use crate::config::RewardKind;
    match model.reward {
        RewardKind::Paths => (0..model.n_states())
            .map(|s| {
                model
                    .column_counts(s, action)
                    .map(|k| k as f64 * model.detector.detection(k))
                    .sum()
            })
            .collect(),
        RewardKind::Mrc => (0..model.n_states())
            .map(|s| {
                (0..model.n_observations())
                    .map(|o| model.obs_prob(s, action, o) * model.slot_reward(s, action, o))
                    .sum()
            })
            .collect(),
    }
}

/// `R(a)`: immediate expected reward of `action` for each pre-transition state.
pub fn expected_reward_vector(action: &ActionVector, model: &PilotPomdp) -> Vec<f64> {
    model
        .states
        .pull_back(&model.transition, &post_transition_reward(action, model))
}

/// `<R(a), pi>`.
pub fn expected_reward(belief: &Belief, action: &ActionVector, model: &PilotPomdp) -> f64 {
    belief.dot(&expected_reward_vector(action, model))
}
