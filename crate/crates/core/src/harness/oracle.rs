//! Exhaustive reference values for small models.
//!
//! Everything here works from the dense composite transition matrix and the
//! per-state observation law, without the tensor shortcuts or the alpha
//! vectors the solver uses, so agreement between the two is meaningful.

use crate::channel::composite_transition_prob;
use crate::error::{Error, Result};
use crate::model::PilotPomdp;
use crate::belief::Belief;
use crate::sensing::{count_bins, observation_prob, ObservationVector};

/// Cap on the number of decision-tree leaves (or action sequences) visited.
pub const ORACLE_BUDGET: f64 = 1e7;

/// Largest state count the dense oracle accepts.
pub const ORACLE_MAX_STATES: usize = 4096;

/// Value of the best first action and each action's own value.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRoot {
    pub value: f64,
    pub action_values: Vec<f64>,
}

impl OracleRoot {
    /// Index of the maximizing action if no other action is within `tol`.
    pub fn unique_best(&self, tol: f64) -> Option<usize> {
        let mut best = None;
        for (a, &v) in self.action_values.iter().enumerate() {
            if v >= self.value - tol {
                if best.is_some() {
                    return None;
                }
                best = Some(a);
            }
        }
        best
    }
}

struct Dense<'a> {
    model: &'a PilotPomdp,
    n: usize,
    /// Row-major `p[from * n + to]`.
    p: Vec<f64>,
    /// `q[(a * n_obs + o) * n + s]`.
    q: Vec<f64>,
    /// `r[(a * n_obs + o) * n + s]`.
    r: Vec<f64>,
}

impl<'a> Dense<'a> {
    fn new(model: &'a PilotPomdp) -> Result<Self> {
        let n = model.n_states();
        if n > ORACLE_MAX_STATES {
            return Err(Error::BudgetExceeded {
                what: "oracle state count",
                needed: n as f64,
                limit: ORACLE_MAX_STATES as f64,
            });
        }
        let states: Vec<_> = model.states.iter().collect();
        let mut p = vec![0.0; n * n];
        for (i, from) in states.iter().enumerate() {
            for (j, to) in states.iter().enumerate() {
                p[i * n + j] = composite_transition_prob(from, to, &model.transition);
            }
        }
        let n_obs = model.n_observations();
        let mut q = Vec::with_capacity(model.n_actions() * n_obs * n);
        let mut r = Vec::with_capacity(q.capacity());
        for action in model.actions.iter() {
            for o in 0..n_obs {
                let obs = ObservationVector::from_index(o, model.n_pilots());
                for s in 0..n {
                    q.push(observation_prob(&model.states, s, action, &obs, &model.detector));
                    let bins: usize = action
                        .cols()
                        .iter()
                        .zip(&obs.bits)
                        .filter(|(_, &b)| b)
                        .map(|(&c, _)| count_bins(&model.states, s, c))
                        .sum();
                    r.push(model.credit(bins));
                }
            }
        }
        Ok(Self { model, n, p, q, r })
    }

    fn predict(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &w) in pi.iter().enumerate() {
            if w != 0.0 {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += w * self.p[i * self.n + j];
                }
            }
        }
        out
    }

    fn block(&self, a: usize, o: usize) -> std::ops::Range<usize> {
        let start = (a * self.model.n_observations() + o) * self.n;
        start..start + self.n
    }

    /// Expected immediate reward of `a` given the post-transition law.
    fn immediate(&self, predicted: &[f64], a: usize) -> f64 {
        (0..self.model.n_observations())
            .map(|o| {
                let blk = self.block(a, o);
                predicted
                    .iter()
                    .zip(&self.q[blk.clone()])
                    .zip(&self.r[blk])
                    .map(|((p, q), r)| p * q * r)
                    .sum::<f64>()
            })
            .sum()
    }

    fn action_value(&self, pi: &[f64], a: usize, remaining: usize) -> f64 {
        let predicted = self.predict(pi);
        let mut total = self.immediate(&predicted, a);
        if remaining > 1 {
            for o in 0..self.model.n_observations() {
                let joint: Vec<f64> = predicted
                    .iter()
                    .zip(&self.q[self.block(a, o)])
                    .map(|(p, q)| p * q)
                    .collect();
                let gamma: f64 = joint.iter().sum();
                if gamma <= 0.0 {
                    continue;
                }
                let posterior: Vec<f64> = joint.iter().map(|x| x / gamma).collect();
                total += gamma * self.value(&posterior, remaining - 1);
            }
        }
        total
    }

    fn value(&self, pi: &[f64], remaining: usize) -> f64 {
        (0..self.model.n_actions())
            .map(|a| self.action_value(pi, a, remaining))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_budget(per_level: f64, horizon: usize, what: &'static str) -> Result<()> {
    let needed = per_level.powi(horizon as i32);
    if needed > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded {
            what,
            needed,
            limit: ORACLE_BUDGET,
        });
    }
    Ok(())
}

fn check_inputs(model: &PilotPomdp, belief: &Belief, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if belief.len() != model.n_states() {
        return Err(Error::InvalidArgument(format!(
            "belief has {} entries, model has {} states",
            belief.len(),
            model.n_states()
        )));
    }
    Ok(())
}

/// Optimal expected total reward over `horizon` slots from `belief`, by full
/// enumeration of the action/observation tree.
pub fn brute_force_value(model: &PilotPomdp, belief: &Belief, horizon: usize) -> Result<f64> {
    Ok(brute_force_root(model, belief, horizon)?.value)
}

/// [`brute_force_value`] with the value of every first action.
pub fn brute_force_root(model: &PilotPomdp, belief: &Belief, horizon: usize) -> Result<OracleRoot> {
    check_inputs(model, belief, horizon)?;
    check_budget(
        (model.n_actions() * model.n_observations()) as f64,
        horizon,
        "decision tree",
    )?;
    let dense = Dense::new(model)?;
    let action_values: Vec<f64> = (0..model.n_actions())
        .map(|a| dense.action_value(belief.probs(), a, horizon))
        .collect();
    let value = action_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OracleRoot { value, action_values })
}

/// Best total reward of a fixed action sequence when feedback is ignored and
/// the belief only follows the channel dynamics.
pub fn open_loop_value(model: &PilotPomdp, belief: &Belief, horizon: usize) -> Result<f64> {
    check_inputs(model, belief, horizon)?;
    check_budget(model.n_actions() as f64, horizon, "action sequences")?;
    let dense = Dense::new(model)?;
    let mut beliefs = Vec::with_capacity(horizon);
    let mut pi = belief.probs().to_vec();
    for _ in 0..horizon {
        pi = dense.predict(&pi);
        beliefs.push(pi.clone());
    }
    let mut best = f64::NEG_INFINITY;
    let mut seq = vec![0usize; horizon];
    loop {
        let total: f64 = seq
            .iter()
            .zip(&beliefs)
            .map(|(&a, predicted)| dense.immediate(predicted, a))
            .sum();
        best = best.max(total);
        // Odometer over action sequences.
        let mut k = 0;
        while k < horizon {
            seq[k] += 1;
            if seq[k] < model.n_actions() {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
        if k == horizon {
            return Ok(best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::expected_reward;
    use crate::channel::TransitionModel;
    use crate::sensing::DetectorModel;

    fn toy(d: Vec<f64>) -> PilotPomdp {
        PilotPomdp::new(
            1,
            1,
            TransitionModel::banded(3, 0.5, 1).unwrap(),
            DetectorModel::from_table(d).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn one_slot_is_best_immediate_reward() {
        let m = toy(vec![0.05, 0.9]);
        let b = Belief::new(vec![0.2, 0.5, 0.3]).unwrap();
        let direct = m
            .actions
            .iter()
            .map(|a| expected_reward(&b, a, &m))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((brute_force_value(&m, &b, 1).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn perfect_tracking_earns_every_slot() {
        let m = PilotPomdp::new(
            2,
            2,
            TransitionModel::identity(4),
            DetectorModel::perfect(2),
        )
        .unwrap();
        let s = m.states.index_of(&[1, 3]).unwrap();
        let v = brute_force_value(&m, &Belief::point(m.n_states(), s), 3).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn budget_guard_trips() {
        let m = toy(vec![0.05, 0.9]);
        let err = brute_force_value(&m, &Belief::uniform(3), 20).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn uninformative_feedback_reduces_to_open_loop() {
        let m = toy(vec![0.3, 0.3]);
        let b = Belief::new(vec![0.6, 0.1, 0.3]).unwrap();
        let closed = brute_force_value(&m, &b, 3).unwrap();
        let open = open_loop_value(&m, &b, 3).unwrap();
        assert!((closed - open).abs() < 1e-12);
    }

    #[test]
    fn unique_best_detects_ties() {
        let root = OracleRoot {
            value: 1.0,
            action_values: vec![1.0, 1.0 - 1e-15, 0.5],
        };
        assert_eq!(root.unique_best(1e-12), None);
        assert_eq!(root.unique_best(1e-16), Some(0));
    }
}
