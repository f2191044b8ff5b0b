//! Exact finite-horizon value iteration over alpha vectors.
//!
//! `V^k(pi) = max_a { <R(a), pi> + sum_o gamma(o | pi, a) V^{k+1}(T(pi | o, a)) }`
//! is piecewise-linear and convex in the belief, so each slot's value is the
//! upper envelope of a finite set of vectors. The backup builds, per action
//! and observation, the projected vectors
//! `g(s) = sum_s' p(s, s') q(o | s', a) (r(s', a, o) + alpha(s'))`,
//! cross-sums them over observations with a prune after every fold
//! (incremental pruning), and finally prunes the union over actions.

mod alpha;
mod prune;

use std::time::Duration;

use rayon::prelude::*;

pub use alpha::{AlphaVector, AlphaVectorSet, POLICY_FORMAT_VERSION};
pub use prune::WITNESS_TOL;

use crate::belief::expected_reward_vector;
use crate::error::{Error, Result};
use crate::model::PilotPomdp;
use prune::{prune_until, Alpha, Deadline};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Cap on `|A| * |O| * |Gamma_{k+1}|` for a single backup stage.
    pub stage_budget: f64,
    /// Cap on the size of a single unpruned cross-sum.
    pub max_cross_sum: usize,
    /// Wall-clock limit for the whole solve.
    pub time_limit: Option<Duration>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            stage_budget: 1e8,
            max_cross_sum: 20_000_000,
            time_limit: None,
        }
    }
}

/// Backward induction from slot `horizon` to slot 1.
pub fn solve_finite_horizon(model: &PilotPomdp, horizon: usize) -> Result<AlphaVectorSet> {
    solve_with(model, horizon, &SolverOptions::default(), |_, _| {})
}

/// [`solve_finite_horizon`] with explicit limits and a callback invoked as
/// `(slot, vectors kept)` after each stage.
pub fn solve_with(
    model: &PilotPomdp,
    horizon: usize,
    opts: &SolverOptions,
    mut progress: impl FnMut(usize, usize),
) -> Result<AlphaVectorSet> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let deadline = opts.time_limit.map(Deadline::new);
    let deadline = deadline.as_ref();
    // Last slot: immediate reward only.
    let terminal: Vec<Alpha> = model
        .actions
        .iter()
        .enumerate()
        .map(|(a, action)| Alpha {
            values: expected_reward_vector(action, model),
            action: a,
        })
        .collect();
    let mut next = prune_until(terminal, deadline)?;
    progress(horizon, next.len());
    let mut slots = vec![next.clone()];

    for slot in (1..horizon).rev() {
        let needed = (model.n_actions() * model.n_observations() * next.len()) as f64;
        if needed > opts.stage_budget {
            return Err(Error::BudgetExceeded {
                what: "backup stage",
                needed,
                limit: opts.stage_budget,
            });
        }
        let per_action: Vec<Vec<Alpha>> = (0..model.n_actions())
            .into_par_iter()
            .map(|a| backup_action(model, a, &next, opts, deadline))
            .collect::<Result<_>>()?;
        let union: Vec<Alpha> = per_action.into_iter().flatten().collect();
        next = prune_until(union, deadline)?;
        progress(slot, next.len());
        slots.push(next.clone());
    }
    slots.reverse();
    Ok(AlphaVectorSet::from_solver(model, slots))
}

fn backup_action(
    model: &PilotPomdp,
    a: usize,
    next: &[Alpha],
    opts: &SolverOptions,
    deadline: Option<&Deadline>,
) -> Result<Vec<Alpha>> {
    let action = model.action(a);
    let n = model.n_states();
    let mut acc: Option<Vec<Alpha>> = None;
    for o in 0..model.n_observations() {
        let q: Vec<f64> = (0..n).map(|s| model.obs_prob(s, action, o)).collect();
        if q.iter().all(|&x| x == 0.0) {
            continue;
        }
        let r: Vec<f64> = (0..n).map(|s| model.slot_reward(s, action, o)).collect();
        let projected: Vec<Alpha> = next
            .iter()
            .map(|alpha| {
                let weighted: Vec<f64> = (0..n).map(|s| q[s] * (r[s] + alpha.values[s])).collect();
                Alpha {
                    values: model.states.pull_back(&model.transition, &weighted),
                    action: a,
                }
            })
            .collect();
        let projected = prune_until(projected, deadline)?;
        acc = Some(match acc {
            None => projected,
            Some(prev) => {
                let size = prev.len() * projected.len();
                if size > opts.max_cross_sum {
                    return Err(Error::BudgetExceeded {
                        what: "cross-sum",
                        needed: size as f64,
                        limit: opts.max_cross_sum as f64,
                    });
                }
                let mut sum = Vec::with_capacity(size);
                for x in &prev {
                    for y in &projected {
                        sum.push(Alpha {
                            values: x.values.iter().zip(&y.values).map(|(u, v)| u + v).collect(),
                            action: a,
                        });
                    }
                }
                prune_until(sum, deadline)?
            }
        });
    }
    Ok(acc.unwrap_or_default())
}
