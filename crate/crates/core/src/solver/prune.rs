//! Removal of alpha vectors that are never strictly maximal.
//!
//! Two passes: pointwise dominance, then Lark's filter, which grows a set of
//! certainly-useful vectors and asks a linear program for a belief where each
//! remaining candidate beats all of them.

use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// A candidate survives when some belief prefers it by more than this.
pub const WITNESS_TOL: f64 = 1e-9;

/// Value vector over states tagged with the action (index) that earns it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Alpha {
    pub values: Vec<f64>,
    pub action: usize,
}

impl Alpha {
    #[inline]
    pub fn dot(&self, b: &[f64]) -> f64 {
        self.values.iter().zip(b).map(|(v, p)| v * p).sum()
    }

    /// Componentwise `self >= other`.
    #[inline]
    fn covers(&self, other: &Alpha) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

/// Wall-clock cutoff shared by every prune of one solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline {
    start: Instant,
    limit: Duration,
}

impl Deadline {
    pub fn new(limit: Duration) -> Self {
        Self {
            start: Instant::now(),
            limit,
        }
    }

    pub fn check(&self) -> Result<()> {
        let elapsed = self.start.elapsed();
        if elapsed > self.limit {
            return Err(Error::BudgetExceeded {
                what: "solve time (s)",
                needed: elapsed.as_secs_f64(),
                limit: self.limit.as_secs_f64(),
            });
        }
        Ok(())
    }
}

/// Drops every candidate that is componentwise covered by another one.
/// Among identical vectors the first one is kept, so feeding candidates in
/// action order keeps the lexicographically smallest action.
pub(crate) fn dominance_filter(candidates: Vec<Alpha>) -> Vec<Alpha> {
    let mut kept: Vec<Alpha> = Vec::with_capacity(candidates.len().min(1024));
    for v in candidates {
        if kept.iter().any(|k| k.covers(&v)) {
            continue;
        }
        kept.retain(|k| !v.covers(k));
        kept.push(v);
    }
    kept
}

/// Full prune: dominance pass followed by Lark's filter.
#[cfg(test)]
pub(crate) fn prune(candidates: Vec<Alpha>) -> Result<Vec<Alpha>> {
    prune_until(candidates, None)
}

/// [`prune`] that gives up once `deadline` has passed.
pub(crate) fn prune_until(candidates: Vec<Alpha>, deadline: Option<&Deadline>) -> Result<Vec<Alpha>> {
    let pool = dominance_filter(candidates);
    if pool.len() <= 1 {
        return Ok(pool);
    }
    let n = pool[0].values.len();
    let mut active = vec![true; pool.len()];
    let mut kept: Vec<usize> = Vec::new();

    // Seed with the best vector at each corner of the simplex.
    for s in 0..n {
        let best = best_at(&pool, &active, |a| a.values[s]);
        if let Some(i) = best {
            active[i] = false;
            kept.push(i);
        }
    }

    let mut cursor = 0;
    while cursor < pool.len() {
        if !active[cursor] {
            cursor += 1;
            continue;
        }
        if let Some(d) = deadline {
            d.check()?;
        }
        let kept_vecs: Vec<&Alpha> = kept.iter().map(|&i| &pool[i]).collect();
        match witness(&pool[cursor], &kept_vecs)? {
            Some(b) => {
                let w = best_at(&pool, &active, |a| a.dot(&b)).expect("cursor is active");
                active[w] = false;
                kept.push(w);
            }
            None => {
                active[cursor] = false;
                cursor += 1;
            }
        }
    }

    kept.sort_unstable();
    let mut pool: Vec<Option<Alpha>> = pool.into_iter().map(Some).collect();
    Ok(kept.into_iter().map(|i| pool[i].take().expect("kept once")).collect())
}

/// Index of the active vector with the highest score; ties go to the
/// smaller action, then to the earlier vector.
fn best_at(pool: &[Alpha], active: &[bool], score: impl Fn(&Alpha) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in pool.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let v = score(a);
        match best {
            Some((j, bv)) if v < bv || (v == bv && a.action >= pool[j].action) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Belief where `candidate` beats every vector of `against` by more than
/// [`WITNESS_TOL`], if one exists.
///
/// Solves `max d  s.t.  (candidate - k) . b >= d  for all k,  sum b = 1,  b >= 0`.
pub(crate) fn witness(candidate: &Alpha, against: &[&Alpha]) -> Result<Option<Vec<f64>>> {
    let n = candidate.values.len();
    if against.is_empty() {
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        return Ok(Some(b));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let b: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let margin = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    lp.add_constraint(b.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for k in against {
        let mut row: Vec<_> = b
            .iter()
            .zip(candidate.values.iter().zip(&k.values))
            .map(|(&v, (c, kv))| (v, c - kv))
            .filter(|&(_, coef)| coef != 0.0)
            .collect();
        row.push((margin, -1.0));
        lp.add_constraint(row, ComparisonOp::Ge, 0.0);
    }
    let sol = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    if sol.objective() <= WITNESS_TOL {
        return Ok(None);
    }
    let mut belief: Vec<f64> = b.iter().map(|&v| sol[v].max(0.0)).collect();
    let total: f64 = belief.iter().sum();
    belief.iter_mut().for_each(|p| *p /= total);
    Ok(Some(belief))
}
