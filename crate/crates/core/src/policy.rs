//! Pilot selection strategies behind one interface: the solved optimal
//! policy, greedy, uniform random, and the per-path heuristic tracker.

use rand::seq::index::sample;

use crate::belief::{expected_reward_vector, predict, Belief};
use crate::channel::{CompositeState, TransitionModel};
use crate::config::RewardKind;
use crate::model::PilotPomdp;
use crate::rng::SimRng;
use crate::sensing::{ActionVector, ObservationVector, ACTION_TIE_TOL};
use crate::solver::AlphaVectorSet;

/// A policy maps what the transmitter knows to the next pilot beams.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    /// Per-episode state. `initial` is the true state at the episode start;
    /// only policies that assume a known initial state may look at it.
    fn start(&self, initial: &CompositeState) -> Box<dyn PolicyCursor + '_>;
}

pub trait PolicyCursor {
    /// Action for slot `slot` (1-based) given the current belief.
    fn choose(&mut self, belief: &Belief, slot: usize, rng: &mut SimRng) -> ActionVector;

    fn notify(&mut self, _action: &ActionVector, _obs: &ObservationVector) {}
}

// ---------------------------------------------------------------------------
// Optimal
// ---------------------------------------------------------------------------

pub struct OptimalPolicy {
    set: AlphaVectorSet,
}

impl OptimalPolicy {
    pub fn new(set: AlphaVectorSet) -> Self {
        Self { set }
    }

    pub fn alpha_vectors(&self) -> &AlphaVectorSet {
        &self.set
    }
}

impl Policy for OptimalPolicy {
    fn name(&self) -> &str {
        "optimal"
    }

    fn start(&self, _initial: &CompositeState) -> Box<dyn PolicyCursor + '_> {
        Box::new(OptimalCursor { set: &self.set })
    }
}

struct OptimalCursor<'a> {
    set: &'a AlphaVectorSet,
}

impl PolicyCursor for OptimalCursor<'_> {
    fn choose(&mut self, belief: &Belief, slot: usize, _rng: &mut SimRng) -> ActionVector {
        self.set.optimal_action(belief, slot).clone()
    }
}

/// Action of the maximizing alpha vector for slot `k`.
pub fn optimal_action(belief: &Belief, k: usize, set: &AlphaVectorSet) -> ActionVector {
    set.optimal_action(belief, k).clone()
}

// ---------------------------------------------------------------------------
// Greedy
// ---------------------------------------------------------------------------

/// Maximizes the immediate expected reward `<R(a), pi>` only.
pub struct GreedyPolicy<'a> {
    model: &'a PilotPomdp,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(model: &'a PilotPomdp) -> Self {
        Self { model }
    }
}

impl Policy for GreedyPolicy<'_> {
    fn name(&self) -> &str {
        "greedy"
    }

    fn start(&self, _initial: &CompositeState) -> Box<dyn PolicyCursor + '_> {
        Box::new(GreedyCursor { model: self.model })
    }
}

struct GreedyCursor<'a> {
    model: &'a PilotPomdp,
}

impl PolicyCursor for GreedyCursor<'_> {
    fn choose(&mut self, belief: &Belief, _slot: usize, _rng: &mut SimRng) -> ActionVector {
        greedy_action(belief, self.model)
    }
}

/// `argmax_a <R(a), pi>`, near-ties to the lexicographically smallest action.
///
/// With the path-count reward the objective is a sum of per-column expected
/// detected-bin counts, so the maximizer takes the best `n_pilots` columns.
/// Other rewards fall back to [`greedy_by_enumeration`].
pub fn greedy_action(belief: &Belief, model: &PilotPomdp) -> ActionVector {
    if model.reward != RewardKind::Paths {
        return greedy_by_enumeration(belief, model);
    }
    let scores = column_scores(belief, model);
    let cols = smallest_best_subset(&scores, model.n_pilots());
    ActionVector::new(cols, model.states.n_tx()).expect("distinct in-range columns")
}

/// Expected detected bins per column after the transition.
pub fn column_scores(belief: &Belief, model: &PilotPomdp) -> Vec<f64> {
    let predicted = predict(belief, model);
    let mut scores = vec![0.0; model.states.n_tx()];
    for (s, &p) in predicted.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for &c in model.states.cols_of(s) {
            let c = c as usize;
            // one credit per path; k paths share d(k)
            let k = model.states.paths_in_column(s, c);
            scores[c] += p * model.detector.detection(k);
        }
    }
    scores
}

/// Lexicographically smallest `size`-subset whose score sum is within
/// [`ACTION_TIE_TOL`] of the best possible sum.
fn smallest_best_subset(scores: &[f64], size: usize) -> Vec<usize> {
    let top_sum = |from: usize, count: usize| -> f64 {
        let mut rest: Vec<f64> = scores[from..].to_vec();
        rest.sort_unstable_by(|a, b| b.total_cmp(a));
        rest.iter().take(count).sum()
    };
    let target = top_sum(0, size) - ACTION_TIE_TOL;
    let mut chosen = Vec::with_capacity(size);
    let mut acc = 0.0;
    let mut start = 0;
    for pos in 0..size {
        let remaining = size - pos - 1;
        let c = (start..scores.len() - remaining)
            .find(|&c| acc + scores[c] + top_sum(c + 1, remaining) >= target)
            .expect("the top columns always qualify");
        chosen.push(c);
        acc += scores[c];
        start = c + 1;
    }
    chosen
}

/// Greedy action by scoring every action.
pub fn greedy_by_enumeration(belief: &Belief, model: &PilotPomdp) -> ActionVector {
    let values: Vec<f64> = model
        .actions
        .iter()
        .map(|a| belief.dot(&expected_reward_vector(a, model)))
        .collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = values
        .iter()
        .position(|&v| v >= max - ACTION_TIE_TOL)
        .expect("nonempty action space");
    model.action(best).clone()
}

// ---------------------------------------------------------------------------
// Random
// ---------------------------------------------------------------------------

/// Uniform over all `C(n_tx, n_pilots)` actions every slot.
pub struct RandomPolicy {
    n_tx: usize,
    n_pilots: usize,
}

impl RandomPolicy {
    pub fn new(n_tx: usize, n_pilots: usize) -> Self {
        Self { n_tx, n_pilots }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn start(&self, _initial: &CompositeState) -> Box<dyn PolicyCursor + '_> {
        Box::new(RandomCursor {
            n_tx: self.n_tx,
            n_pilots: self.n_pilots,
        })
    }
}

struct RandomCursor {
    n_tx: usize,
    n_pilots: usize,
}

impl PolicyCursor for RandomCursor {
    fn choose(&mut self, _belief: &Belief, _slot: usize, rng: &mut SimRng) -> ActionVector {
        random_action(self.n_tx, self.n_pilots, rng)
    }
}

pub fn random_action(n_tx: usize, n_pilots: usize, rng: &mut SimRng) -> ActionVector {
    let cols = sample(rng, n_tx, n_pilots).into_vec();
    ActionVector::new(cols, n_tx).expect("sampled distinct columns")
}

// ---------------------------------------------------------------------------
// Heuristic tracker
// ---------------------------------------------------------------------------

/// Splits the pilots evenly among the paths and follows each path with the
/// most probable next columns of its last detection. A path that goes
/// undetected keeps its pilot columns. Needs the initial columns.
pub struct TrackerPolicy {
    transition: TransitionModel,
    n_paths: usize,
    n_pilots: usize,
}

impl TrackerPolicy {
    pub fn new(transition: TransitionModel, n_paths: usize, n_pilots: usize) -> Self {
        assert!(
            n_paths >= 1 && n_pilots >= n_paths && n_pilots <= transition.n_tx(),
            "tracker needs n_paths <= n_pilots <= n_tx"
        );
        Self {
            transition,
            n_paths,
            n_pilots,
        }
    }

    /// Pilots assigned to `path`; leftovers go to the first paths.
    fn share(&self, path: usize) -> usize {
        self.n_pilots / self.n_paths + usize::from(path < self.n_pilots % self.n_paths)
    }

    /// Columns ordered by `p(center, j)` descending, then `|j - center|`,
    /// then `j`.
    pub fn ranking(&self, center: usize) -> Vec<usize> {
        let mut cols: Vec<usize> = (0..self.transition.n_tx()).collect();
        cols.sort_by(|&a, &b| {
            self.transition
                .prob(center, b)
                .total_cmp(&self.transition.prob(center, a))
                .then(a.abs_diff(center).cmp(&b.abs_diff(center)))
                .then(a.cmp(&b))
        });
        cols
    }

    fn cursor(&self, initial_cols: &[usize]) -> TrackerCursor<'_> {
        let mut cursor = TrackerCursor {
            policy: self,
            centers: initial_cols.to_vec(),
            groups: vec![Vec::new(); self.n_paths],
        };
        cursor.reallocate(&vec![true; self.n_paths]);
        cursor
    }
}

impl Policy for TrackerPolicy {
    fn name(&self) -> &str {
        "tracker"
    }

    fn start(&self, initial: &CompositeState) -> Box<dyn PolicyCursor + '_> {
        Box::new(self.cursor(&initial.cols))
    }
}

struct TrackerCursor<'a> {
    policy: &'a TrackerPolicy,
    /// Last detected column per path.
    centers: Vec<usize>,
    /// Pilot columns per path, disjoint.
    groups: Vec<Vec<usize>>,
}

impl TrackerCursor<'_> {
    fn action(&self) -> ActionVector {
        let cols: Vec<usize> = self.groups.iter().flatten().copied().collect();
        ActionVector::new(cols, self.policy.transition.n_tx()).expect("groups are disjoint")
    }

    /// Missed paths keep their columns; detected paths take the best-ranked
    /// free columns around their new center, in path order.
    fn reallocate(&mut self, detected: &[bool]) {
        let mut taken = vec![false; self.policy.transition.n_tx()];
        for (path, group) in self.groups.iter().enumerate() {
            if !detected[path] {
                group.iter().for_each(|&c| taken[c] = true);
            }
        }
        for path in (0..self.groups.len()).filter(|&p| detected[p]) {
            let share = self.policy.share(path);
            let group: Vec<usize> = self
                .policy
                .ranking(self.centers[path])
                .into_iter()
                .filter(|&c| !taken[c])
                .take(share)
                .collect();
            group.iter().for_each(|&c| taken[c] = true);
            self.groups[path] = group;
        }
    }
}

impl PolicyCursor for TrackerCursor<'_> {
    fn choose(&mut self, _belief: &Belief, _slot: usize, _rng: &mut SimRng) -> ActionVector {
        self.action()
    }

    fn notify(&mut self, action: &ActionVector, obs: &ObservationVector) {
        let fired: Vec<usize> = action
            .cols()
            .iter()
            .zip(&obs.bits)
            .filter(|(_, &b)| b)
            .map(|(&c, _)| c)
            .collect();
        let mut detected = vec![false; self.groups.len()];
        for (path, group) in self.groups.iter().enumerate() {
            let center = self.centers[path];
            // the most plausible fired column of this path's group
            let hit = self
                .policy
                .ranking(center)
                .into_iter()
                .find(|c| group.contains(c) && fired.contains(c));
            if let Some(c) = hit {
                self.centers[path] = c;
                detected[path] = true;
            }
        }
        if detected.iter().any(|&d| d) {
            self.reallocate(&detected);
        }
    }
}
