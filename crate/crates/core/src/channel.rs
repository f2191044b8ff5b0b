//! Sparse virtual-channel state space and its Markov random-walk dynamics.
//!
//! Columns (AoD bins) and rows (AoA bins) are 0-based throughout the crate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::ChannelConfig;
use crate::error::{Error, Result};

/// Largest composite state space the crate will enumerate.
pub const MAX_STATES: usize = 10_000_000;

/// Row-stochastic tolerance accepted by [`TransitionModel::from_rows`].
const ROW_SUM_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Single-path transition matrix
// ---------------------------------------------------------------------------

/// Single-path column transition matrix `p[i][j] = Pr{col' = j | col = i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    n_tx: usize,
    /// Row-major `n_tx * n_tx`.
    p: Vec<f64>,
    /// Largest `|i - j|` with a nonzero entry.
    reach: usize,
}

impl TransitionModel {
    /// Banded random walk: interior rows are `alpha * beta^|i-j|` for
    /// `|i-j| <= band`, with `alpha` normalizing the full band to one. Mass
    /// that would land outside `0..n_tx` is added to the boundary column on
    /// that side.
    pub fn banded(n_tx: usize, beta: f64, band: usize) -> Result<Self> {
        if n_tx == 0 {
            return Err(Error::InvalidArgument("n_tx must be positive".into()));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in [0, 1), got {beta}"
            )));
        }
        if band >= n_tx {
            return Err(Error::InvalidArgument(format!(
                "band {band} must be below n_tx {n_tx}"
            )));
        }
        let alpha = banded_alpha(beta, band);
        let mut p = vec![0.0; n_tx * n_tx];
        let last = n_tx as isize - 1;
        for i in 0..n_tx {
            for d in -(band as isize)..=(band as isize) {
                let j = (i as isize + d).clamp(0, last) as usize;
                p[i * n_tx + j] += alpha * beta.powi(d.unsigned_abs() as i32);
            }
        }
        let reach = if beta == 0.0 { 0 } else { band };
        Ok(Self { n_tx, p, reach })
    }

    pub fn identity(n_tx: usize) -> Self {
        let mut p = vec![0.0; n_tx * n_tx];
        for i in 0..n_tx {
            p[i * n_tx + i] = 1.0;
        }
        Self { n_tx, p, reach: 0 }
    }

    /// Arbitrary row-stochastic matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_tx = rows.len();
        if n_tx == 0 {
            return Err(Error::InvalidArgument("empty transition matrix".into()));
        }
        let mut p = Vec::with_capacity(n_tx * n_tx);
        let mut reach = 0;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_tx {
                return Err(Error::InvalidArgument("transition matrix must be square".into()));
            }
            if row.iter().any(|&x| x.is_nan() || x < 0.0) {
                return Err(Error::InvalidArgument(format!("row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!("row {i} sums to {s}")));
            }
            for (j, &x) in row.iter().enumerate() {
                if x > 0.0 {
                    reach = reach.max(i.abs_diff(j));
                }
            }
            p.extend_from_slice(row);
        }
        Ok(Self { n_tx, p, reach })
    }

    pub fn from_config(cfg: &ChannelConfig) -> Result<Self> {
        Self::banded(cfg.n_tx, cfg.beta, cfg.band)
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Largest column jump with nonzero probability.
    pub fn reach(&self) -> usize {
        self.reach
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.n_tx + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[f64] {
        &self.p[from * self.n_tx..(from + 1) * self.n_tx]
    }

    /// Columns reachable from `from` in one step, as a half-open range.
    #[inline]
    pub(crate) fn support(&self, from: usize) -> std::ops::Range<usize> {
        from.saturating_sub(self.reach)..(from + self.reach + 1).min(self.n_tx)
    }

    /// Draws the next column of a single path.
    pub fn sample_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let support = self.support(from);
        let last = support.end - 1;
        for j in support {
            acc += self.prob(from, j);
            if u < acc {
                return j;
            }
        }
        last
    }
}

/// Diagonal weight of an interior banded row, `1 / (1 + 2 sum_{d=1..band} beta^d)`.
pub fn banded_alpha(beta: f64, band: usize) -> f64 {
    let tail: f64 = (1..=band).map(|d| beta.powi(d as i32)).sum();
    1.0 / (1.0 + 2.0 * tail)
}

// ---------------------------------------------------------------------------
// Composite states
// ---------------------------------------------------------------------------

/// One column per path. Paths may share a column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositeState {
    pub index: usize,
    pub cols: Vec<usize>,
}

/// Mixed-radix enumeration of all `n_tx^n_paths` composite states; path 0
/// is the most significant digit.
#[derive(Debug, Clone)]
pub struct StateSpace {
    n_tx: usize,
    n_paths: usize,
    len: usize,
    /// Flattened `len * n_paths` column table.
    cols: Vec<u16>,
}

impl StateSpace {
    pub fn new(n_tx: usize, n_paths: usize) -> Result<Self> {
        if n_tx == 0 || n_paths == 0 {
            return Err(Error::InvalidArgument("n_tx and n_paths must be positive".into()));
        }
        if n_tx > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!("n_tx {n_tx} too large")));
        }
        let too_large = Error::StateSpaceTooLarge {
            n_tx,
            n_paths,
            limit: MAX_STATES,
        };
        let len = u32::try_from(n_paths)
            .ok()
            .and_then(|l| n_tx.checked_pow(l))
            .filter(|&n| n <= MAX_STATES)
            .ok_or(too_large)?;
        let mut cols = vec![0u16; len * n_paths];
        for s in 0..len {
            let mut rem = s;
            for l in (0..n_paths).rev() {
                cols[s * n_paths + l] = (rem % n_tx) as u16;
                rem /= n_tx;
            }
        }
        Ok(Self {
            n_tx,
            n_paths,
            len,
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    #[inline]
    pub fn cols_of(&self, index: usize) -> &[u16] {
        &self.cols[index * self.n_paths..(index + 1) * self.n_paths]
    }

    pub fn index_of(&self, cols: &[usize]) -> Result<usize> {
        if cols.len() != self.n_paths || cols.iter().any(|&c| c >= self.n_tx) {
            return Err(Error::InvalidArgument(format!(
                "{cols:?} is not a state of {} paths over {} columns",
                self.n_paths, self.n_tx
            )));
        }
        Ok(cols.iter().fold(0, |acc, &c| acc * self.n_tx + c))
    }

    pub fn state(&self, index: usize) -> CompositeState {
        CompositeState {
            index,
            cols: self.cols_of(index).iter().map(|&c| c as usize).collect(),
        }
    }

    pub fn state_of(&self, cols: &[usize]) -> Result<CompositeState> {
        Ok(CompositeState {
            index: self.index_of(cols)?,
            cols: cols.to_vec(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = CompositeState> + '_ {
        (0..self.len).map(|i| self.state(i))
    }

    /// Number of paths of state `index` sitting in column `col`.
    #[inline]
    pub fn paths_in_column(&self, index: usize, col: usize) -> usize {
        self.cols_of(index).iter().filter(|&&c| c as usize == col).count()
    }

    /// Stride of path `l` in the mixed-radix index.
    #[inline]
    pub(crate) fn stride(&self, path: usize) -> usize {
        self.n_tx.pow((self.n_paths - 1 - path) as u32)
    }

    /// Forward step of a distribution: `out = v * (P ⊗ ... ⊗ P)`.
    ///
    /// Applies the single-path matrix along one tensor axis at a time, so the
    /// composite matrix is never formed.
    pub fn push_forward(&self, tm: &TransitionModel, v: &[f64]) -> Vec<f64> {
        self.apply(tm, v, false)
    }

    /// Backward step of a value vector: `out = (P ⊗ ... ⊗ P) * v`.
    pub fn pull_back(&self, tm: &TransitionModel, v: &[f64]) -> Vec<f64> {
        self.apply(tm, v, true)
    }

    fn apply(&self, tm: &TransitionModel, v: &[f64], backward: bool) -> Vec<f64> {
        assert_eq!(v.len(), self.len, "vector length must match the state space");
        assert_eq!(tm.n_tx(), self.n_tx, "transition model size mismatch");
        let n = self.n_tx;
        let mut cur = v.to_vec();
        let mut next = vec![0.0; self.len];
        for path in 0..self.n_paths {
            let stride = self.stride(path);
            let block = n * stride;
            next.iter_mut().for_each(|x| *x = 0.0);
            for base in (0..self.len).step_by(block) {
                for i in 0..n {
                    for j in tm.support(i) {
                        let p = tm.prob(i, j);
                        if p == 0.0 {
                            continue;
                        }
                        let (dst, src) = if backward { (i, j) } else { (j, i) };
                        let d0 = base + dst * stride;
                        let s0 = base + src * stride;
                        for r in 0..stride {
                            next[d0 + r] += p * cur[s0 + r];
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

/// Probability of moving between two composite states: the product of the
/// per-path transition probabilities.
pub fn composite_transition_prob(
    from: &CompositeState,
    to: &CompositeState,
    tm: &TransitionModel,
) -> f64 {
    from.cols
        .iter()
        .zip(&to.cols)
        .map(|(&i, &j)| tm.prob(i, j))
        .product()
}

/// Moves every path independently one step along its random walk.
pub fn step_state<R: Rng + ?Sized>(
    state: &CompositeState,
    tm: &TransitionModel,
    space: &StateSpace,
    rng: &mut R,
) -> CompositeState {
    let cols: Vec<usize> = state.cols.iter().map(|&c| tm.sample_next(c, rng)).collect();
    let index = cols.iter().fold(0, |acc, &c| acc * space.n_tx() + c);
    CompositeState { index, cols }
}

// ---------------------------------------------------------------------------
// Channel realizations
// ---------------------------------------------------------------------------

/// The channel during one slot: path locations plus this slot's gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub state: CompositeState,
    /// AoA row per path, fixed for the episode.
    pub rows: Vec<usize>,
    /// Complex gain per path, redrawn every slot.
    pub gains: Vec<Complex64>,
}

/// Dense `n_rx x n_tx` virtual channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualChannel {
    n_rx: usize,
    n_tx: usize,
    entries: Vec<Complex64>,
}

impl VirtualChannel {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n_tx + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n_rx).map(move |r| self.get(r, col))
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count()
    }

    /// Nonzero entries of a column (its L0 norm).
    pub fn column_support(&self, col: usize) -> usize {
        self.column(col).filter(|z| *z != Complex64::new(0.0, 0.0)).count()
    }
}

impl ChannelRealization {
    /// Number of distinct nonzero bins in `col`. Paths colliding in the same
    /// (row, col) bin count once.
    pub fn bins_in_column(&self, col: usize) -> usize {
        let mut rows: Vec<usize> = self
            .state
            .cols
            .iter()
            .zip(&self.rows)
            .filter(|(&c, _)| c == col)
            .map(|(_, &r)| r)
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows.len()
    }

    /// Combined gain of each path in `col`, keyed by row. Colliding paths add.
    pub fn column_gains(&self, col: usize) -> Vec<(usize, Complex64)> {
        let mut out: Vec<(usize, Complex64)> = Vec::new();
        for ((&c, &r), &g) in self.state.cols.iter().zip(&self.rows).zip(&self.gains) {
            if c != col {
                continue;
            }
            match out.iter_mut().find(|(row, _)| *row == r) {
                Some((_, acc)) => *acc += g,
                None => out.push((r, g)),
            }
        }
        out
    }

    pub fn matrix(&self, n_rx: usize, n_tx: usize) -> VirtualChannel {
        let mut entries = vec![Complex64::new(0.0, 0.0); n_rx * n_tx];
        for ((&c, &r), &g) in self.state.cols.iter().zip(&self.rows).zip(&self.gains) {
            entries[r * n_tx + c] += g;
        }
        VirtualChannel { n_rx, n_tx, entries }
    }
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Uniform i.i.d. AoA rows, one per path.
pub fn draw_rows<R: Rng + ?Sized>(n_paths: usize, n_rx: usize, rng: &mut R) -> Vec<usize> {
    (0..n_paths).map(|_| rng.random_range(0..n_rx)).collect()
}

/// Draws this slot's gains for the paths at `state` and `rows`.
pub fn realize_channel<R: Rng + ?Sized>(
    state: &CompositeState,
    rows: &[usize],
    cfg: &ChannelConfig,
    rng: &mut R,
) -> ChannelRealization {
    debug_assert_eq!(rows.len(), state.cols.len());
    let gains = (0..state.cols.len())
        .map(|_| complex_gaussian(cfg.gain_var, rng))
        .collect();
    ChannelRealization {
        state: state.clone(),
        rows: rows.to_vec(),
        gains,
    }
}
