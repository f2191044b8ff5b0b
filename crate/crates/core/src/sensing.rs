//! Pilot sensing: actions, binary feedback, the column detector and the
//! observation kernel shared by the simulator and the belief filter.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelRealization, StateSpace};
use crate::config::{ChannelConfig, DEFAULT_FALSE_ALARM};
use crate::error::{Error, Result};

/// Largest action space the crate will enumerate.
pub const MAX_ACTIONS: usize = 1_000_000;

/// Actions whose values differ by at most this count as tied; ties go to the
/// lexicographically smallest action.
pub const ACTION_TIE_TOL: f64 = 1e-12;

/// Widest pilot vector supported by the bitmask observation encoding.
pub const MAX_PILOTS: usize = 20;

// ---------------------------------------------------------------------------
// Actions and observations
// ---------------------------------------------------------------------------

/// Pilot beam sequence: `n_pilots` distinct columns in ascending order.
///
/// The derived `Ord` is the lexicographic order used for every tie-break.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionVector {
    cols: Vec<usize>,
}

impl ActionVector {
    /// Canonicalizes (sorts) `cols`; rejects duplicates and out-of-range
    /// columns.
    pub fn new(mut cols: Vec<usize>, n_tx: usize) -> Result<Self> {
        cols.sort_unstable();
        if cols.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("repeated column in {cols:?}")));
        }
        if cols.last().is_some_and(|&c| c >= n_tx) {
            return Err(Error::InvalidArgument(format!(
                "column out of range 0..{n_tx} in {cols:?}"
            )));
        }
        if cols.is_empty() {
            return Err(Error::InvalidArgument("empty action".into()));
        }
        Ok(Self { cols })
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn contains(&self, col: usize) -> bool {
        self.cols.binary_search(&col).is_ok()
    }
}

impl std::fmt::Display for ActionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.cols.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Per-pilot detection flags; `bits[m]` belongs to the `m`-th column of the
/// action. The observation index sets bit `m` for `bits[m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationVector {
    pub bits: Vec<bool>,
}

impl ObservationVector {
    pub fn from_index(index: usize, n_pilots: usize) -> Self {
        Self {
            bits: (0..n_pilots).map(|m| index >> m & 1 == 1).collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (m, &b)| acc | (usize::from(b) << m))
    }

    pub fn detections(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// All `C(n_tx, n_pilots)` actions in lexicographic order, so action index
/// order and action order agree.
#[derive(Debug, Clone)]
pub struct ActionSpace {
    n_tx: usize,
    n_pilots: usize,
    actions: Vec<ActionVector>,
}

impl ActionSpace {
    pub fn new(n_tx: usize, n_pilots: usize) -> Result<Self> {
        if n_pilots == 0 || n_pilots > n_tx {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= n_pilots <= n_tx, got {n_pilots} and {n_tx}"
            )));
        }
        if n_pilots > MAX_PILOTS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_PILOTS} pilots per slot are supported"
            )));
        }
        let count = binomial(n_tx, n_pilots);
        if count > MAX_ACTIONS as f64 {
            return Err(Error::BudgetExceeded {
                what: "action space",
                needed: count,
                limit: MAX_ACTIONS as f64,
            });
        }
        let mut actions = Vec::with_capacity(count as usize);
        let mut cur: Vec<usize> = (0..n_pilots).collect();
        loop {
            actions.push(ActionVector { cols: cur.clone() });
            // advance to the next combination in lexicographic order
            let Some(pos) = (0..n_pilots).rev().find(|&i| cur[i] < n_tx - n_pilots + i) else {
                break;
            };
            cur[pos] += 1;
            for i in pos + 1..n_pilots {
                cur[i] = cur[i - 1] + 1;
            }
        }
        Ok(Self {
            n_tx,
            n_pilots,
            actions,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_pilots(&self) -> usize {
        self.n_pilots
    }

    pub fn n_observations(&self) -> usize {
        1 << self.n_pilots
    }

    pub fn get(&self, index: usize) -> &ActionVector {
        &self.actions[index]
    }

    pub fn index_of(&self, action: &ActionVector) -> Option<usize> {
        self.actions.binary_search(action).ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActionVector> {
        self.actions.iter()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Number of paths of a state in a column: the credit a detection there earns.
pub fn count_bins(space: &StateSpace, state: usize, col: usize) -> usize {
    space.paths_in_column(state, col)
}

// ---------------------------------------------------------------------------
// Detector
// ---------------------------------------------------------------------------

/// Mean received bin energy over noise when a pilot hits a path's column:
/// transmit power times the `n_tx` beamforming gain times `gain_var / noise_var`.
pub fn effective_snr(cfg: &ChannelConfig) -> f64 {
    cfg.tx_power_linear() * cfg.n_tx as f64 * cfg.gain_var / cfg.noise_var
}

/// Parameters of the per-bin energy test behind a [`DetectorModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTest {
    /// Threshold on `|y|^2 / noise_var`.
    pub tau: f64,
    pub snr_eff: f64,
    pub n_rx: usize,
    /// Noise-only bin firing probability, `exp(-tau)`.
    pub bin_false_alarm: f64,
}

impl EnergyTest {
    /// Firing probability of a bin holding `m` coherently added paths.
    pub fn bin_detection(&self, m: usize) -> f64 {
        (-self.tau / (1.0 + m as f64 * self.snr_eff)).exp()
    }
}

/// Column detection table `d[k] = Pr{column declared occupied | k paths}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub d: Vec<f64>,
    /// Present when the table comes from an energy detector; the simulator
    /// then synthesizes filter-bank outputs. Without it, feedback bits are
    /// drawn straight from the table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyTest>,
}

impl DetectorModel {
    /// Energy detector with threshold `tau` (in units of the noise variance).
    ///
    /// Each of the `n_rx` bins of a sensed column fires when its energy
    /// exceeds `tau * noise_var`; the column is occupied if any bin fires.
    /// Rows are uniform per path, so `d[k]` averages over how `k` paths
    /// spread across the rows. Paths sharing a bin add coherently.
    pub fn calibrate(cfg: &ChannelConfig, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        Ok(Self::from_energy_test(
            EnergyTest {
                tau,
                snr_eff: effective_snr(cfg),
                n_rx: cfg.n_rx,
                bin_false_alarm: (-tau).exp(),
            },
            cfg.n_paths,
        ))
    }

    /// Picks `tau` so that an empty column fires with probability `false_alarm`.
    pub fn calibrate_false_alarm(cfg: &ChannelConfig, false_alarm: f64) -> Result<Self> {
        if !(false_alarm > 0.0 && false_alarm < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "false alarm must lie in (0, 1), got {false_alarm}"
            )));
        }
        // (1 - f)^n_rx = 1 - false_alarm
        let f = -((-false_alarm).ln_1p() / cfg.n_rx as f64).exp_m1();
        Self::calibrate(cfg, -f.ln())
    }

    /// Detector described by the config's `tau`, else its `false_alarm`.
    pub fn from_config(cfg: &ChannelConfig) -> Result<Self> {
        match cfg.tau {
            Some(tau) => Self::calibrate(cfg, tau),
            None => Self::calibrate_false_alarm(cfg, cfg.false_alarm.unwrap_or(DEFAULT_FALSE_ALARM)),
        }
    }

    fn from_energy_test(test: EnergyTest, n_paths: usize) -> Self {
        let d = (0..=n_paths)
            .map(|k| 1.0 - column_miss_probability(&test, k))
            .collect();
        Self {
            d,
            energy: Some(test),
        }
    }

    /// Table-only detector. `d[k]` must be a probability for every `k`.
    pub fn from_table(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() || d.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!("invalid detection table {d:?}")));
        }
        Ok(Self { d, energy: None })
    }

    /// Detects any occupied column with certainty and never false-alarms.
    pub fn perfect(n_paths: usize) -> Self {
        let d = (0..=n_paths).map(|k| if k == 0 { 0.0 } else { 1.0 }).collect();
        Self { d, energy: None }
    }

    #[inline]
    pub fn detection(&self, k: usize) -> f64 {
        self.d[k.min(self.d.len() - 1)]
    }

    pub fn false_alarm(&self) -> f64 {
        self.d[0]
    }

    pub fn max_paths(&self) -> usize {
        self.d.len() - 1
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("detector serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model: Self =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("detector table: {e}")))?;
        Self::from_table(model.d.clone())?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// `Pr{no bin of the column fires | k paths}`, averaging over the uniform row
/// assignment of the `k` paths.
fn column_miss_probability(test: &EnergyTest, k: usize) -> f64 {
    // Sum over row occupancies (m_1..m_nrx) of the multinomial weight
    // k! / (prod m_r!) / n_rx^k times prod (1 - bin_detection(m_r)).
    let miss: Vec<f64> = (0..=k).map(|m| 1.0 - test.bin_detection(m)).collect();
    let inv_fact: Vec<f64> = (0..=k)
        .scan(1.0, |acc, m| {
            if m > 0 {
                *acc /= m as f64;
            }
            Some(*acc)
        })
        .collect();
    let mut dp = vec![0.0; k + 1];
    dp[0] = 1.0;
    for _ in 0..test.n_rx {
        let mut next = vec![0.0; k + 1];
        for (used, &w) in dp.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for m in 0..=k - used {
                next[used + m] += w * miss[m] * inv_fact[m];
            }
        }
        dp = next;
    }
    let k_fact: f64 = (1..=k).map(|m| m as f64).product();
    dp[k] * k_fact / (test.n_rx as f64).powi(k as i32)
}

// ---------------------------------------------------------------------------
// Sensing
// ---------------------------------------------------------------------------

/// Gain estimate for a fired bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub row: usize,
    pub col: usize,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingOutcome {
    pub observation: ObservationVector,
    pub estimates: Vec<GainEstimate>,
}

/// Senses the columns of `action` in one slot.
///
/// With an energy detector, every pilot yields the filter-bank output
/// `y = sqrt(snr_eff * noise_var / gain_var) * H(:, col) + n`, noise white
/// with variance `noise_var`; a bin fires when `|y|^2 > tau * noise_var` and
/// fired bins get the MMSE gain estimate. A table-only detector draws each
/// feedback bit from `d[k]` with `k` the number of paths in the column.
pub fn sense_columns<R: Rng + ?Sized>(
    realization: &ChannelRealization,
    action: &ActionVector,
    detector: &DetectorModel,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> SensingOutcome {
    let mut bits = Vec::with_capacity(action.len());
    let mut estimates = Vec::new();
    match &detector.energy {
        Some(test) => {
            let amp = (test.snr_eff * cfg.noise_var / cfg.gain_var).sqrt();
            let shrink = test.snr_eff / (1.0 + test.snr_eff);
            let threshold = test.tau * cfg.noise_var;
            for &col in action.cols() {
                let gains = realization.column_gains(col);
                let mut fired = false;
                for row in 0..test.n_rx {
                    let h = gains
                        .iter()
                        .find(|(r, _)| *r == row)
                        .map_or(Complex64::new(0.0, 0.0), |&(_, g)| g);
                    let y = h * amp + complex_gaussian(cfg.noise_var, rng);
                    if y.norm_sqr() > threshold {
                        fired = true;
                        estimates.push(GainEstimate {
                            row,
                            col,
                            gain: y * (shrink / amp),
                        });
                    }
                }
                bits.push(fired);
            }
        }
        None => {
            for &col in action.cols() {
                let k = realization.state.cols.iter().filter(|&&c| c == col).count();
                bits.push(rng.random::<f64>() < detector.detection(k));
            }
        }
    }
    SensingOutcome {
        observation: ObservationVector { bits },
        estimates,
    }
}

/// `Pr{obs | state, action}`: columns are conditionally independent given the
/// state, each firing with probability `d[k]` for its `k` paths.
pub fn observation_prob(
    space: &StateSpace,
    state: usize,
    action: &ActionVector,
    obs: &ObservationVector,
    detector: &DetectorModel,
) -> f64 {
    action
        .cols()
        .iter()
        .zip(&obs.bits)
        .map(|(&col, &bit)| {
            let d = detector.detection(count_bins(space, state, col));
            if bit {
                d
            } else {
                1.0 - d
            }
        })
        .product()
}
