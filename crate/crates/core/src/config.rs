//! Run configuration loaded from a flat `key = value` text file.
//!
//! Keys are the field names of [`ChannelConfig`]. Lines starting with `#`
//! are comments. Example (the 8-antenna tracking experiment):
//!
//! ```text
//! n_tx = 8
//! n_rx = 4
//! n_paths = 2
//! n_pilots = 4
//! beta = 0.5
//! band = 1
//! gain_var = 1.0
//! noise_var = 1.0
//! tx_power_db = 1.0
//! horizon = 10
//! seed = 1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column false-alarm probability used when neither `tau` nor
/// `false_alarm` is given.
pub const DEFAULT_FALSE_ALARM: f64 = 0.05;

/// How the initial belief and the initial true state relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialPrior {
    /// The transmitter knows the initial composite state exactly.
    #[default]
    Known,
    /// Nothing is known; the initial belief is uniform over all states.
    Uniform,
}

/// Per-slot reward credited for the identified paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// Number of detected nonzero bins.
    #[default]
    Paths,
    /// `log2(1 + n * gain_var)` for `n` detected bins (MRC rate).
    Mrc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Transmit antennas, i.e. virtual AoD columns.
    pub n_tx: usize,
    /// Receive antennas, i.e. virtual AoA rows.
    pub n_rx: usize,
    /// Number of propagation paths.
    pub n_paths: usize,
    /// Pilot symbols (sensed columns) per slot.
    pub n_pilots: usize,
    /// Decrease factor of the banded random walk.
    pub beta: f64,
    /// Bandwidth of the banded random walk.
    pub band: usize,
    /// Per-path complex gain variance.
    pub gain_var: f64,
    pub noise_var: f64,
    /// Transmit power over noise power, before beamforming, in dB.
    pub tx_power_db: f64,
    /// Number of slots per episode.
    pub horizon: usize,
    pub seed: u64,
    /// Target column false-alarm probability; ignored when `tau` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub false_alarm: Option<f64>,
    /// Per-bin energy threshold, normalized by the noise variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub prior: InitialPrior,
    #[serde(default)]
    pub reward: RewardKind,
}

impl ChannelConfig {
    /// The 8x4 antenna configuration with four pilots, two paths and a
    /// bandwidth-1 random walk.
    pub fn small_array() -> Self {
        Self {
            n_tx: 8,
            n_rx: 4,
            n_paths: 2,
            n_pilots: 4,
            beta: 0.5,
            band: 1,
            gain_var: 1.0,
            noise_var: 1.0,
            tx_power_db: 1.0,
            horizon: 10,
            seed: 1,
            false_alarm: None,
            tau: None,
            prior: InitialPrior::Known,
            reward: RewardKind::Paths,
        }
    }

    /// The 16x4 antenna configuration with six pilots, two paths and a
    /// bandwidth-2 random walk.
    pub fn medium_array() -> Self {
        Self {
            n_tx: 16,
            n_pilots: 6,
            band: 2,
            horizon: 20,
            ..Self::small_array()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("n_tx and n_rx must be positive".into());
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if self.n_pilots < self.n_paths || self.n_pilots > self.n_tx {
            return bad(format!(
                "need n_paths <= n_pilots <= n_tx, got {} <= {} <= {}",
                self.n_paths, self.n_pilots, self.n_tx
            ));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        if self.band >= self.n_tx {
            return bad(format!("band must be below n_tx, got {}", self.band));
        }
        if !(self.gain_var > 0.0 && self.noise_var > 0.0) {
            return bad("gain_var and noise_var must be positive".into());
        }
        if !self.tx_power_db.is_finite() {
            return bad("tx_power_db must be finite".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if let Some(p) = self.false_alarm {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("false_alarm must lie in (0, 1), got {p}"));
            }
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tau must be positive, got {t}"));
            }
        }
        Ok(())
    }

    /// Fingerprint of every field that shapes the solved policy. The seed is
    /// excluded so one policy file serves any number of simulation runs.
    pub fn model_hash(&self) -> String {
        let mut canon = String::new();
        let _ = writeln!(canon, "n_tx={}", self.n_tx);
        let _ = writeln!(canon, "n_rx={}", self.n_rx);
        let _ = writeln!(canon, "n_paths={}", self.n_paths);
        let _ = writeln!(canon, "n_pilots={}", self.n_pilots);
        let _ = writeln!(canon, "beta={:?}", self.beta);
        let _ = writeln!(canon, "band={}", self.band);
        let _ = writeln!(canon, "gain_var={:?}", self.gain_var);
        let _ = writeln!(canon, "noise_var={:?}", self.noise_var);
        let _ = writeln!(canon, "tx_power_db={:?}", self.tx_power_db);
        let _ = writeln!(canon, "horizon={}", self.horizon);
        let _ = writeln!(canon, "false_alarm={:?}", self.false_alarm);
        let _ = writeln!(canon, "tau={:?}", self.tau);
        let _ = writeln!(canon, "reward={:?}", self.reward);
        let digest = Sha256::digest(canon.as_bytes());
        digest[..16].iter().fold(String::with_capacity(32), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Linear transmit power over noise.
    pub fn tx_power_linear(&self) -> f64 {
        10f64.powf(self.tx_power_db / 10.0)
    }
}
