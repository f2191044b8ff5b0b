//! The pilot-design POMDP: states, actions, dynamics, detector and reward.

use crate::channel::{StateSpace, TransitionModel};
use crate::config::{ChannelConfig, RewardKind};
use crate::error::{Error, Result};
use crate::sensing::{ActionSpace, ActionVector, DetectorModel, ObservationVector};

#[derive(Debug, Clone)]
pub struct PilotPomdp {
    pub states: StateSpace,
    pub actions: ActionSpace,
    pub transition: TransitionModel,
    pub detector: DetectorModel,
    pub reward: RewardKind,
    /// Per-path gain variance, used by the MRC reward.
    pub gain_var: f64,
}

impl PilotPomdp {
    pub fn new(
        n_paths: usize,
        n_pilots: usize,
        transition: TransitionModel,
        detector: DetectorModel,
    ) -> Result<Self> {
        let n_tx = transition.n_tx();
        if n_pilots < n_paths {
            return Err(Error::InvalidArgument(format!(
                "need n_paths <= n_pilots, got {n_paths} > {n_pilots}"
            )));
        }
        if detector.max_paths() < n_paths {
            return Err(Error::InvalidArgument(format!(
                "detection table covers {} paths, model has {n_paths}",
                detector.max_paths()
            )));
        }
        Ok(Self {
            states: StateSpace::new(n_tx, n_paths)?,
            actions: ActionSpace::new(n_tx, n_pilots)?,
            transition,
            detector,
            reward: RewardKind::Paths,
            gain_var: 1.0,
        })
    }

    pub fn with_reward(mut self, reward: RewardKind, gain_var: f64) -> Self {
        self.reward = reward;
        self.gain_var = gain_var;
        self
    }

    /// Model with the config's transition matrix and its calibrated detector.
    pub fn from_config(cfg: &ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_detector(cfg, DetectorModel::from_config(cfg)?)
    }

    pub fn with_detector(cfg: &ChannelConfig, detector: DetectorModel) -> Result<Self> {
        Ok(Self::new(
            cfg.n_paths,
            cfg.n_pilots,
            TransitionModel::from_config(cfg)?,
            detector,
        )?
        .with_reward(cfg.reward, cfg.gain_var))
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.actions.n_observations()
    }

    pub fn n_pilots(&self) -> usize {
        self.actions.n_pilots()
    }

    pub fn n_paths(&self) -> usize {
        self.states.n_paths()
    }

    pub fn action(&self, index: usize) -> &ActionVector {
        self.actions.get(index)
    }

    pub fn observation(&self, index: usize) -> ObservationVector {
        ObservationVector::from_index(index, self.n_pilots())
    }

    /// Paths of `state` in each sensed column of `action`.
    #[inline]
    pub fn column_counts<'a>(
        &'a self,
        state: usize,
        action: &'a ActionVector,
    ) -> impl Iterator<Item = usize> + 'a {
        action
            .cols()
            .iter()
            .map(move |&c| self.states.paths_in_column(state, c))
    }

    /// `Pr{obs | state, action}` with the observation given by its index.
    pub fn obs_prob(&self, state: usize, action: &ActionVector, obs: usize) -> f64 {
        self.column_counts(state, action)
            .enumerate()
            .map(|(m, k)| {
                let d = self.detector.detection(k);
                if obs >> m & 1 == 1 {
                    d
                } else {
                    1.0 - d
                }
            })
            .product()
    }

    /// Reward credited for `bins` detected nonzero bins.
    pub fn credit(&self, bins: usize) -> f64 {
        match self.reward {
            RewardKind::Paths => bins as f64,
            RewardKind::Mrc => (bins as f64).mul_add(self.gain_var, 1.0).log2(),
        }
    }

    /// Largest reward a single slot can pay.
    pub fn max_slot_reward(&self) -> f64 {
        self.credit(self.n_paths())
    }

    /// `r(s, a, o)`: credit for the paths of `state` in columns that fired.
    /// Firing on an empty column earns nothing.
    pub fn slot_reward(&self, state: usize, action: &ActionVector, obs: usize) -> f64 {
        let bins: usize = self
            .column_counts(state, action)
            .enumerate()
            .filter(|(m, _)| obs >> m & 1 == 1)
            .map(|(_, k)| k)
            .sum();
        self.credit(bins)
    }
}
