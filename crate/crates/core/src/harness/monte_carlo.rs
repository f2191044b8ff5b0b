use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ChannelConfig;
use crate::error::{Error, Result};
use crate::model::PilotPomdp;
use crate::policy::Policy;
use crate::rng::episode_rng;

use super::episode::{run_episode, EpisodeOptions};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSummary {
    pub slot: usize,
    pub mean_reward: f64,
    /// 95% half-width of `mean_reward`.
    pub ci95: f64,
    /// Mean reward accumulated over slots `1..=slot`.
    pub accum_reward: f64,
    pub accum_ci95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub policy: String,
    pub episodes: usize,
    pub seed: u64,
    pub config_hash: String,
    pub slots: Vec<SlotSummary>,
}

#[derive(Serialize)]
struct CsvRow {
    slot: usize,
    mean_reward: f64,
    ci95: f64,
    accum_reward: f64,
}

impl RunSummary {
    /// `slot,mean_reward,ci95,accum_reward`, one row per slot.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.slots {
            w.serialize(CsvRow {
                slot: s.slot,
                mean_reward: s.mean_reward,
                ci95: s.ci95,
                accum_reward: s.accum_reward,
            })
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn final_slot(&self) -> &SlotSummary {
        self.slots.last().expect("horizon is positive")
    }
}

/// Mean and 95% half-width `Z95 * s / sqrt(n)` with the sample deviation.
pub fn mean_ci(samples: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = samples.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Z95 * var.sqrt() / (n as f64).sqrt())
}

/// Runs `episodes` independent episodes on `workers` threads.
///
/// Episode `e` draws from stream `e` of the config seed and the reduction
/// runs in episode order, so the summary is bit-identical for any worker
/// count.
pub fn monte_carlo(
    cfg: &ChannelConfig,
    model: &PilotPomdp,
    policy: &dyn Policy,
    episodes: usize,
    workers: usize,
) -> Result<RunSummary> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("need at least one episode".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let runs: Vec<(Vec<f64>, Vec<f64>)> = pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|e| {
                let mut rng = episode_rng(cfg.seed, e as u64);
                run_episode(cfg, model, policy, &model.detector, &mut rng, EpisodeOptions::default())
                    .map(|log| (log.rewards(), log.accumulated()))
            })
            .collect::<Result<_>>()
    })?;

    let slots = (0..cfg.horizon)
        .map(|k| {
            let (mean_reward, ci95) = mean_ci(runs.iter().map(|(r, _)| r[k]));
            let (accum_reward, accum_ci95) = mean_ci(runs.iter().map(|(_, acc)| acc[k]));
            SlotSummary {
                slot: k + 1,
                mean_reward,
                ci95,
                accum_reward,
                accum_ci95,
            }
        })
        .collect();

    Ok(RunSummary {
        policy: policy.name().to_string(),
        episodes,
        seed: cfg.seed,
        config_hash: cfg.model_hash(),
        slots,
    })
}
