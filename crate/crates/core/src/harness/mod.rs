//! Episode simulation, Monte Carlo summaries and exhaustive reference values.

mod episode;
mod monte_carlo;
mod oracle;

pub use episode::{run_episode, EpisodeLog, EpisodeOptions, SlotRecord};
pub use monte_carlo::{mean_ci, monte_carlo, RunSummary, SlotSummary, Z95};
pub use oracle::{
    brute_force_root, brute_force_value, open_loop_value, OracleRoot, ORACLE_BUDGET,
    ORACLE_MAX_STATES,
};
