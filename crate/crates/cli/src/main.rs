use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rand::Rng;

use beamtrack_core::harness::{brute_force_value, monte_carlo};
use beamtrack_core::solver::{solve_with, SolverOptions};
use beamtrack_core::{
    episode_rng, AlphaVectorSet, Belief, ChannelConfig, DetectorModel, GreedyPolicy,
    OptimalPolicy, PilotPomdp, Policy, RandomPolicy, TrackerPolicy,
};

#[derive(Parser)]
#[command(name = "beamtrack", version, about = "Adaptive pilot-beam selection for sparse mmWave channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the finite-horizon problem and write the alpha-vector policy.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run Monte Carlo episodes and write per-slot rewards as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// optimal:<policy file> | greedy | random | tracker
        #[arg(long)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        workers: Option<usize>,
        /// Detection table to use instead of the calibrated one.
        #[arg(long)]
        detector: Option<PathBuf>,
    },
    /// Compare solver values with exhaustive enumeration on random beliefs.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 50)]
        beliefs: usize,
    },
    /// Print the detection table for a target column false-alarm rate.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        false_alarm: f64,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Debug)]
enum PolicyArg {
    Optimal(PathBuf),
    Greedy,
    Random,
    Tracker,
}

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Self::Greedy),
            "random" => Ok(Self::Random),
            "tracker" => Ok(Self::Tracker),
            _ => match s.strip_prefix("optimal:") {
                Some(path) if !path.is_empty() => Ok(Self::Optimal(path.into())),
                _ => Err(format!(
                    "unknown policy {s:?}; expected optimal:<file>, greedy, random or tracker"
                )),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamtrack: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &PathBuf) -> anyhow::Result<ChannelConfig> {
    ChannelConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Solve {
            config,
            out,
            horizon,
        } => {
            let cfg = load_config(&config)?;
            let model = PilotPomdp::from_config(&cfg)?;
            let horizon = horizon.unwrap_or(cfg.horizon);
            let set = solve_with(&model, horizon, &SolverOptions::default(), |k, n| {
                eprintln!("slot {k}: {n} vectors");
            })?
            .with_config_hash(cfg.model_hash());
            set.save(&out)
                .with_context(|| format!("writing policy {}", out.display()))?;
            println!("wrote {} ({} slots)", out.display(), set.horizon());
        }
        Command::Simulate {
            config,
            policy,
            episodes,
            seed,
            out,
            workers,
            detector,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let model = match &detector {
                Some(path) => PilotPomdp::with_detector(&cfg, DetectorModel::load(path)?)?,
                None => PilotPomdp::from_config(&cfg)?,
            };
            let policy: Box<dyn Policy + '_> = match policy {
                PolicyArg::Optimal(path) => {
                    let set = AlphaVectorSet::load(&path)?;
                    set.check_model(&model, &cfg.model_hash())?;
                    if set.horizon() < cfg.horizon {
                        bail!(
                            "policy covers {} slots, config needs {}",
                            set.horizon(),
                            cfg.horizon
                        );
                    }
                    Box::new(OptimalPolicy::new(set))
                }
                PolicyArg::Greedy => Box::new(GreedyPolicy::new(&model)),
                PolicyArg::Random => Box::new(RandomPolicy::new(cfg.n_tx, cfg.n_pilots)),
                PolicyArg::Tracker => Box::new(TrackerPolicy::new(
                    model.transition.clone(),
                    cfg.n_paths,
                    cfg.n_pilots,
                )),
            };
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let summary = monte_carlo(&cfg, &model, policy.as_ref(), episodes, workers)?;
            let file =
                File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            summary.write_csv(BufWriter::new(file))?;
            let last = summary.final_slot();
            println!(
                "{}: {} episodes, accumulated reward at slot {} = {:.4}",
                summary.policy, episodes, last.slot, last.accum_reward
            );
        }
        Command::Oracle {
            config,
            horizon,
            beliefs,
        } => {
            let cfg = load_config(&config)?;
            let model = PilotPomdp::from_config(&cfg)?;
            let n = model.n_states();
            let mut rng = episode_rng(cfg.seed, 0);
            let mut points: Vec<Belief> = (0..n).map(|s| Belief::point(n, s)).collect();
            for _ in 0..beliefs {
                let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                points.push(Belief::normalized(w)?);
            }
            // enumeration first: its budget guard fails fast on large models
            let exact: Vec<f64> = points
                .iter()
                .map(|b| brute_force_value(&model, b, horizon))
                .collect::<Result<_, _>>()?;
            let set = solve_with(&model, horizon, &SolverOptions::default(), |_, _| {})?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            let mut worst = 0.0f64;
            for (i, (b, &exact)) in points.iter().zip(&exact).enumerate() {
                let solved = set.value(b, 1);
                worst = worst.max((exact - solved).abs());
                writeln!(out, "belief {i}: brute_force {exact:.12} solver {solved:.12}")?;
            }
            writeln!(out, "max abs discrepancy {worst:.3e} over {} beliefs", points.len())?;
        }
        Command::Calibrate {
            config,
            false_alarm,
            out,
        } => {
            let cfg = load_config(&config)?;
            let det = DetectorModel::calibrate_false_alarm(&cfg, false_alarm)?;
            print!("{}", det.to_toml_string());
            if let Some(path) = out {
                det.save(&path)?;
            }
        }
    }
    Ok(())
}
