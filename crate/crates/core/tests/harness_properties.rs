use beamtrack_core::channel::{draw_rows, realize_channel, step_state};
use beamtrack_core::harness::{monte_carlo, run_episode, EpisodeOptions};
use beamtrack_core::belief::observation_marginal;
use beamtrack_core::sensing::sense_columns;
use beamtrack_core::{
    episode_rng, ActionVector, Belief, ChannelConfig, DetectorModel, GreedyPolicy, InitialPrior,
    ObservationVector, PilotPomdp, RandomPolicy, TrackerPolicy, TransitionModel,
};

fn identity_model(cfg: &ChannelConfig, detector: DetectorModel) -> PilotPomdp {
    PilotPomdp::new(cfg.n_paths, cfg.n_pilots, TransitionModel::identity(cfg.n_tx), detector).unwrap()
}

#[test]
fn perfect_tracking_earns_every_path_every_slot() {
    let cfg = ChannelConfig::small_array();
    let m = identity_model(&cfg, DetectorModel::perfect(cfg.n_paths));
    let greedy = GreedyPolicy::new(&m);
    for e in 0..20 {
        let log = run_episode(&cfg, &m, &greedy, &m.detector, &mut episode_rng(3, e), EpisodeOptions::default()).unwrap();
        assert!(log.rewards().iter().all(|&r| r == cfg.n_paths as f64));
    }
}

#[test]
fn blind_detector_earns_nothing() {
    let cfg = ChannelConfig::small_array();
    let m = identity_model(&cfg, DetectorModel::from_table(vec![0.0; 3]).unwrap());
    let log = run_episode(&cfg, &m, &RandomPolicy::new(8, 4), &m.detector, &mut episode_rng(3, 0), EpisodeOptions::default()).unwrap();
    assert!(log.rewards().iter().all(|&r| r == 0.0));
}

#[test]
fn slot_rewards_stay_in_range() {
    let cfg = ChannelConfig::small_array();
    let m = PilotPomdp::from_config(&cfg).unwrap();
    let tracker = TrackerPolicy::new(m.transition.clone(), cfg.n_paths, cfg.n_pilots);
    let summary = monte_carlo(&cfg, &m, &tracker, 500, 2).unwrap();
    for s in &summary.slots {
        assert!((0.0..=cfg.n_paths as f64).contains(&s.mean_reward));
    }
    for e in 0..50 {
        let log = run_episode(&cfg, &m, &tracker, &m.detector, &mut episode_rng(1, e), EpisodeOptions::default()).unwrap();
        assert!(log.rewards().iter().all(|&r| r.fract() == 0.0 && (0.0..=2.0).contains(&r)));
    }
}

#[test]
fn simulated_reward_matches_belief_expectation() {
    // sum_k r_k and sum_k <R(a_k), pi_k> have the same mean
    let cfg = ChannelConfig::small_array();
    let m = PilotPomdp::from_config(&cfg).unwrap();
    let greedy = GreedyPolicy::new(&m);
    let n = 100_000;
    let diffs: Vec<f64> = (0..n)
        .map(|e| {
            let log = run_episode(&cfg, &m, &greedy, &m.detector, &mut episode_rng(17, e), EpisodeOptions::default()).unwrap();
            log.slots.iter().map(|s| s.reward - s.expected_reward).sum()
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() <= 3.0 * se, "mean gap {mean} vs se {se}");
}

#[test]
fn observation_frequencies_match_marginal() {
    let cfg = ChannelConfig::small_array();
    let m = PilotPomdp::from_config(&cfg).unwrap();
    let start = m.states.state_of(&[2, 3]).unwrap();
    let belief = Belief::point(m.n_states(), start.index);
    let action = ActionVector::new(vec![1, 2, 3, 4], cfg.n_tx).unwrap();
    let mut rng = episode_rng(5, 0);
    let trials = 100_000;
    let mut counts = vec![0usize; m.n_observations()];
    for _ in 0..trials {
        let rows = draw_rows(cfg.n_paths, cfg.n_rx, &mut rng);
        let next = step_state(&start, &m.transition, &m.states, &mut rng);
        let h = realize_channel(&next, &rows, &cfg, &mut rng);
        counts[sense_columns(&h, &action, &m.detector, &cfg, &mut rng).observation.index()] += 1;
    }
    for (o, &c) in counts.iter().enumerate() {
        let p = observation_marginal(&belief, &action, &ObservationVector::from_index(o, 4), &m);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = c as f64 / trials as f64;
        assert!((freq - p).abs() <= 3.0 * se, "obs {o}: {freq} vs {p}");
    }
}

#[test]
fn confidence_interval_shrinks_with_episodes() {
    let cfg = ChannelConfig::small_array();
    let m = PilotPomdp::from_config(&cfg).unwrap();
    let policy = RandomPolicy::new(cfg.n_tx, cfg.n_pilots);
    let small = monte_carlo(&cfg, &m, &policy, 1000, 2).unwrap();
    let large = monte_carlo(&cfg, &m, &policy, 4000, 2).unwrap();
    let ratio = small.final_slot().accum_ci95 / large.final_slot().accum_ci95;
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn summaries_do_not_depend_on_worker_count() {
    let cfg = ChannelConfig::small_array();
    let m = PilotPomdp::from_config(&cfg).unwrap();
    let policy = RandomPolicy::new(cfg.n_tx, cfg.n_pilots);
    let one = monte_carlo(&cfg, &m, &policy, 300, 1).unwrap();
    let three = monte_carlo(&cfg, &m, &policy, 300, 3).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.to_csv_string(), three.to_csv_string());
    assert!(one.to_csv_string().starts_with("slot,mean_reward,ci95,accum_reward\n"));
}

#[test]
fn unknown_start_catches_up_with_known_start() {
    let known = ChannelConfig::small_array();
    let uniform = ChannelConfig {
        prior: InitialPrior::Uniform,
        ..known.clone()
    };
    let m = PilotPomdp::from_config(&known).unwrap();
    let greedy = GreedyPolicy::new(&m);
    let cold = monte_carlo(&uniform, &m, &greedy, 10_000, 2).unwrap();
    let warm = monte_carlo(&known, &m, &greedy, 10_000, 2).unwrap();
    let (first, last) = (&cold.slots[0], &cold.slots[9]);
    assert!(first.mean_reward + first.ci95 < last.mean_reward - last.ci95);
    // most of the initial gap to the known-start level closes by slot 10
    let gap0 = warm.slots[0].mean_reward - first.mean_reward;
    let gap9 = warm.slots[9].mean_reward - last.mean_reward;
    assert!(gap9 < 0.5 * gap0, "gap {gap0} -> {gap9}");
}
