use beamtrack_core::policy::random_action;
use beamtrack_core::{episode_rng, ActionSpace};

#[test]
fn random_actions_are_uniform() {
    let space = ActionSpace::new(8, 4).unwrap();
    let mut rng = episode_rng(2024, 0);
    let draws = 100_000;
    let mut counts = vec![0usize; space.len()];
    for _ in 0..draws {
        let a = random_action(8, 4, &mut rng);
        counts[space.index_of(&a).unwrap()] += 1;
    }
    let expected = draws as f64 / space.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 69 degrees of freedom
    assert!(chi2 < 111.055, "chi2 = {chi2}");
}

#[test]
fn full_sweep_is_the_only_choice() {
    let mut rng = episode_rng(1, 0);
    for _ in 0..10 {
        assert_eq!(random_action(5, 5, &mut rng).cols(), &[0, 1, 2, 3, 4]);
    }
}

#[test]
fn same_stream_same_actions() {
    let a: Vec<_> = (0..20).scan(episode_rng(9, 4), |r, _| Some(random_action(8, 4, r))).collect();
    let b: Vec<_> = (0..20).scan(episode_rng(9, 4), |r, _| Some(random_action(8, 4, r))).collect();
    assert_eq!(a, b);
}
