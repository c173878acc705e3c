use sandpile_core::distributions::{iid_pmf, DEFAULT_TOLERANCE};
use sandpile_core::montecarlo::{
    run_corank_experiment, run_full_rank_frequency, run_phase_sweep, run_rank_evolution, tv_distance,
    ExperimentConfig, Model, Statistic,
};
use sandpile_core::ModelParams;

fn params(n: usize, q: f64, p: u32, seed: u64) -> ModelParams {
    ModelParams {
        n,
        alpha: 1.0,
        q,
        p,
        seed,
    }
}

#[test]
fn reports_identical_across_worker_counts() {
    let corank = ExperimentConfig::new(Model::Bipartite, params(16, 0.5, 3, 5), 300, Statistic::Corank);
    let evolution = ExperimentConfig {
        statistic: Statistic::RankEvolution { delta: 0.5 },
        ..corank.clone()
    };
    let reference = run_corank_experiment(&corank, 1).unwrap().to_json();
    let evo_reference = run_rank_evolution(&evolution, 1).unwrap().to_json();
    let sweep_reference = run_phase_sweep(&[0.5, 1.0], &[8, 12], &corank.params, 50, 1).unwrap().to_json();
    for threads in [4, 16] {
        assert_eq!(run_corank_experiment(&corank, threads).unwrap().to_json(), reference);
        assert_eq!(run_rank_evolution(&evolution, threads).unwrap().to_json(), evo_reference);
        assert_eq!(
            run_phase_sweep(&[0.5, 1.0], &[8, 12], &corank.params, 50, threads).unwrap().to_json(),
            sweep_reference
        );
    }
}

#[test]
fn square_iid_corank_zero_frequency() {
    let cfg = ExperimentConfig::new(Model::IidRect { u: 0 }, params(64, 0.5, 2, 11), 20_000, Statistic::Corank);
    let r = run_corank_experiment(&cfg, 0).unwrap();
    assert!((r.frequency(0) - 0.288_788_095_086_602_42).abs() <= 0.015, "{}", r.frequency(0));
}

#[test]
fn single_trial_bookkeeping() {
    let cfg = ExperimentConfig::new(Model::Bipartite, params(10, 0.999_999, 2, 3), 1, Statistic::Corank);
    let r = run_corank_experiment(&cfg, 1).unwrap();
    assert_eq!(r.counts.len(), 1);
    assert_eq!(r.trials(), 1);
    assert!(r.pmf.iter().all(|row| (0.0..=1.0).contains(&row.wilson_lo) && row.wilson_hi <= 1.0));
}

#[test]
fn single_row_is_full_rank() {
    let cfg = ExperimentConfig::new(
        Model::Bipartite,
        params(30, 0.5, 3, 4),
        200,
        Statistic::FullRankAt { row_count: 1 },
    );
    let r = run_full_rank_frequency(&cfg, 0).unwrap();
    assert_eq!(r.frequency(0), 1.0);
    assert_eq!(r.outcome, "rank_deficiency");
}

#[test]
fn laplacian_coranks_are_positive_for_every_model() {
    for (model, p) in [(Model::Bipartite, 5), (Model::Er, 2), (Model::Er, 3)] {
        let cfg = ExperimentConfig::new(model, params(24, 0.3, p, 9), 300, Statistic::Corank);
        let r = run_corank_experiment(&cfg, 0).unwrap();
        assert!(r.counts.keys().all(|&k| k >= 1));
        assert_eq!(r.trials(), 300);
    }
}

#[test]
fn er_model_follows_the_same_limit() {
    let cfg = ExperimentConfig::new(Model::Er, params(64, 0.5, 2, 12), 5000, Statistic::Corank);
    let r = run_corank_experiment(&cfg, 0).unwrap();
    assert!(r.tv_distance.unwrap() <= 0.03, "{:?}", r.tv_distance);
}

#[test]
fn iid_and_bipartite_empirical_pmfs_agree() {
    let bip = ExperimentConfig::new(Model::Bipartite, params(64, 0.5, 2, 21), 20_000, Statistic::Corank);
    let iid = ExperimentConfig::new(Model::IidRect { u: 1 }, params(64, 0.5, 2, 22), 20_000, Statistic::Corank);
    let a = run_corank_experiment(&bip, 0).unwrap().empirical_pmf();
    let b = run_corank_experiment(&iid, 0).unwrap().empirical_pmf();
    let tv = tv_distance(&a, &b);
    assert!(tv <= 0.03, "tv = {tv}");
}

#[test]
fn wilson_intervals_cover_theory() {
    // 100 independent buckets: the corank-u bucket of iid_rect(u) runs over
    // p in {2, 3}, u in {0, 1} and 25 seeds
    let mut covered = 0;
    let mut total = 0;
    for p in [2u32, 3] {
        for u in [0usize, 1] {
            let truth = iid_pmf(p, u as u32, 0, DEFAULT_TOLERANCE);
            for seed in 0..25 {
                let cfg = ExperimentConfig::new(
                    Model::IidRect { u },
                    params(32, 0.5, p, 1000 + seed),
                    400,
                    Statistic::Corank,
                );
                let r = run_corank_experiment(&cfg, 0).unwrap();
                let row = r.pmf.iter().find(|row| row.outcome == u).unwrap();
                covered += usize::from(row.wilson_lo <= truth && truth <= row.wilson_hi);
                total += 1;
            }
        }
    }
    assert_eq!(total, 100);
    assert!(covered >= 92, "{covered}/100 intervals cover");
}

#[test]
fn counts_sum_to_trials_and_csv_has_one_row_per_outcome() {
    let cfg = ExperimentConfig::new(Model::Bipartite, params(20, 0.4, 2, 8), 777, Statistic::Corank);
    let r = run_corank_experiment(&cfg, 0).unwrap();
    assert_eq!(r.counts.values().sum::<u64>(), 777);
    assert_eq!(r.to_csv().lines().count(), 1 + r.counts.len());
    let back: sandpile_core::montecarlo::ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}
