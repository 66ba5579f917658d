use statrs::distribution::{ChiSquared, ContinuousCDF};
use tourney_extremes::exact::{self, ConvolutionConfig};
use tourney_extremes::sim::{run_experiment, simulate_tournament, SimConfig, Stream};
use tourney_extremes::OutcomeModel;

/// Pearson chi-square p-value of a single player's simulated score against
/// the exact marginal, merging sparse tail cells until each expects >= 5.
fn marginal_p_value(model: &OutcomeModel, n: usize, replicates: u64, seed: u64) -> f64 {
    let pmf = exact::score_pmf(model, n as u64, &ConvolutionConfig::default()).unwrap();
    let atoms = pmf.max_index() as usize + 1;
    let mut counts = vec![0u64; atoms];
    for r in 0..replicates {
        let scores = simulate_tournament(model, n, &Stream::new(seed, r)).unwrap();
        counts[scores[0] as usize] += 1;
    }

    let total = replicates as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (i, &c) in counts.iter().enumerate() {
        obs += c as f64;
        exp += pmf.prob_at(i as i64) * total;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        let last = cells.last_mut().unwrap();
        last.0 += obs;
        last.1 += exp;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

#[test]
fn single_player_marginal_matches_exact_pmf() {
    for model in [OutcomeModel::classical(), OutcomeModel::chess()] {
        let p = marginal_p_value(&model, 10, 1_000_000, 11);
        assert!(p > 0.001, "{}: chi-square p = {p}", model.id());
    }
}

#[test]
fn exceedance_counts_are_under_dispersed() {
    for model in [OutcomeModel::classical(), OutcomeModel::chess()] {
        let cfg = SimConfig {
            model,
            n: 100,
            t_grid: vec![-1.0, 0.0, 1.0],
            j_max: 0,
            replicates: 100_000,
            seed: 5,
            workers: 2,
        };
        let report = run_experiment(&cfg, None).unwrap();
        for e in &report.exceedances {
            assert!(e.variance < e.mean, "{} t={}: var {} mean {}", report.model_id, e.t, e.variance, e.mean);
        }
    }
}

#[test]
fn alias_sampler_marginal_matches_exact_pmf() {
    let model = OutcomeModel::new(4, vec![(0, 0.1), (1, 0.2), (2, 0.4), (3, 0.2), (4, 0.1)]).unwrap();
    let p = marginal_p_value(&model, 8, 200_000, 3);
    assert!(p > 0.001, "chi-square p = {p}");
}
