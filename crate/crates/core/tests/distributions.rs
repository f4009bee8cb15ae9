use cellfree_core::deployment::{place_ppp, Region};
use cellfree_core::metrics::{coverage_perfect, quantile_threshold};
use cellfree_core::rng::seeded;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Exp1;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn ppp_points_are_uniform_over_quadrats() {
    let region = Region::new(2.0).unwrap();
    let cells = 8;
    let mut counts = vec![0usize; cells * cells];
    let mut rng = seeded(5);
    for _ in 0..200 {
        let layout = place_ppp(20.0, region, &mut rng).unwrap();
        for p in &layout.positions {
            let ix = (((p.x + 2.0) / 4.0 * cells as f64) as usize).min(cells - 1);
            let iy = (((p.y + 2.0) / 4.0 * cells as f64) as usize).min(cells - 1);
            counts[iy * cells + ix] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2={chi2:.1} p={p:.2e}");
    // 200 draws at mean 320 points each
    let mean = total as f64 / 200.0;
    assert!(
        (mean - 320.0).abs() < 4.0 * (320.0f64 / 200.0).sqrt(),
        "mean count {mean}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn hyperexponential_coverage_matches_sampling(
        seed in 0u64..1_000_000,
        n in 1usize..5,
        spread in 0.3f64..1.5,
    ) {
        let lambdas: Vec<f64> = (0..n).map(|k| (spread * k as f64).exp()).collect();
        let mut rng = seeded(seed);
        let draws = 20_000;
        let samples: Vec<f64> = (0..draws)
            .map(|_| lambdas.iter().map(|l| rng.sample::<f64, _>(Exp1) / l).sum())
            .collect();
        let mean: f64 = lambdas.iter().map(|l| 1.0 / l).sum();
        for gamma in [0.2 * mean, mean, 2.5 * mean] {
            let exact = coverage_perfect(gamma, &lambdas).unwrap();
            let empirical = samples.iter().filter(|&&s| s >= gamma).count() as f64 / draws as f64;
            let se = (exact * (1.0 - exact) / draws as f64).sqrt().max(1.0 / draws as f64);
            prop_assert!((empirical - exact).abs() <= 4.5 * se, "γ={gamma} exact={exact} mc={empirical}");
        }
    }
}

#[test]
fn quantile_interval_brackets_the_truth() {
    // Exp(1): the ε-quantile is −ln(1 − ε)
    let eps = 0.01;
    let truth = -(1.0f64 - eps).ln();
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = seeded(seed);
        let s: Vec<f64> = (0..20_000).map(|_| rng.sample(Exp1)).collect();
        let q = quantile_threshold(&s, eps).unwrap();
        hits += usize::from(q.lo <= truth && truth <= q.hi);
    }
    assert!(hits >= 88, "95% interval covered the true quantile {hits}/100 times");
}
