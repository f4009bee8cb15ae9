//! Statistical checks of the closed forms against the link-level simulator.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{CVector, ChannelEstimate};
use crate::grouping::Grouping;
use crate::harness::config::normalized_power;
use crate::linklevel::{conditional_moments, empirical_snr_cdf, LinkPowers, LinkScenario};
use crate::metrics::coverage_perfect;
use crate::ostbc::OstbcCode;
use crate::propagation::{db_to_linear_loss, path_loss_db, PathLossParams};
use crate::rng::{complex_normal, seeded};
use crate::snr::{lambda_ls, snr_perfect, theorem1_terms, CsiMode};
use crate::stats::ks_test;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub passed: bool,
    pub lines: Vec<String>,
}

fn default_rho() -> f64 {
    normalized_power(1e-3, 200e3, 300.0, 9.0).expect("default noise parameters are valid")
}

/// Single group with a fixed gain, equal pilot and data power, one pilot:
/// link-level SNR samples against `Exp(λ^LS)`.
pub fn check_corollary1(seed: u64, n_samples: usize) -> Result<OracleReport> {
    let rho = default_rho();
    let pl = PathLossParams::default();
    // three APs at 150, 250 and 400 m
    let beta: Vec<f64> = [0.15, 0.25, 0.4]
        .iter()
        .map(|&d| db_to_linear_loss(path_loss_db(d, &pl)))
        .collect();
    let beta_bar: f64 = beta.iter().sum();
    let powers = LinkPowers {
        rho_p: rho,
        rho_d: rho,
        tau_p: 1,
        es: 1.0,
    };
    let scenario = LinkScenario {
        code: OstbcCode::single(),
        grouping: Grouping::single(beta.len()),
        beta,
        powers,
        csi: CsiMode::Ls,
    };
    let cdf = empirical_snr_cdf(&scenario, n_samples, &mut seeded(seed))?;
    let lambda = lambda_ls(beta_bar, rho, 1.0, rho, 1.0);
    let ks = ks_test(&cdf.sorted, |x| 1.0 - (-lambda * x.max(0.0)).exp());
    let passed = ks.p_value > 0.01;
    Ok(OracleReport {
        name: "corollary1",
        passed,
        lines: vec![format!(
            "seed={seed} n={} lambda_ls={lambda:.6e} ks_d={:.5} p={:.4} {}",
            ks.n,
            ks.statistic,
            ks.p_value,
            if passed { "pass" } else { "FAIL" }
        )],
    })
}

/// Conditional Monte-Carlo of `c_n` and `E[|η_n|²|ĥ]` for random settings.
/// Passes when at least 19 of 20 settings per code agree within 3 standard
/// errors.
pub fn check_theorem1(seed: u64, n_draws: usize) -> Result<OracleReport> {
    let mut rng = seeded(seed);
    let mut lines = Vec::new();
    let mut passed = true;
    for code in [OstbcCode::alamouti(), OstbcCode::rate_three_quarters()] {
        let mut hits = 0;
        for cfg in 0..20 {
            let beta: Vec<f64> = (0..code.n_groups).map(|_| rng.random_range(0.2..3.0)).collect();
            let powers = LinkPowers {
                rho_p: rng.random_range(0.1..5.0),
                rho_d: rng.random_range(0.5..10.0),
                tau_p: code.n_groups + rng.random_range(0..3usize),
                es: 1.0,
            };
            let e = powers.pilot_energy();
            let h_hat = CVector::from_fn(code.n_groups, |k, _| complex_normal(&mut rng, beta[k] + 1.0 / e));
            let est = ChannelEstimate::new(h_hat, &beta, e)?;
            let n = cfg % code.n_symbols;
            let t = theorem1_terms(&code, n, &est, powers.rho_d, powers.es)?;
            let m = conditional_moments(&code, n, &est, &powers, n_draws, &mut rng)?;
            let close = |mc: f64, se: f64, exact: f64| (mc - exact).abs() <= 3.0 * se + 1e-12 * exact.abs();
            let c_mc: Complex64 = m.cross / powers.es;
            let ok = close(c_mc.re, m.cross_se.re / powers.es, t.c_n.re)
                && close(c_mc.im, m.cross_se.im / powers.es, t.c_n.im)
                && close(m.eta_power, m.eta_power_se, t.eta_power);
            hits += usize::from(ok);
        }
        let code_ok = hits >= 19;
        passed &= code_ok;
        lines.push(format!(
            "seed={seed} code={} agree={hits}/20 draws={n_draws} {}",
            code.name,
            if code_ok { "pass" } else { "FAIL" }
        ));
    }
    Ok(OracleReport {
        name: "theorem1",
        passed,
        lines,
    })
}

/// Perfect-CSI SNR against the hyperexponential coverage: KS test and a
/// 3-standard-error check on a grid of 20 thresholds.
pub fn check_hyperexp(seed: u64, n_samples: usize) -> Result<OracleReport> {
    let mut rng = seeded(seed);
    let beta_bar = [0.4, 1.0, 1.7, 2.9];
    let (rho, es) = (1.5, 1.0);
    let lambdas: Vec<f64> = beta_bar.iter().map(|b| 1.0 / (rho * es * b)).collect();
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let h = CVector::from_fn(beta_bar.len(), |k, _| complex_normal(&mut rng, beta_bar[k]));
        samples.push(snr_perfect(&h, rho, es)?.value);
    }
    let ks = ks_test(&samples, |x| 1.0 - coverage_perfect(x, &lambdas).unwrap_or(1.0));
    let n = n_samples as f64;
    let mean_snr = rho * es * beta_bar.iter().sum::<f64>();
    let mut misses = 0;
    let mut worst_z: f64 = 0.0;
    for i in 1..=20 {
        let gamma = mean_snr * 3.0 * i as f64 / 20.0;
        let exact = coverage_perfect(gamma, &lambdas)?;
        let empirical = samples.iter().filter(|&&s| s >= gamma).count() as f64 / n;
        let se = (exact * (1.0 - exact) / n).sqrt().max(1.0 / n);
        let z = (empirical - exact).abs() / se;
        worst_z = worst_z.max(z);
        misses += usize::from(z > 3.0);
    }
    let passed = ks.p_value > 0.01 && misses == 0;
    Ok(OracleReport {
        name: "hyperexp",
        passed,
        lines: vec![format!(
            "seed={seed} n={n_samples} ks_d={:.5} p={:.4} grid_misses={misses}/20 worst_z={worst_z:.2} {}",
            ks.statistic,
            ks.p_value,
            if passed { "pass" } else { "FAIL" }
        )],
    })
}

pub const CHECKS: &[&str] = &["theorem1", "corollary1", "hyperexp"];

pub fn run_check(name: &str, seed: u64) -> Result<OracleReport> {
    match name {
        "theorem1" => check_theorem1(seed, 100_000),
        "corollary1" => check_corollary1(seed, 100_000),
        "hyperexp" => check_hyperexp(seed, 100_000),
        other => Err(crate::Error::UnknownStrategy {
            kind: "oracle check",
            name: other.to_string(),
        }),
    }
}
