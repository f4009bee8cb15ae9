//! Outage thresholds, outage rates and coverage probabilities.

use crate::error::{Error, Result};
use crate::ostbc::OstbcCode;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct OutageResult {
    pub epsilon: f64,
    pub gamma_eps: f64,
    pub rate: f64,
    pub n_trials: usize,
    /// Half-width of the 95% interval on `rate`.
    pub ci_halfwidth: f64,
    /// 95% interval on `gamma_eps`.
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

/// `(1 − τ_p/τ_c)·(N_s/τ_d)·log₂(1 + γ_ε)`.
pub fn outage_rate(gamma_eps: f64, tau_p: usize, tau_c: usize, code: &OstbcCode) -> Result<f64> {
    if tau_p >= tau_c {
        return Err(Error::invalid(format!(
            "pilot length {tau_p} must be below the coherence interval {tau_c}"
        )));
    }
    if !(gamma_eps >= 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be non-negative, got {gamma_eps}"
        )));
    }
    Ok(prelog(tau_p, tau_c, code) * (1.0 + gamma_eps).log2())
}

pub fn prelog(tau_p: usize, tau_c: usize, code: &OstbcCode) -> f64 {
    (1.0 - tau_p as f64 / tau_c as f64) * code.rate()
}

/// `P(Σ Exp(λ_n) ≥ γ)` for distinct rates.
pub fn coverage_perfect(gamma: f64, lambdas: &[f64]) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::invalid("need at least one rate"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("rates must be positive"));
    }
    for (i, &a) in lambdas.iter().enumerate() {
        for &b in &lambdas[i + 1..] {
            if (a - b).abs() < 1e-6 * a.max(b) {
                return Err(Error::DegenerateRates);
            }
        }
    }
    if gamma <= 0.0 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for (n, &ln) in lambdas.iter().enumerate() {
        let weight: f64 = lambdas
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != n)
            .map(|(_, &lk)| 1.0 / (1.0 - ln / lk))
            .product();
        total += weight * (-gamma * ln).exp();
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Mean of `e^{−γλ}` over large-scale draws of the single-group LS rate.
pub fn coverage_ls_single(gamma: f64, lambda_samples: &[f64]) -> Result<f64> {
    if lambda_samples.is_empty() {
        return Err(Error::invalid("need at least one large-scale draw"));
    }
    if gamma <= 0.0 {
        return Ok(1.0);
    }
    Ok(lambda_samples.iter().map(|&l| (-gamma * l).exp()).sum::<f64>() / lambda_samples.len() as f64)
}

/// Empirical ε-quantile with a 95% order-statistic interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantile {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn min_samples(epsilon: f64) -> usize {
    (50.0 / epsilon).ceil() as usize
}

/// Lower-interpolation ε-quantile. Needs at least `50/ε` samples.
pub fn quantile_threshold(samples: &[f64], epsilon: f64) -> Result<Quantile> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "outage target must lie in (0, 1), got {epsilon}"
        )));
    }
    let needed = min_samples(epsilon);
    if samples.len() < needed {
        return Err(Error::SampleSize {
            needed,
            got: samples.len(),
        });
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, epsilon))
}

/// As [`quantile_threshold`] on data that is already sorted ascending.
pub fn quantile_sorted(sorted: &[f64], epsilon: f64) -> Quantile {
    let n = sorted.len();
    let last = n - 1;
    let k = ((epsilon * last as f64).floor() as usize).min(last);
    let spread = Z95 * (n as f64 * epsilon * (1.0 - epsilon)).sqrt();
    let lo = (k as f64 - spread).floor().max(0.0) as usize;
    let hi = ((k as f64 + spread).ceil() as usize).min(last);
    Quantile {
        value: sorted[k],
        lo: sorted[lo],
        hi: sorted[hi],
    }
}

/// Threshold and rate at outage level ε from SNR samples.
pub fn outage_from_samples(
    samples: &[f64],
    epsilon: f64,
    tau_p: usize,
    tau_c: usize,
    code: &OstbcCode,
) -> Result<OutageResult> {
    let q = quantile_threshold(samples, epsilon)?;
    let gamma = q.value.max(0.0);
    let rate = outage_rate(gamma, tau_p, tau_c, code)?;
    let lo = outage_rate(q.lo.max(0.0), tau_p, tau_c, code)?;
    let hi = outage_rate(q.hi.max(0.0), tau_p, tau_c, code)?;
    Ok(OutageResult {
        epsilon,
        gamma_eps: gamma,
        rate,
        n_trials: samples.len(),
        ci_halfwidth: 0.5 * (hi - lo),
        gamma_lo: q.lo.max(0.0),
        gamma_hi: q.hi.max(0.0),
    })
}

/// Smallest γ with `coverage(γ) ≤ 1 − ε`, by bisection on a non-increasing
/// coverage function.
pub fn threshold_from_coverage(epsilon: f64, coverage: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "outage target must lie in (0, 1), got {epsilon}"
        )));
    }
    let target = 1.0 - epsilon;
    let mut hi = 1.0;
    while coverage(hi)? > target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NumericalDegeneracy("coverage never drops below target".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if coverage(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_arithmetic() {
        let ala = OstbcCode::alamouti();
        assert_eq!(outage_rate(0.0, 2, 300, &ala).unwrap(), 0.0);
        assert!((outage_rate(1.0, 2, 300, &ala).unwrap() - 0.993_333_333).abs() < 1e-8);
        let r34 = OstbcCode::rate_three_quarters();
        let ratio = outage_rate(3.0, 0, 300, &r34).unwrap() / outage_rate(3.0, 0, 300, &ala).unwrap();
        assert!((ratio - 0.75).abs() < 1e-15);
        assert!(outage_rate(1.0, 300, 300, &ala).is_err());
    }

    #[test]
    fn hyperexponential_values() {
        assert!((coverage_perfect(0.7, &[2.0]).unwrap() - (-1.4f64).exp()).abs() < 1e-15);
        assert_eq!(coverage_perfect(0.0, &[1.0, 2.0]).unwrap(), 1.0);
        let expected = 2.0 * (-1.0f64).exp() - (-2.0f64).exp();
        assert!((coverage_perfect(1.0, &[1.0, 2.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.6004).abs() < 1e-4);
        assert!(matches!(
            coverage_perfect(1.0, &[1.0, 1.0 + 1e-9]),
            Err(Error::DegenerateRates)
        ));
    }

    #[test]
    fn coverage_is_non_increasing() {
        let l = [0.3, 1.1, 2.7];
        let mut prev = 1.0;
        for i in 0..200 {
            let c = coverage_perfect(i as f64 * 0.05, &l).unwrap();
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn ls_coverage() {
        assert_eq!(coverage_ls_single(0.0, &[3.0]).unwrap(), 1.0);
        assert!((coverage_ls_single(2.0, &[3.0]).unwrap() - (-6.0f64).exp()).abs() < 1e-15);
        assert!(coverage_ls_single(1.0, &[]).is_err());
    }

    #[test]
    fn quantiles() {
        let c = vec![4.2; 600];
        let q = quantile_threshold(&c, 0.1).unwrap();
        assert_eq!((q.value, q.lo, q.hi), (4.2, 4.2, 4.2));
        assert!(matches!(
            quantile_threshold(&c, 0.01),
            Err(Error::SampleSize { needed: 5000, got: 600 })
        ));
        let ramp: Vec<f64> = (0..1001).rev().map(f64::from).collect();
        assert_eq!(quantile_threshold(&ramp, 0.1).unwrap().value, 100.0);
        let mut prev = -1.0;
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let v = quantile_threshold(&ramp, eps).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn coverage_inversion() {
        let g = threshold_from_coverage(0.1, |x| coverage_perfect(x, &[1.0])).unwrap();
        assert!((g - (-(0.9f64).ln())).abs() < 1e-12);
    }
}
