//! Closed-form SNR expressions for perfect and least-squares CSI.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{CVector, ChannelEstimate};
use crate::error::{Error, Result};
use crate::ostbc::{CMatrix, OstbcCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsiMode {
    Perfect,
    Ls,
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CsiMode::Perfect => "perfect",
            CsiMode::Ls => "ls",
        })
    }
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(CsiMode::Perfect),
            "ls" => Ok(CsiMode::Ls),
            other => Err(Error::UnknownStrategy {
                kind: "csi",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSample {
    pub value: f64,
    pub csi_mode: CsiMode,
    /// The channel (or estimate) the value was computed from.
    pub conditioning: CVector,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// `ρ·E_s·‖h‖²`.
pub fn snr_perfect(h: &CVector, rho: f64, es: f64) -> Result<SnrSample> {
    check_positive("rho", rho)?;
    check_positive("symbol energy", es)?;
    Ok(SnrSample {
        value: rho * es * h.norm_squared(),
        csi_mode: CsiMode::Perfect,
        conditioning: h.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremOneTerms {
    pub c_n: Complex64,
    pub z_power: f64,
    pub eta_power: f64,
    pub q1: CMatrix,
    pub q2: CMatrix,
}

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::from(v)),
    ))
}

/// `Re(ĥᴴCᴴ·Σ(A_kQA_kᴴ + B_kQB_kᴴ)·Cĥ)`.
fn psi(code: &OstbcCode, c: &CMatrix, q: &CMatrix, h_hat: &CVector) -> f64 {
    let mut inner = CMatrix::zeros(code.block_len, code.block_len);
    for (a, b) in code.a.iter().zip(&code.b) {
        inner += a * q * a.adjoint() + b * q * b.adjoint();
    }
    let v = c * h_hat;
    v.dotc(&(inner * &v)).re
}

/// `Re(ĥᴴCᴴ·Σ(A_kQA_kᵀ − B_kQB_kᵀ)·C*ĥ*)`.
fn psi_bar(code: &OstbcCode, c: &CMatrix, q: &CMatrix, h_hat: &CVector) -> f64 {
    let mut inner = CMatrix::zeros(code.block_len, code.block_len);
    for (a, b) in code.a.iter().zip(&code.b) {
        inner += a * q * a.transpose() - b * q * b.transpose();
    }
    let v = c * h_hat;
    v.dotc(&(inner * v.conjugate())).re
}

pub fn theorem1_terms(
    code: &OstbcCode,
    n: usize,
    estimate: &ChannelEstimate,
    rho_d: f64,
    es: f64,
) -> Result<TheoremOneTerms> {
    if n >= code.n_symbols {
        return Err(Error::invalid(format!(
            "symbol index {n} out of range for a code with {} symbols",
            code.n_symbols
        )));
    }
    let h = &estimate.h_hat;
    if h.len() != code.n_groups {
        return Err(Error::Dimension {
            expected: code.n_groups,
            got: h.len(),
        });
    }
    if estimate.u_cond.len() != h.len() || estimate.c_cond.len() != h.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: estimate.u_cond.len(),
        });
    }
    let u = diag(&estimate.u_cond);
    let uh = &u * h;
    let q1 = &uh * uh.adjoint() + diag(&estimate.c_cond);
    let q2 = &uh * uh.transpose();

    let (a_n, b_n) = (&code.a[n], &code.b[n]);
    let cross = h.dotc(&(a_n.adjoint() * b_n * &uh)).im;
    let c_n = -rho_d.sqrt() * Complex64::new(h.dotc(&uh).re, cross);

    let eta_power = rho_d * es / 4.0
        * (psi(code, a_n, &q1, h) + psi_bar(code, a_n, &q2, h) + psi(code, b_n, &q1, h) - psi_bar(code, b_n, &q2, h));

    Ok(TheoremOneTerms {
        c_n,
        z_power: h.norm_squared(),
        eta_power,
        q1,
        q2,
    })
}

/// `E_s·|√ρ_d‖ĥ‖² + c_n|² / (E|η|² + ‖ĥ‖² − E_s|c_n|²)`.
pub fn snr_ls(code: &OstbcCode, n: usize, estimate: &ChannelEstimate, rho_d: f64, es: f64) -> Result<SnrSample> {
    check_positive("data power", rho_d)?;
    check_positive("symbol energy", es)?;
    let t = theorem1_terms(code, n, estimate, rho_d, es)?;
    let gain = Complex64::from(rho_d.sqrt() * t.z_power) + t.c_n;
    let denominator = t.eta_power + t.z_power - es * t.c_n.norm_sqr();
    if !(denominator > 0.0) {
        return Err(Error::NumericalDegeneracy(format!(
            "effective noise power {denominator} is not positive"
        )));
    }
    Ok(SnrSample {
        value: es * gain.norm_sqr() / denominator,
        csi_mode: CsiMode::Ls,
        conditioning: estimate.h_hat.clone(),
    })
}

/// Rate of the exponential SNR law for a single group under LS estimation.
pub fn lambda_ls(beta_bar: f64, rho_p: f64, tau_p: f64, rho_d: f64, es: f64) -> f64 {
    let pilot = rho_p * tau_p;
    let data = rho_d * es;
    (1.0 + beta_bar * (pilot + data)) / (data * pilot * beta_bar * beta_bar)
}

/// Rate of the exponential SNR law for one group under perfect CSI.
pub fn lambda_perfect(beta_bar: f64, rho: f64, es: f64) -> f64 {
    1.0 / (rho * es * beta_bar)
}

/// Maximum-ratio combining of independently processed receive branches.
pub fn snr_mrc(branches: &[SnrSample]) -> Result<SnrSample> {
    let first = branches
        .first()
        .ok_or_else(|| Error::invalid("MRC needs at least one branch"))?;
    if branches.iter().any(|b| b.csi_mode != first.csi_mode) {
        return Err(Error::invalid("MRC branches must share a CSI mode"));
    }
    Ok(SnrSample {
        value: branches.iter().map(|b| b.value).sum(),
        csi_mode: first.csi_mode,
        conditioning: first.conditioning.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, seeded};

    fn cv(values: &[Complex64]) -> CVector {
        CVector::from_row_slice(values)
    }

    #[test]
    fn zero_channel_gives_zero() {
        let s = snr_perfect(&CVector::zeros(2), 10.0, 1.0).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(snr_perfect(&CVector::zeros(1), 0.0, 1.0).is_err());
    }

    #[test]
    fn single_group_reduction() {
        let mut rng = seeded(11);
        let code = OstbcCode::single();
        for _ in 0..1000 {
            let beta: f64 = 0.1 + 3.0 * rand::Rng::random::<f64>(&mut rng);
            let e: f64 = 0.1 + 10.0 * rand::Rng::random::<f64>(&mut rng);
            let rho_d: f64 = 0.1 + 10.0 * rand::Rng::random::<f64>(&mut rng);
            let es: f64 = 0.5 + rand::Rng::random::<f64>(&mut rng);
            let h = cv(&[complex_normal(&mut rng, beta)]);
            let est = ChannelEstimate::new(h.clone(), &[beta], e).unwrap();
            let t = theorem1_terms(&code, 0, &est, rho_d, es).unwrap();
            let g = h[0].norm_sqr();
            let k = 1.0 + e * beta;
            let c = -rho_d.sqrt() * g / k;
            let eta = rho_d * es * g * (g / (k * k) + beta / k);
            assert!((t.c_n.re - c).abs() < 1e-10 * c.abs().max(1.0));
            assert!(t.c_n.im.abs() < 1e-12);
            assert!((t.eta_power - eta).abs() < 1e-10 * eta.max(1.0));
        }
    }

    #[test]
    fn vanishing_error_recovers_perfect_csi() {
        let code = OstbcCode::alamouti();
        let h = cv(&[Complex64::new(0.3, -0.4), Complex64::new(1.1, 0.2)]);
        let est = ChannelEstimate::new(h.clone(), &[0.5, 1.5], 1e14).unwrap();
        let t = theorem1_terms(&code, 0, &est, 2.0, 1.0).unwrap();
        assert!(t.c_n.norm() < 1e-12);
        assert!(t.eta_power < 1e-12);
        let ls = snr_ls(&code, 0, &est, 2.0, 1.0).unwrap().value;
        let perfect = snr_perfect(&h, 2.0, 1.0).unwrap().value;
        assert!((ls - perfect).abs() < 1e-9 * perfect);
    }

    #[test]
    fn alamouti_symbols_are_symmetric() {
        let mut rng = seeded(5);
        let code = OstbcCode::alamouti();
        for _ in 0..100 {
            let h = cv(&[complex_normal(&mut rng, 1.0), complex_normal(&mut rng, 2.0)]);
            let est = ChannelEstimate::new(h, &[1.0, 2.0], 3.0).unwrap();
            let a = snr_ls(&code, 0, &est, 4.0, 1.0).unwrap().value;
            let b = snr_ls(&code, 1, &est, 4.0, 1.0).unwrap().value;
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn terms_are_well_formed() {
        let mut rng = seeded(6);
        let code = OstbcCode::rate_three_quarters();
        let beta = [0.2, 1.0, 3.0, 0.7];
        for _ in 0..200 {
            let h = CVector::from_fn(4, |k, _| complex_normal(&mut rng, beta[k]));
            let est = ChannelEstimate::new(h, &beta, 0.8).unwrap();
            for n in 0..3 {
                let t = theorem1_terms(&code, n, &est, 5.0, 1.0).unwrap();
                assert!(t.eta_power >= 0.0);
                assert!((&t.q1 - t.q1.adjoint()).norm() < 1e-12);
                assert!(t.q1.clone().cholesky().is_some() || t.q1.norm() == 0.0);
                assert!(snr_ls(&code, n, &est, 5.0, 1.0).unwrap().value >= 0.0);
            }
        }
    }

    #[test]
    fn bad_inputs() {
        let code = OstbcCode::alamouti();
        let est = ChannelEstimate::new(CVector::zeros(1), &[1.0], 1.0).unwrap();
        assert!(matches!(
            theorem1_terms(&code, 0, &est, 1.0, 1.0),
            Err(Error::Dimension { .. })
        ));
        let est = ChannelEstimate::new(CVector::zeros(2), &[1.0, 1.0], 1.0).unwrap();
        assert!(theorem1_terms(&code, 2, &est, 1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_limits() {
        let (beta, rho) = (0.8, 3.0);
        let lp = lambda_perfect(beta, rho, 1.0);
        assert!((lambda_ls(beta, 1e12, 1.0, rho, 1.0) - lp).abs() < 1e-9 * lp);
        for tau in [1.0, 2.0, 5.0] {
            let expected = (1.0 + rho * beta * (1.0 + tau)) / (rho * rho * tau * beta * beta);
            assert!((lambda_ls(beta, rho, tau, rho, 1.0) - expected).abs() < 1e-12 * expected);
        }
        let big = 1e6;
        let ratio = lambda_ls(1.0, big, 1.0, big, 1.0) / lambda_perfect(1.0, big, 1.0);
        assert!((ratio - 2.0).abs() < 0.01);
    }

    #[test]
    fn lambda_is_decreasing() {
        let grid = [0.1, 0.5, 1.0, 2.0, 10.0];
        for w in grid.windows(2) {
            assert!(lambda_ls(w[1], 1.0, 1.0, 1.0, 1.0) < lambda_ls(w[0], 1.0, 1.0, 1.0, 1.0));
            assert!(lambda_ls(1.0, w[1], 1.0, 1.0, 1.0) < lambda_ls(1.0, w[0], 1.0, 1.0, 1.0));
            assert!(lambda_ls(1.0, 1.0, 1.0, w[1], 1.0) < lambda_ls(1.0, 1.0, 1.0, w[0], 1.0));
        }
    }

    #[test]
    fn mrc_sums_branches() {
        let one = snr_perfect(&cv(&[Complex64::new(1.0, 0.0)]), 2.0, 1.0).unwrap();
        assert_eq!(snr_mrc(std::slice::from_ref(&one)).unwrap().value, 2.0);
        assert_eq!(snr_mrc(&[one.clone(), one.clone()]).unwrap().value, 4.0);
        assert!(snr_mrc(&[]).is_err());
        let mut ls = one.clone();
        ls.csi_mode = CsiMode::Ls;
        assert!(snr_mrc(&[one, ls]).is_err());
    }
}
