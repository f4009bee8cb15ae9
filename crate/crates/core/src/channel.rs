//! Effective channel draws, downlink pilots and least-squares estimation.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ostbc::CMatrix;
use crate::rng::complex_normal;

pub type CVector = DVector<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub h: CVector,
    /// Diagonal of the channel covariance (the per-group β̄).
    pub cov_diag: Vec<f64>,
}

pub fn draw_effective_channel<R: Rng + ?Sized>(beta_bar: &[f64], rng: &mut R) -> Result<EffectiveChannel> {
    if beta_bar.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::invalid("per-group large-scale gains must be positive"));
    }
    let h = CVector::from_iterator(beta_bar.len(), beta_bar.iter().map(|&b| complex_normal(rng, b)));
    Ok(EffectiveChannel {
        h,
        cov_diag: beta_bar.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    /// `τ_p × N_g` with `X_pᴴX_p = τ_p·I`.
    pub x_p: CMatrix,
    pub pilot_power: f64,
}

impl PilotBlock {
    pub fn tau_p(&self) -> usize {
        self.x_p.nrows()
    }

    pub fn n_groups(&self) -> usize {
        self.x_p.ncols()
    }

    /// Pilot energy per group, `ρ_p·τ_p`.
    pub fn energy(&self) -> f64 {
        self.pilot_power * self.tau_p() as f64
    }
}

/// `e^{-2πi·k/n}` with the quarter turns snapped to exact values.
fn unit_root(k: usize, n: usize) -> Complex64 {
    let k = k % n;
    if (4 * k).is_multiple_of(n) {
        return match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
    }
    Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

/// First `n_groups` columns of the unnormalized `τ_p`-point DFT matrix.
pub fn make_pilot_block(tau_p: usize, n_groups: usize, pilot_power: f64) -> Result<PilotBlock> {
    if n_groups == 0 {
        return Err(Error::invalid("need at least one group"));
    }
    if tau_p < n_groups {
        return Err(Error::Infeasible(format!(
            "{tau_p} pilot symbols cannot carry {n_groups} orthogonal sequences"
        )));
    }
    if !(pilot_power > 0.0 && pilot_power.is_finite()) {
        return Err(Error::invalid(format!(
            "pilot power must be positive, got {pilot_power}"
        )));
    }
    let x_p = CMatrix::from_fn(tau_p, n_groups, |t, k| unit_root(t * k, tau_p));
    Ok(PilotBlock { x_p, pilot_power })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: CVector,
    /// Common diagonal of `C_e = I/(ρ_p·τ_p)`.
    pub error_var: f64,
    /// Diagonal of `U_cond = C_e(C_e + C_h)⁻¹`.
    pub u_cond: Vec<f64>,
    /// Diagonal of `C_cond = (C_e⁻¹ + C_h⁻¹)⁻¹`.
    pub c_cond: Vec<f64>,
}

/// Diagonal conditional statistics of the LS error given the estimate.
pub fn conditional_stats(beta_bar: &[f64], pilot_energy: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let ce = 1.0 / pilot_energy;
    let u = beta_bar.iter().map(|&b| ce / (ce + b)).collect();
    let c = beta_bar.iter().map(|&b| 1.0 / (1.0 / ce + 1.0 / b)).collect();
    (ce, u, c)
}

impl ChannelEstimate {
    /// Estimate with conditional statistics computed from the pilot energy.
    pub fn new(h_hat: CVector, beta_bar: &[f64], pilot_energy: f64) -> Result<Self> {
        if h_hat.len() != beta_bar.len() {
            return Err(Error::Dimension {
                expected: beta_bar.len(),
                got: h_hat.len(),
            });
        }
        if !(pilot_energy > 0.0) {
            return Err(Error::invalid("pilot energy must be positive"));
        }
        let (error_var, u_cond, c_cond) = conditional_stats(beta_bar, pilot_energy);
        Ok(ChannelEstimate {
            h_hat,
            error_var,
            u_cond,
            c_cond,
        })
    }

    /// Perfect knowledge: `ĥ = h` and no estimation error.
    pub fn perfect(h: CVector) -> Self {
        let n = h.len();
        ChannelEstimate {
            h_hat: h,
            error_var: 0.0,
            u_cond: vec![0.0; n],
            c_cond: vec![0.0; n],
        }
    }

    pub fn n_groups(&self) -> usize {
        self.h_hat.len()
    }
}

/// `y_p = √ρ_p·X_p·h + w` together with the noise realization `w`.
pub fn pilot_observation<R: Rng + ?Sized>(h: &CVector, pilot: &PilotBlock, rng: &mut R) -> Result<(CVector, CVector)> {
    if h.len() != pilot.n_groups() {
        return Err(Error::Dimension {
            expected: pilot.n_groups(),
            got: h.len(),
        });
    }
    let w = CVector::from_fn(pilot.tau_p(), |_, _| complex_normal(rng, 1.0));
    let y = &pilot.x_p * h * Complex64::from(pilot.pilot_power.sqrt()) + &w;
    Ok((y, w))
}

/// `ĥ = (√ρ_p·X_pᴴX_p)⁻¹·X_pᴴ·y_p`, using `X_pᴴX_p = τ_p·I`.
pub fn ls_from_observation(y: &CVector, pilot: &PilotBlock) -> CVector {
    let scale = 1.0 / (pilot.pilot_power.sqrt() * pilot.tau_p() as f64);
    pilot.x_p.adjoint() * y * Complex64::from(scale)
}

pub fn ls_estimate<R: Rng + ?Sized>(
    h: &CVector,
    pilot: &PilotBlock,
    beta_bar: &[f64],
    rng: &mut R,
) -> Result<ChannelEstimate> {
    if !(pilot.pilot_power > 0.0) {
        return Err(Error::invalid("pilot power must be positive"));
    }
    let (y, _) = pilot_observation(h, pilot, rng)?;
    ChannelEstimate::new(ls_from_observation(&y, pilot), beta_bar, pilot.energy())
}

/// Rate of the exponential law of `|ĥ|²` for a single group:
/// `ρ_pτ_p / (ρ_pτ_pβ̄ + 1)`.
pub fn estimate_energy_law(beta_bar: &[f64], pilot: &PilotBlock) -> Result<f64> {
    if beta_bar.len() != 1 || pilot.n_groups() != 1 {
        return Err(Error::Unsupported(
            "the estimate-energy law is only available for a single group".into(),
        ));
    }
    let e = pilot.energy();
    Ok(e / (e * beta_bar[0] + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn scalar_pilot() {
        let p = make_pilot_block(1, 1, 1.0).unwrap();
        assert_eq!(p.x_p, CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn pilot_columns_are_orthogonal() {
        for (tau, ng) in [(2, 2), (4, 2), (4, 4), (3, 3), (7, 4), (10, 1)] {
            let p = make_pilot_block(tau, ng, 1.0).unwrap();
            let gram = p.x_p.adjoint() * &p.x_p;
            let target = CMatrix::identity(ng, ng) * Complex64::from(tau as f64);
            let defect = (gram - target).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(defect < 1e-12, "tau={tau} ng={ng}: {defect}");
        }
        // quarter-turn entries are exact
        for (tau, ng) in [(2, 2), (4, 2), (4, 4)] {
            let p = make_pilot_block(tau, ng, 1.0).unwrap();
            let gram = p.x_p.adjoint() * &p.x_p;
            assert_eq!(gram, CMatrix::identity(ng, ng) * Complex64::from(tau as f64));
        }
    }

    #[test]
    fn short_pilot_is_infeasible() {
        assert!(matches!(make_pilot_block(1, 2, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(make_pilot_block(2, 2, 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn nonpositive_beta_is_rejected() {
        assert!(draw_effective_channel(&[1.0, 0.0], &mut seeded(1)).is_err());
    }

    #[test]
    fn near_noiseless_estimate() {
        let mut rng = seeded(2);
        let ch = draw_effective_channel(&[1.0, 2.0], &mut rng).unwrap();
        let pilot = make_pilot_block(2, 2, 5e11).unwrap();
        let est = ls_estimate(&ch.h, &pilot, &ch.cov_diag, &mut rng).unwrap();
        assert!((&est.h_hat - &ch.h).norm() < 1e-4);
    }

    #[test]
    fn single_group_conditional_stats() {
        let (beta, rho_p, tau_p) = (0.7, 3.0, 2usize);
        let e = rho_p * tau_p as f64;
        let (_, u, c) = conditional_stats(&[beta], e);
        assert!((u[0] - 1.0 / (1.0 + e * beta)).abs() < 1e-15);
        assert!((c[0] - beta / (1.0 + e * beta)).abs() < 1e-15);
    }

    #[test]
    fn conditional_stats_agree_with_matrix_algebra() {
        use nalgebra::DMatrix;
        let beta = [0.3, 1.7, 4.0];
        let e = 2.5;
        let (ce, u, c) = conditional_stats(&beta, e);
        let ce_m = DMatrix::<f64>::identity(3, 3) * ce;
        let ch_m = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&beta));
        let u_m = &ce_m * (&ce_m + &ch_m).try_inverse().unwrap();
        let c_m = (ce_m.try_inverse().unwrap() + ch_m.try_inverse().unwrap())
            .try_inverse()
            .unwrap();
        for k in 0..3 {
            assert!((u_m[(k, k)] - u[k]).abs() < 1e-12);
            assert!((c_m[(k, k)] - c[k]).abs() < 1e-12);
            assert!(u[k] > 0.0 && u[k] < 1.0);
        }
    }

    #[test]
    fn pilot_path_identity() {
        let mut rng = seeded(3);
        let ch = draw_effective_channel(&[0.5, 1.5], &mut rng).unwrap();
        let pilot = make_pilot_block(4, 2, 2.0).unwrap();
        let (y, w) = pilot_observation(&ch.h, &pilot, &mut rng).unwrap();
        let h_hat = ls_from_observation(&y, &pilot);
        let scale = 1.0 / (pilot.pilot_power.sqrt() * 4.0);
        let direct = &ch.h + pilot.x_p.adjoint() * &w * Complex64::from(scale);
        assert!((h_hat - direct).norm() < 1e-12);
    }

    #[test]
    fn energy_law_values() {
        let pilot = make_pilot_block(1, 1, 1.0).unwrap();
        assert_eq!(estimate_energy_law(&[1.0], &pilot).unwrap(), 0.5);
        let strong = make_pilot_block(1, 1, 1e9).unwrap();
        assert!((estimate_energy_law(&[2.0], &strong).unwrap() - 0.5).abs() < 1e-8);
        let two = make_pilot_block(2, 2, 1.0).unwrap();
        assert!(matches!(
            estimate_energy_law(&[1.0, 1.0], &two),
            Err(Error::Unsupported(_))
        ));
    }
}
