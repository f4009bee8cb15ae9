//! Energy budget per coherence interval and the pilot/data power split.

use crate::deployment::{default_resolution, worst_position_in, NetworkLayout, Region};
use crate::error::{Error, Result};
use crate::propagation::{db_to_linear_loss, path_loss_db, PathLossParams};
use crate::snr::lambda_ls;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPlan {
    /// Nominal normalized power.
    pub rho: f64,
    /// Energy per coherence interval, `ρ·τ_c`.
    pub energy: f64,
    pub tau_p: usize,
    pub tau_c: usize,
    pub rho_p: f64,
    pub rho_d: f64,
}

impl PowerPlan {
    /// Pilot and data symbols at the nominal power.
    pub fn uniform(rho: f64, tau_p: usize, tau_c: usize) -> Result<Self> {
        Self::with_pilot_power(rho, rho, tau_p, tau_c)
    }

    pub fn with_pilot_power(rho: f64, rho_p: f64, tau_p: usize, tau_c: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("nominal power must be positive, got {rho}")));
        }
        let energy = rho * tau_c as f64;
        let rho_d = data_power(energy, rho_p, tau_p, tau_c)?;
        Ok(PowerPlan {
            rho,
            energy,
            tau_p,
            tau_c,
            rho_p,
            rho_d,
        })
    }

    /// `ρ_p·τ_p + ρ_d·(τ_c − τ_p) − E`.
    pub fn budget_residual(&self) -> f64 {
        self.rho_p * self.tau_p as f64 + self.rho_d * (self.tau_c - self.tau_p) as f64 - self.energy
    }
}

/// `ρ_d = (E − ρ_pτ_p)/(τ_c − τ_p)`.
pub fn data_power(energy: f64, rho_p: f64, tau_p: usize, tau_c: usize) -> Result<f64> {
    if tau_p == 0 || tau_p >= tau_c {
        return Err(Error::invalid(format!(
            "need 0 < τ_p < τ_c, got τ_p={tau_p}, τ_c={tau_c}"
        )));
    }
    if !(rho_p > 0.0 && rho_p.is_finite()) {
        return Err(Error::invalid(format!("pilot power must be positive, got {rho_p}")));
    }
    let pilot_energy = rho_p * tau_p as f64;
    if pilot_energy >= energy {
        return Err(Error::BudgetExhausted {
            pilot_energy,
            budget: energy,
        });
    }
    Ok((energy - pilot_energy) / (tau_c - tau_p) as f64)
}

/// `λ^LS` as a function of the pilot power under the energy budget.
pub fn lambda_under_budget(beta: f64, energy: f64, rho_p: f64, tau_p: usize, tau_c: usize, es: f64) -> Result<f64> {
    let rho_d = data_power(energy, rho_p, tau_p, tau_c)?;
    Ok(lambda_ls(beta, rho_p, tau_p as f64, rho_d, es))
}

/// Pilot power minimising `λ^LS` for a single group with gain `beta`.
///
/// With `P = ρ_pτ_p` the stationarity condition is
/// `c1·P² + 2·c0·P − c0·E = 0`, `c0 = 1 + βaE`, `c1 = β(1 − a)`,
/// `a = E_s/(τ_c − τ_p)`.
pub fn optimal_pilot_power(beta: f64, energy: f64, tau_p: usize, tau_c: usize, es: f64) -> Result<f64> {
    if tau_p == 0 || tau_p >= tau_c {
        return Err(Error::invalid(format!(
            "need 0 < τ_p < τ_c, got τ_p={tau_p}, τ_c={tau_c}"
        )));
    }
    for (name, v) in [("gain", beta), ("energy", energy), ("symbol energy", es)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let a = es / (tau_c - tau_p) as f64;
    let c0 = 1.0 + beta * a * energy;
    let c1 = beta * (1.0 - a);
    let p = c0 * energy / (c0 + (c0 * c0 + c1 * c0 * energy).sqrt());
    let tau = tau_p as f64;
    if p.is_finite() && p > 0.0 && p < energy {
        return Ok(p / tau);
    }
    let f = |rho_p: f64| lambda_under_budget(beta, energy, rho_p, tau_p, tau_c, es).unwrap_or(f64::INFINITY);
    Ok(golden_section(f, 0.0, energy / tau, 1e-12))
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > rel_tol * hi {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Path-loss-only gain of all antennas at the worst position in `window`.
pub fn worst_case_gain(layout: &NetworkLayout, path_loss: &PathLossParams, window: Region) -> Result<f64> {
    let (tw, _) = worst_position_in(layout, window, default_resolution(layout))?;
    let per_ap: f64 = layout
        .positions
        .iter()
        .map(|p| db_to_linear_loss(path_loss_db(p.distance(&tw), path_loss)))
        .sum();
    Ok(per_ap * layout.antennas_per_ap as f64)
}

/// Power split chosen for the worst-served position of the layout.
pub fn optimize_pilot_power(
    layout: &NetworkLayout,
    path_loss: &PathLossParams,
    rho: f64,
    tau_p: usize,
    tau_c: usize,
    es: f64,
) -> Result<PowerPlan> {
    optimize_pilot_power_in(layout, path_loss, layout.region, rho, tau_p, tau_c, es)
}

/// As [`optimize_pilot_power`], searching for the worst position in `window`.
pub fn optimize_pilot_power_in(
    layout: &NetworkLayout,
    path_loss: &PathLossParams,
    window: Region,
    rho: f64,
    tau_p: usize,
    tau_c: usize,
    es: f64,
) -> Result<PowerPlan> {
    let beta_w = worst_case_gain(layout, path_loss, window)?;
    plan_for_gain(beta_w, rho, tau_p, tau_c, es)
}

pub fn plan_for_gain(beta: f64, rho: f64, tau_p: usize, tau_c: usize, es: f64) -> Result<PowerPlan> {
    let energy = rho * tau_c as f64;
    let rho_p = optimal_pilot_power(beta, energy, tau_p, tau_c, es)?;
    PowerPlan::with_pilot_power(rho, rho_p, tau_p, tau_c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_split() {
        let p = PowerPlan::uniform(7.0, 3, 300).unwrap();
        assert!((p.rho_d - 7.0).abs() < 1e-12);
        assert!(p.budget_residual().abs() < 1e-9);
    }

    #[test]
    fn data_power_arithmetic() {
        let rho = 2.0;
        let d = data_power(300.0 * rho, 100.0 * rho, 1, 300).unwrap();
        assert!((d - 200.0 * rho / 299.0).abs() < 1e-12);
        assert!(matches!(
            data_power(300.0, 300.0, 1, 300),
            Err(Error::BudgetExhausted { .. })
        ));
        let tiny = data_power(300.0, 300.0 * (1.0 - 1e-12), 1, 300).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-9);
        assert!(data_power(300.0, 1.0, 0, 300).is_err());
    }

    #[test]
    fn optimum_beats_uniform_and_neighbours() {
        let (rho, tau_c, es) = (1.52e11, 300, 1.0);
        let energy = rho * tau_c as f64;
        for beta in [1e-14, 1e-12, 1e-10] {
            for tau_p in [1, 2, 5] {
                let opt = optimal_pilot_power(beta, energy, tau_p, tau_c, es).unwrap();
                let l = |r: f64| lambda_under_budget(beta, energy, r, tau_p, tau_c, es).unwrap();
                assert!(l(opt) <= l(rho));
                assert!(l(opt) <= l(opt * 1.001));
                assert!(l(opt) <= l(opt * 0.999));
            }
        }
    }

    #[test]
    fn pilots_get_more_power_at_low_snr() {
        let plan = plan_for_gain(1e-13, 1.52e11, 1, 300, 1.0).unwrap();
        assert!(plan.rho_p > plan.rho_d);
        assert!(plan.budget_residual().abs() < 1e-6 * plan.energy);
    }
}
