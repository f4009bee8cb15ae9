//! Large-scale fading: three-slope COST-Hata path loss with optional
//! log-normal shadowing, mapped to per-antenna linear gains.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::deployment::{NetworkLayout, Point};
use crate::error::{Error, Result};
use crate::grouping::{group_large_scale, Grouping};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    /// Carrier frequency, MHz.
    pub carrier_mhz: f64,
    /// AP antenna height, m.
    pub ap_height_m: f64,
    /// Terminal antenna height, m.
    pub terminal_height_m: f64,
    /// Reference distance, km.
    pub d_ref_km: f64,
    /// End of the flat segment, km.
    pub d_inner_km: f64,
    /// Start of the exponent-3.5 segment, km.
    pub d_outer_km: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams {
            carrier_mhz: 1900.0,
            ap_height_m: 15.0,
            terminal_height_m: 1.5,
            d_ref_km: 1.0,
            d_inner_km: 0.01,
            d_outer_km: 0.05,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier frequency", self.carrier_mhz),
            ("AP height", self.ap_height_m),
            ("terminal height", self.terminal_height_m),
            ("reference distance", self.d_ref_km),
            ("inner break distance", self.d_inner_km),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.d_inner_km < self.d_outer_km) {
            return Err(Error::invalid("inner break distance must be below the outer one"));
        }
        Ok(())
    }

    /// Loss at the reference distance, dB.
    pub fn reference_loss_db(&self) -> f64 {
        let lf = self.carrier_mhz.log10();
        46.3 + 33.9 * lf - 13.82 * self.ap_height_m.log10() - (1.1 * lf - 0.7) * self.terminal_height_m + 1.56 * lf
            - 0.8
    }
}

/// Path loss in dB at distance `d_km`.
pub fn path_loss_db(d_km: f64, params: &PathLossParams) -> f64 {
    let l = params.reference_loss_db();
    let rel = |d: f64| (d / params.d_ref_km).log10();
    if d_km <= params.d_inner_km {
        l + 15.0 * rel(params.d_outer_km) + 20.0 * rel(params.d_inner_km)
    } else if d_km <= params.d_outer_km {
        l + 15.0 * rel(params.d_outer_km) + 20.0 * rel(d_km)
    } else {
        l + 35.0 * rel(d_km)
    }
}

pub fn db_to_linear_loss(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowMode {
    None,
    Uncorrelated,
    Correlated,
}

impl fmt::Display for ShadowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShadowMode::None => "none",
            ShadowMode::Uncorrelated => "uncorrelated",
            ShadowMode::Correlated => "correlated",
        })
    }
}

impl FromStr for ShadowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ShadowMode::None),
            "uncorrelated" => Ok(ShadowMode::Uncorrelated),
            "correlated" => Ok(ShadowMode::Correlated),
            other => Err(Error::UnknownStrategy {
                kind: "shadow mode",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowParams {
    pub mode: ShadowMode,
    /// Standard deviation of the shadowing, dB.
    pub sigma_db: f64,
    /// Weight of the terminal-side component.
    pub delta: f64,
    /// Decorrelation distance, km.
    pub decorrelation_km: f64,
    /// Number of APs nearest to the terminal whose AP-side components are
    /// drawn jointly. The rest are drawn independently.
    pub max_joint: usize,
}

impl Default for ShadowParams {
    fn default() -> Self {
        ShadowParams {
            mode: ShadowMode::Correlated,
            sigma_db: 8.0,
            delta: 0.5,
            decorrelation_km: 0.2,
            max_joint: 256,
        }
    }
}

impl ShadowParams {
    pub fn none() -> Self {
        ShadowParams {
            mode: ShadowMode::None,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_db >= 0.0 && self.sigma_db.is_finite()) {
            return Err(Error::invalid("shadow sigma must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid("shadow delta must lie in [0, 1]"));
        }
        if self.mode == ShadowMode::Correlated && !(self.decorrelation_km > 0.0) {
            return Err(Error::invalid("decorrelation distance must be positive"));
        }
        Ok(())
    }

    /// Correlation between two AP-side (or terminal-side) components.
    pub fn correlation(&self, distance_km: f64) -> f64 {
        2f64.powf(-distance_km / self.decorrelation_km)
    }
}

/// Draws shadowing values for one layout and terminal. The covariance of the
/// AP-side components is factorized once at construction.
#[derive(Debug, Clone)]
pub struct ShadowSampler {
    params: ShadowParams,
    n_aps: usize,
    joint: Vec<usize>,
    factor: Option<DMatrix<f64>>,
}

impl ShadowSampler {
    pub fn new(layout: &NetworkLayout, terminal: Point, params: ShadowParams) -> Result<Self> {
        params.validate()?;
        let n_aps = layout.n_aps();
        let mut sampler = ShadowSampler {
            params,
            n_aps,
            joint: Vec::new(),
            factor: None,
        };
        if params.mode != ShadowMode::Correlated || n_aps == 0 {
            return Ok(sampler);
        }

        let mut by_distance: Vec<(f64, usize)> = layout
            .positions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.distance_squared(&terminal), i))
            .collect();
        let k = params.max_joint.min(n_aps);
        if k == 0 {
            return Ok(sampler);
        }
        if k < n_aps {
            by_distance.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            by_distance.truncate(k);
        }
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let joint: Vec<usize> = by_distance.into_iter().map(|(_, i)| i).collect();

        let var = params.sigma_db * params.sigma_db;
        let mut cov = DMatrix::from_fn(k, k, |r, c| {
            let d = layout.positions[joint[r]].distance(&layout.positions[joint[c]]);
            var * params.correlation(d)
        });
        let factor = match cov.clone().cholesky() {
            Some(ch) => ch.unpack(),
            None => {
                for i in 0..k {
                    cov[(i, i)] += 1e-10 * var;
                }
                cov.cholesky().ok_or(Error::CovarianceFactorization)?.unpack()
            }
        };
        sampler.joint = joint;
        sampler.factor = Some(factor);
        Ok(sampler)
    }

    /// Shadow loss per AP in dB, drawing a fresh terminal-side component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let a = match self.params.mode {
            ShadowMode::Correlated => self.params.sigma_db * rng.sample::<f64, _>(StandardNormal),
            _ => 0.0,
        };
        self.sample_with_terminal_component(a, rng)
    }

    /// Shadow loss per AP in dB given the terminal-side component `a` (dB).
    pub fn sample_with_terminal_component<R: Rng + ?Sized>(&self, a: f64, rng: &mut R) -> Vec<f64> {
        let sigma = self.params.sigma_db;
        match self.params.mode {
            ShadowMode::None => vec![0.0; self.n_aps],
            ShadowMode::Uncorrelated => (0..self.n_aps)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            ShadowMode::Correlated => {
                let b = self.ap_components(rng);
                self.combine(a, &b)
            }
        }
    }

    /// AP-side components `b_m` (dB), shared by all terminals of a network
    /// realization. Only meaningful for correlated shadowing.
    pub fn ap_components<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut b = vec![0.0; self.n_aps];
        let mut joint = vec![false; self.n_aps];
        if let Some(factor) = &self.factor {
            let z = DVector::from_fn(self.joint.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let correlated = factor * z;
            for (k, &ap) in self.joint.iter().enumerate() {
                b[ap] = correlated[k];
                joint[ap] = true;
            }
        }
        for (ap, value) in b.iter_mut().enumerate() {
            if !joint[ap] {
                *value = self.params.sigma_db * rng.sample::<f64, _>(StandardNormal);
            }
        }
        b
    }

    /// `√δ·a + √(1−δ)·b_m` for every AP.
    pub fn combine(&self, a: f64, b: &[f64]) -> Vec<f64> {
        let (wa, wb) = (self.params.delta.sqrt(), (1.0 - self.params.delta).sqrt());
        b.iter().map(|bm| wa * a + wb * bm).collect()
    }
}

/// Per-AP shadow losses (dB) for a terminal.
pub fn shadow_field<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    terminal: Point,
    params: ShadowParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(ShadowSampler::new(layout, terminal, params)?.sample(rng))
}

/// Jointly Gaussian terminal-side components for several terminals, with
/// correlation decaying in terminal separation.
pub fn terminal_components<R: Rng + ?Sized>(
    terminals: &[Point],
    params: &ShadowParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = terminals.len();
    if n == 0 || params.mode != ShadowMode::Correlated {
        return Ok(vec![0.0; n]);
    }
    let var = params.sigma_db * params.sigma_db;
    let cov = DMatrix::from_fn(n, n, |r, c| {
        var * params.correlation(terminals[r].distance(&terminals[c]))
    });
    let jittered = || {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += 1e-10 * var;
        }
        m
    };
    let factor = cov
        .clone()
        .cholesky()
        .or_else(|| jittered().cholesky())
        .ok_or(Error::CovarianceFactorization)?
        .unpack();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((factor * z).iter().copied().collect())
}

/// Linear large-scale coefficients per antenna plus their per-group sums.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub beta: Vec<f64>,
    pub beta_bar: Vec<f64>,
}

impl LargeScale {
    pub fn total(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// Per-AP linear coefficients from path loss and shadow losses (dB).
pub fn ap_gains(layout: &NetworkLayout, terminal: Point, path_loss: &PathLossParams, shadow_db: &[f64]) -> Vec<f64> {
    layout
        .positions
        .iter()
        .zip(shadow_db)
        .map(|(p, v)| db_to_linear_loss(path_loss_db(p.distance(&terminal), path_loss) + v))
        .collect()
}

/// Repeats each AP's coefficient for every antenna it carries.
pub fn expand_to_antennas(per_ap: &[f64], antennas_per_ap: usize) -> Vec<f64> {
    per_ap
        .iter()
        .flat_map(|&b| std::iter::repeat_n(b, antennas_per_ap))
        .collect()
}

pub fn large_scale<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    terminal: Point,
    path_loss: &PathLossParams,
    shadow: ShadowParams,
    grouping: &Grouping,
    rng: &mut R,
) -> Result<LargeScale> {
    if grouping.len() != layout.n_antennas() {
        return Err(Error::Dimension {
            expected: layout.n_antennas(),
            got: grouping.len(),
        });
    }
    let v = shadow_field(layout, terminal, shadow, rng)?;
    let beta = expand_to_antennas(&ap_gains(layout, terminal, path_loss, &v), layout.antennas_per_ap);
    let beta_bar = group_large_scale(&beta, grouping)?;
    Ok(LargeScale { beta, beta_bar })
}
