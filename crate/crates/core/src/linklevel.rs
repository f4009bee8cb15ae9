//! Symbol-level simulation of the pilot and data phases.
//!
//! Everything here is brute force: fading is drawn per antenna, pilots and
//! code blocks are actually transmitted and the detector works on the
//! received samples. The closed forms in [`crate::snr`] are checked against
//! these estimates.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{ls_from_observation, make_pilot_block, pilot_observation, CVector, ChannelEstimate};
use crate::error::{Error, Result};
use crate::grouping::{group_large_scale, Grouping};
use crate::ostbc::{build_from_symbols, OstbcCode};
use crate::rng::complex_normal;
use crate::snr::{snr_ls, snr_perfect, theorem1_terms, CsiMode};
use crate::stats::mean_se;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPowers {
    pub rho_p: f64,
    pub rho_d: f64,
    pub tau_p: usize,
    pub es: f64,
}

impl LinkPowers {
    pub fn pilot_energy(&self) -> f64 {
        self.rho_p * self.tau_p as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub h: CVector,
    pub h_hat: CVector,
    pub symbols: Vec<Complex64>,
    /// Detector outputs `ŝ_n`.
    pub processed: Vec<Complex64>,
    /// `√ρ_d‖ĥ‖²`.
    pub gain: f64,
    pub eta_bar: Vec<f64>,
    pub eta_tilde: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub z_tilde: Vec<f64>,
}

impl TrialRecord {
    pub fn eta(&self, n: usize) -> Complex64 {
        Complex64::new(self.eta_bar[n], self.eta_tilde[n])
    }

    pub fn z(&self, n: usize) -> Complex64 {
        Complex64::new(self.z_bar[n], self.z_tilde[n])
    }

    /// Largest `|ŝ_n − (gain·s_n + η_n + z_n)|` over the block.
    pub fn reconstruction_error(&self) -> f64 {
        (0..self.symbols.len())
            .map(|n| (self.processed[n] - (self.symbols[n] * self.gain + self.eta(n) + self.z(n))).norm())
            .fold(0.0, f64::max)
    }
}

/// `v ↦ Re(ĥᴴA_nᴴv) + i·Im(ĥᴴB_nᴴv)` for every symbol index.
struct Detector {
    ra: Vec<CVector>,
    rb: Vec<CVector>,
}

impl Detector {
    fn new(code: &OstbcCode, h_hat: &CVector) -> Self {
        let ra = code.a.iter().map(|a| (a * h_hat).conjugate()).collect();
        let rb = code.b.iter().map(|b| (b * h_hat).conjugate()).collect();
        Detector { ra, rb }
    }

    fn apply(&self, n: usize, v: &CVector) -> Complex64 {
        Complex64::new(self.ra[n].dot(v).re, self.rb[n].dot(v).im)
    }
}

/// Data phase for given channel, estimate, symbols and receiver noise.
pub fn transmit_and_detect(
    code: &OstbcCode,
    h: &CVector,
    h_hat: &CVector,
    symbols: &[Complex64],
    w: &CVector,
    rho_d: f64,
) -> Result<TrialRecord> {
    if h.len() != code.n_groups || h_hat.len() != code.n_groups {
        return Err(Error::Dimension {
            expected: code.n_groups,
            got: h.len().max(h_hat.len()),
        });
    }
    if w.len() != code.block_len {
        return Err(Error::Dimension {
            expected: code.block_len,
            got: w.len(),
        });
    }
    let x = build_from_symbols(code, symbols)?;
    let sq = rho_d.sqrt();
    let y = &x * h * Complex64::from(sq) + w;
    let e = h_hat - h;
    let xe = &x * &e;
    let det = Detector::new(code, h_hat);

    let mut rec = TrialRecord {
        h: h.clone(),
        h_hat: h_hat.clone(),
        symbols: symbols.to_vec(),
        processed: Vec::with_capacity(code.n_symbols),
        gain: sq * h_hat.norm_squared(),
        eta_bar: Vec::with_capacity(code.n_symbols),
        eta_tilde: Vec::with_capacity(code.n_symbols),
        z_bar: Vec::with_capacity(code.n_symbols),
        z_tilde: Vec::with_capacity(code.n_symbols),
    };
    for n in 0..code.n_symbols {
        rec.processed.push(det.apply(n, &y));
        let eta = -sq * det.apply(n, &xe);
        let z = det.apply(n, w);
        rec.eta_bar.push(eta.re);
        rec.eta_tilde.push(eta.im);
        rec.z_bar.push(z.re);
        rec.z_tilde.push(z.im);
    }
    Ok(rec)
}

/// Per-group effective channel from independent per-antenna fading.
pub fn draw_grouped_channel<R: Rng + ?Sized>(beta: &[f64], grouping: &Grouping, rng: &mut R) -> Result<CVector> {
    if beta.len() != grouping.len() {
        return Err(Error::Dimension {
            expected: grouping.len(),
            got: beta.len(),
        });
    }
    let mut h = CVector::zeros(grouping.n_groups);
    for (&b, &g) in beta.iter().zip(&grouping.assignment) {
        h[g] += complex_normal(rng, b);
    }
    Ok(h)
}

/// Full forward simulation of one coherence interval.
pub fn run_trial<R: Rng + ?Sized>(
    code: &OstbcCode,
    grouping: &Grouping,
    beta: &[f64],
    powers: &LinkPowers,
    rng: &mut R,
) -> Result<TrialRecord> {
    if grouping.n_groups != code.n_groups {
        return Err(Error::Dimension {
            expected: code.n_groups,
            got: grouping.n_groups,
        });
    }
    let h = draw_grouped_channel(beta, grouping, rng)?;
    let pilot = make_pilot_block(powers.tau_p, code.n_groups, powers.rho_p)?;
    let (y_p, _) = pilot_observation(&h, &pilot, rng)?;
    let h_hat = ls_from_observation(&y_p, &pilot);
    let symbols: Vec<Complex64> = (0..code.n_symbols).map(|_| complex_normal(rng, powers.es)).collect();
    let w = CVector::from_fn(code.block_len, |_, _| complex_normal(rng, 1.0));
    transmit_and_detect(code, &h, &h_hat, &symbols, &w, powers.rho_d)
}

/// Monte-Carlo conditional moments given `ĥ`, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments {
    /// `E[s_n*·η_n | ĥ]`.
    pub cross: Complex64,
    pub cross_se: Complex64,
    /// `E[|η_n|² | ĥ]`.
    pub eta_power: f64,
    pub eta_power_se: f64,
    /// `E[|z_n|² | ĥ]`.
    pub z_power: f64,
    pub z_power_se: f64,
    pub n_draws: usize,
}

/// Draws `e | ĥ ~ CN(U_cond·ĥ, C_cond)`, fresh symbols and noise, and
/// averages the effective-noise terms of symbol `n`.
pub fn conditional_moments<R: Rng + ?Sized>(
    code: &OstbcCode,
    n: usize,
    estimate: &ChannelEstimate,
    powers: &LinkPowers,
    n_draws: usize,
    rng: &mut R,
) -> Result<ConditionalMoments> {
    if n_draws < 1000 {
        return Err(Error::SampleSize {
            needed: 1000,
            got: n_draws,
        });
    }
    if n >= code.n_symbols {
        return Err(Error::invalid(format!("symbol index {n} out of range")));
    }
    let h_hat = &estimate.h_hat;
    if h_hat.len() != code.n_groups {
        return Err(Error::Dimension {
            expected: code.n_groups,
            got: h_hat.len(),
        });
    }
    let det = Detector::new(code, h_hat);
    // row vectors ĥᴴA_nᴴA_k etc., so that the detector applied to X·e is a
    // short sum over k
    let proj = |r: &CVector, m: &crate::ostbc::CMatrix| -> CVector { m.transpose() * r };
    let pa: Vec<CVector> = code.a.iter().map(|a| proj(&det.ra[n], a)).collect();
    let pb: Vec<CVector> = code.b.iter().map(|b| proj(&det.ra[n], b)).collect();
    let qa: Vec<CVector> = code.a.iter().map(|a| proj(&det.rb[n], a)).collect();
    let qb: Vec<CVector> = code.b.iter().map(|b| proj(&det.rb[n], b)).collect();
    let mean_e: Vec<Complex64> = (0..h_hat.len()).map(|k| h_hat[k] * estimate.u_cond[k]).collect();
    let sq = powers.rho_d.sqrt();

    let mut cross_re = Vec::with_capacity(n_draws);
    let mut cross_im = Vec::with_capacity(n_draws);
    let mut eta_pow = Vec::with_capacity(n_draws);
    let mut z_pow = Vec::with_capacity(n_draws);
    let mut s = vec![Complex64::default(); code.n_symbols];
    for _ in 0..n_draws {
        let e = CVector::from_fn(h_hat.len(), |k, _| mean_e[k] + complex_normal(rng, estimate.c_cond[k]));
        for v in s.iter_mut() {
            *v = complex_normal(rng, powers.es);
        }
        let mut ta = Complex64::default();
        let mut tb = Complex64::default();
        for k in 0..code.n_symbols {
            ta += pa[k].dot(&e) * s[k].re + I * pb[k].dot(&e) * s[k].im;
            tb += qa[k].dot(&e) * s[k].re + I * qb[k].dot(&e) * s[k].im;
        }
        let eta = -sq * Complex64::new(ta.re, tb.im);
        let w = CVector::from_fn(code.block_len, |_, _| complex_normal(rng, 1.0));
        let z = det.apply(n, &w);
        let c = s[n].conj() * eta;
        cross_re.push(c.re);
        cross_im.push(c.im);
        eta_pow.push(eta.norm_sqr());
        z_pow.push(z.norm_sqr());
    }
    let (cr, cr_se) = mean_se(&cross_re);
    let (ci, ci_se) = mean_se(&cross_im);
    let (ep, ep_se) = mean_se(&eta_pow);
    let (zp, zp_se) = mean_se(&z_pow);
    Ok(ConditionalMoments {
        cross: Complex64::new(cr, ci),
        cross_se: Complex64::new(cr_se, ci_se),
        eta_power: ep,
        eta_power_se: ep_se,
        z_power: zp,
        z_power_se: zp_se,
        n_draws,
    })
}

/// Post-combining SINR measured from simulated detector outputs, with a
/// batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredSinr {
    pub value: f64,
    pub se: f64,
}

/// Maximum-ratio combining of several independently estimated receive
/// branches. Each branch is weighted by its effective gain over its
/// effective noise power, both taken from the closed forms.
pub fn mrc_conditional_sinr<R: Rng + ?Sized>(
    code: &OstbcCode,
    n: usize,
    estimates: &[ChannelEstimate],
    powers: &LinkPowers,
    n_draws: usize,
    rng: &mut R,
) -> Result<MeasuredSinr> {
    const BATCHES: usize = 10;
    if estimates.is_empty() {
        return Err(Error::invalid("MRC needs at least one branch"));
    }
    if n_draws < 1000 {
        return Err(Error::SampleSize {
            needed: 1000,
            got: n_draws,
        });
    }
    let mut weights = Vec::with_capacity(estimates.len());
    for est in estimates {
        let t = theorem1_terms(code, n, est, powers.rho_d, powers.es)?;
        let g = Complex64::from(powers.rho_d.sqrt() * t.z_power) + t.c_n;
        let noise = t.eta_power + t.z_power - powers.es * t.c_n.norm_sqr();
        weights.push(g.conj() / noise);
    }
    let per_batch = n_draws / BATCHES;
    let mut batch_values = Vec::with_capacity(BATCHES);
    let mut all = Vec::with_capacity(per_batch * BATCHES);
    for _ in 0..BATCHES {
        let mut pairs = Vec::with_capacity(per_batch);
        for _ in 0..per_batch {
            let symbols: Vec<Complex64> = (0..code.n_symbols).map(|_| complex_normal(rng, powers.es)).collect();
            let mut combined = Complex64::default();
            for (est, wgt) in estimates.iter().zip(&weights) {
                let e = CVector::from_fn(est.n_groups(), |k, _| {
                    est.h_hat[k] * est.u_cond[k] + complex_normal(rng, est.c_cond[k])
                });
                let h = &est.h_hat - e;
                let w = CVector::from_fn(code.block_len, |_, _| complex_normal(rng, 1.0));
                let rec = transmit_and_detect(code, &h, &est.h_hat, &symbols, &w, powers.rho_d)?;
                combined += wgt * rec.processed[n];
            }
            pairs.push((symbols[n], combined));
        }
        batch_values.push(sinr_from_pairs(&pairs, powers.es));
        all.extend(pairs);
    }
    let (_, se) = mean_se(&batch_values);
    Ok(MeasuredSinr {
        value: sinr_from_pairs(&all, powers.es),
        se,
    })
}

/// `E_s|g|²/E|ŝ − g·s|²` with `g = E[s*ŝ]/E_s`.
fn sinr_from_pairs(pairs: &[(Complex64, Complex64)], es: f64) -> f64 {
    let m = pairs.len() as f64;
    let g = pairs.iter().map(|(s, y)| s.conj() * y).sum::<Complex64>() / (m * es);
    let noise = pairs.iter().map(|(s, y)| (y - g * s).norm_sqr()).sum::<f64>() / m;
    es * g.norm_sqr() / noise
}

/// Sorted SNR samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Fraction of samples `≥ γ`.
    pub fn coverage(&self, gamma: f64) -> f64 {
        (self.len() - self.sorted.partition_point(|&v| v < gamma)) as f64 / self.len() as f64
    }

    /// Lower-interpolation quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let last = self.len() - 1;
        self.sorted[((p * last as f64).floor() as usize).min(last)]
    }
}

/// Fixed large-scale setting for [`empirical_snr_cdf`].
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub code: OstbcCode,
    pub grouping: Grouping,
    /// Per-antenna large-scale coefficients.
    pub beta: Vec<f64>,
    pub powers: LinkPowers,
    pub csi: CsiMode,
}

/// Per-symbol SNR over independent small-scale realizations. Under LS each
/// trial runs the pilot phase and evaluates the conditional SNR of symbol
/// `trial mod N_s`.
pub fn empirical_snr_cdf<R: Rng + ?Sized>(
    scenario: &LinkScenario,
    n_trials: usize,
    rng: &mut R,
) -> Result<EmpiricalCdf> {
    if n_trials < 1000 {
        return Err(Error::SampleSize {
            needed: 1000,
            got: n_trials,
        });
    }
    let code = &scenario.code;
    let p = &scenario.powers;
    let beta_bar = group_large_scale(&scenario.beta, &scenario.grouping)?;
    let pilot = match scenario.csi {
        CsiMode::Ls => Some(make_pilot_block(p.tau_p, code.n_groups, p.rho_p)?),
        CsiMode::Perfect => None,
    };
    let mut samples = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let h = draw_grouped_channel(&scenario.beta, &scenario.grouping, rng)?;
        let value = match &pilot {
            None => snr_perfect(&h, p.rho_d, p.es)?.value,
            Some(pilot) => {
                let (y, _) = pilot_observation(&h, pilot, rng)?;
                let est = ChannelEstimate::new(ls_from_observation(&y, pilot), &beta_bar, pilot.energy())?;
                snr_ls(code, t % code.n_symbols, &est, p.rho_d, p.es)?.value
            }
        };
        samples.push(value);
    }
    Ok(EmpiricalCdf::new(samples))
}
