//! Monte-Carlo engine: outer network realizations, inner small-scale draws.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{Metric, ScenarioConfig};
use crate::channel::{draw_effective_channel, ls_estimate, make_pilot_block, PilotBlock};
use crate::deployment::{NetworkLayout, Point};
use crate::error::{Error, Result};
use crate::grouping::{group_large_scale, Grouping};
use crate::metrics::{
    coverage_ls_single, coverage_perfect, min_samples, outage_from_samples, outage_rate, prelog, quantile_sorted,
    threshold_from_coverage, OutageResult,
};
use crate::ostbc::OstbcCode;
use crate::propagation::{ap_gains, expand_to_antennas, terminal_components, ShadowMode, ShadowSampler};
use crate::registry::{DeploymentRequest, PowerRequest, Strategies};
use crate::rng::{stream, Purpose, SimRng};
use crate::snr::{lambda_ls, snr_ls, CsiMode};

/// Samples and outage statistics for one terminal of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// Linear SNR or rate samples in trial order.
    pub values: Vec<f64>,
    pub outage: OutageResult,
    /// Threshold from the closed-form coverage averaged over the network
    /// draws, when one exists for the scenario.
    pub analytic_gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSummary {
    pub rho: f64,
    pub rho_p_mean: f64,
    pub rho_d_mean: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub series: Vec<Series>,
    pub power: PowerSummary,
    pub wall_time: Duration,
}

impl RunResult {
    pub fn metric(&self) -> Metric {
        self.config.metric
    }
}

/// SHA-256 of the canonical config text.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_config_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Closed-form laws available for a terminal in one network realization.
#[derive(Debug, Clone, PartialEq)]
enum Law {
    /// Hyperexponential rates under perfect CSI.
    Perfect(Vec<f64>),
    /// Exponential rate under LS estimation with one group.
    LsSingle(f64),
}

struct TrialOutput {
    per_terminal: Vec<Vec<f64>>,
    laws: Vec<Option<Law>>,
    rho_p: f64,
    rho_d: f64,
}

struct Context<'a> {
    config: &'a ScenarioConfig,
    strategies: &'a Strategies,
    code: OstbcCode,
    rho: f64,
    region: crate::deployment::Region,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunResult> {
    run_scenario_with(config, &Strategies::standard())
}

pub fn run_scenario_with(config: &ScenarioConfig, strategies: &Strategies) -> Result<RunResult> {
    config.validate(strategies)?;
    let started = Instant::now();
    let ctx = Context {
        config,
        strategies,
        code: strategies.code(&config.code)?,
        rho: config.rho()?,
        region: config.region()?,
    };
    let trials: Vec<TrialOutput> = (0..config.outer as u64)
        .into_par_iter()
        .map(|t| run_trial(&ctx, t))
        .collect::<Result<_>>()?;

    let n_terms = config.terminals.len();
    let tau_p_eff = match config.csi {
        CsiMode::Perfect => 0,
        CsiMode::Ls => config.tau_p,
    };
    let mut series = Vec::with_capacity(n_terms);
    for k in 0..n_terms {
        let values: Vec<f64> = trials.iter().flat_map(|t| t.per_terminal[k].iter().copied()).collect();
        let label = if n_terms == 1 {
            config.name.clone()
        } else {
            format!("{}:t{}", config.name, k + 1)
        };
        let (outage, analytic_gamma) = match config.metric {
            Metric::Snr => {
                let outage = outage_from_samples(&values, config.epsilon, tau_p_eff, config.tau_c, &ctx.code)?;
                let laws: Option<Vec<&Law>> = trials.iter().map(|t| t.laws[k].as_ref()).collect();
                let analytic = match laws {
                    Some(laws) if config.rx_antennas == 1 => analytic_threshold(&laws, config.epsilon),
                    _ => None,
                };
                (outage, analytic)
            }
            Metric::GroupingRate => (median_rate(&values, config, &ctx.code), None),
        };
        series.push(Series {
            label,
            values,
            outage,
            analytic_gamma,
        });
    }
    let n = trials.len() as f64;
    let power = PowerSummary {
        rho: ctx.rho,
        rho_p_mean: trials.iter().map(|t| t.rho_p).sum::<f64>() / n,
        rho_d_mean: trials.iter().map(|t| t.rho_d).sum::<f64>() / n,
    };
    Ok(RunResult {
        config: config.clone(),
        config_hash: config_hash(config),
        series,
        power,
        wall_time: started.elapsed(),
    })
}

fn analytic_threshold(laws: &[&Law], epsilon: f64) -> Option<f64> {
    let coverage = |gamma: f64| -> Result<f64> {
        let mut total = 0.0;
        for law in laws {
            total += match law {
                Law::Perfect(l) => coverage_perfect(gamma, l)?,
                Law::LsSingle(l) => coverage_ls_single(gamma, &[*l])?,
            };
        }
        Ok(total / laws.len() as f64)
    };
    threshold_from_coverage(epsilon, coverage).ok()
}

/// Median of per-grouping rates, reported in the outage-result shape.
fn median_rate(values: &[f64], config: &ScenarioConfig, code: &OstbcCode) -> OutageResult {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = quantile_sorted(&sorted, 0.5);
    let pre = prelog(0, config.tau_c, code);
    let to_gamma = |rate: f64| 2f64.powf(rate / pre) - 1.0;
    OutageResult {
        epsilon: config.epsilon,
        gamma_eps: to_gamma(q.value),
        rate: q.value,
        n_trials: values.len(),
        ci_halfwidth: 0.5 * (q.hi - q.lo),
        gamma_lo: to_gamma(q.lo),
        gamma_hi: to_gamma(q.hi),
    }
}

fn run_trial(ctx: &Context<'_>, t: u64) -> Result<TrialOutput> {
    let cfg = ctx.config;
    let seed = cfg.seed;
    let request = DeploymentRequest {
        density: cfg.density,
        region: ctx.region,
        antennas_per_ap: cfg.antennas_per_ap,
    };
    let layout = ctx
        .strategies
        .deployments
        .get(&cfg.deployment)?
        .place(&request, &mut stream(seed, t, Purpose::Layout))?;
    let n_terms = cfg.terminals.len();
    let feasible = layout.n_antennas() >= ctx.code.n_groups;

    let (rho_p, rho_d) = match cfg.csi {
        CsiMode::Perfect => (0.0, ctx.rho),
        CsiMode::Ls => {
            let plan = ctx.strategies.powers.get(&cfg.power)?.plan(&PowerRequest {
                layout: &layout,
                path_loss: &cfg.path_loss,
                rho: ctx.rho,
                tau_p: cfg.tau_p,
                tau_c: cfg.tau_c,
                es: cfg.symbol_energy,
            })?;
            (plan.rho_p, plan.rho_d)
        }
    };

    if !feasible {
        let per = match cfg.metric {
            Metric::Snr => cfg.inner,
            Metric::GroupingRate => 1,
        };
        return Ok(TrialOutput {
            per_terminal: vec![vec![0.0; per]; n_terms],
            laws: vec![None; n_terms],
            rho_p,
            rho_d,
        });
    }

    let grouping = ctx.strategies.groupings.get(&cfg.grouping)?.group(
        &layout,
        ctx.code.n_groups,
        &mut stream(seed, t, Purpose::Grouping),
    )?;
    let shadows = shadow_losses(&layout, cfg, &mut stream(seed, t, Purpose::Shadow))?;

    let mut small = stream(seed, t, Purpose::SmallScale);
    let mut fallback = stream(seed, t, Purpose::Fallback);
    let pilot = match cfg.csi {
        CsiMode::Ls => Some(make_pilot_block(cfg.tau_p, ctx.code.n_groups, rho_p)?),
        CsiMode::Perfect => None,
    };
    let mut per_terminal = Vec::with_capacity(n_terms);
    let mut laws = Vec::with_capacity(n_terms);
    for (terminal, shadow) in cfg.terminals.iter().zip(&shadows) {
        let beta_bar = terminal_beta_bar(&layout, *terminal, shadow, &grouping, cfg)?;
        match cfg.metric {
            Metric::GroupingRate => {
                let rate = grouping_rate(&beta_bar, ctx.rho, cfg, &ctx.code, &mut fallback)?;
                per_terminal.push(vec![rate]);
                laws.push(None);
            }
            Metric::Snr => {
                let (draw, law) = match cfg.csi {
                    CsiMode::Perfect => {
                        let l = beta_bar
                            .iter()
                            .map(|b| 1.0 / (ctx.rho * cfg.symbol_energy * b))
                            .collect();
                        (Draw::Perfect, Some(Law::Perfect(l)))
                    }
                    CsiMode::Ls if ctx.code.n_groups == 1 => {
                        let l = lambda_ls(beta_bar[0], rho_p, cfg.tau_p as f64, rho_d, cfg.symbol_energy);
                        (Draw::Exponential(l), Some(Law::LsSingle(l)))
                    }
                    CsiMode::Ls => (Draw::Ls, None),
                };
                let mut samples = Vec::with_capacity(cfg.inner);
                for j in 0..cfg.inner {
                    let mut total = 0.0;
                    for _ in 0..cfg.rx_antennas {
                        total += branch_snr(ctx, draw, &beta_bar, pilot.as_ref(), rho_d, j, &mut small)?;
                    }
                    samples.push(total);
                }
                per_terminal.push(samples);
                laws.push(law);
            }
        }
    }
    Ok(TrialOutput {
        per_terminal,
        laws,
        rho_p,
        rho_d,
    })
}

/// Shadow losses (dB) per terminal and AP. AP-side components are shared
/// by all terminals of a realization.
fn shadow_losses(layout: &NetworkLayout, cfg: &ScenarioConfig, rng: &mut SimRng) -> Result<Vec<Vec<f64>>> {
    let n = cfg.terminals.len();
    match cfg.shadow.mode {
        ShadowMode::None => Ok(vec![vec![0.0; layout.n_aps()]; n]),
        ShadowMode::Uncorrelated => {
            let sampler = ShadowSampler::new(layout, cfg.terminals[0], cfg.shadow)?;
            Ok((0..n).map(|_| sampler.sample(rng)).collect())
        }
        ShadowMode::Correlated => {
            let sampler = ShadowSampler::new(layout, cfg.terminals[0], cfg.shadow)?;
            let a = terminal_components(&cfg.terminals, &cfg.shadow, rng)?;
            let b = sampler.ap_components(rng);
            Ok(a.iter().map(|&ak| sampler.combine(ak, &b)).collect())
        }
    }
}

fn terminal_beta_bar(
    layout: &NetworkLayout,
    terminal: Point,
    shadow_db: &[f64],
    grouping: &Grouping,
    cfg: &ScenarioConfig,
) -> Result<Vec<f64>> {
    let beta = expand_to_antennas(
        &ap_gains(layout, terminal, &cfg.path_loss, shadow_db),
        layout.antennas_per_ap,
    );
    group_large_scale(&beta, grouping)
}

/// How one receive branch's SNR is drawn.
#[derive(Debug, Clone, Copy)]
enum Draw {
    /// `ρE_s‖h‖²` over a fresh channel.
    Perfect,
    /// Directly from the exponential law with the given rate.
    Exponential(f64),
    /// Pilot phase, LS estimate and the general conditional SNR.
    Ls,
}

fn branch_snr(
    ctx: &Context<'_>,
    draw: Draw,
    beta_bar: &[f64],
    pilot: Option<&PilotBlock>,
    rho_d: f64,
    j: usize,
    rng: &mut SimRng,
) -> Result<f64> {
    let es = ctx.config.symbol_energy;
    match (draw, pilot) {
        (Draw::Exponential(lambda), _) => {
            let e: f64 = rng.sample(Exp1);
            Ok(e / lambda)
        }
        (Draw::Ls, Some(pilot)) => {
            let ch = draw_effective_channel(beta_bar, rng)?;
            let est = ls_estimate(&ch.h, pilot, beta_bar, rng)?;
            Ok(snr_ls(&ctx.code, j % ctx.code.n_symbols, &est, rho_d, es)?.value)
        }
        (Draw::Ls, None) => Err(Error::invalid("LS processing needs a pilot block")),
        (Draw::Perfect, _) => {
            let ch = draw_effective_channel(beta_bar, rng)?;
            Ok(rho_d * es * ch.h.norm_squared())
        }
    }
}

/// Outage rate of a terminal with perfect CSI for fixed per-group gains.
pub fn grouping_rate<R: Rng + ?Sized>(
    beta_bar: &[f64],
    rho: f64,
    cfg: &ScenarioConfig,
    code: &OstbcCode,
    rng: &mut R,
) -> Result<f64> {
    let es = cfg.symbol_energy;
    let lambdas: Vec<f64> = beta_bar.iter().map(|b| 1.0 / (rho * es * b)).collect();
    let gamma = match threshold_from_coverage(cfg.epsilon, |g| coverage_perfect(g, &lambdas)) {
        Ok(g) => g,
        Err(Error::DegenerateRates) => {
            let n = 20 * min_samples(cfg.epsilon);
            let mut draws: Vec<f64> = (0..n)
                .map(|_| lambdas.iter().map(|l| rng.sample::<f64, _>(Exp1) / l).sum())
                .collect();
            draws.sort_by(f64::total_cmp);
            quantile_sorted(&draws, cfg.epsilon).value
        }
        Err(e) => return Err(e),
    };
    outage_rate(gamma, 0, cfg.tau_c, code)
}
