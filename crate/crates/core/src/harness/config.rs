//! Scenario configuration and its flat `key = value` text form.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::deployment::{Point, Region};
use crate::error::{Error, Result};
use crate::metrics::min_samples;
use crate::propagation::{PathLossParams, ShadowMode, ShadowParams};
use crate::registry::Strategies;
use crate::snr::CsiMode;

const BOLTZMANN: f64 = 1.380_649e-23;

/// `ρ = p / (B·T·k_B·F)` with the noise figure given in dB.
pub fn normalized_power(p_watt: f64, bandwidth_hz: f64, temperature_k: f64, noise_figure_db: f64) -> Result<f64> {
    for (name, v) in [
        ("transmit power", p_watt),
        ("bandwidth", bandwidth_hz),
        ("temperature", temperature_k),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if !noise_figure_db.is_finite() {
        return Err(Error::invalid("noise figure must be finite"));
    }
    let f = 10f64.powf(noise_figure_db / 10.0);
    Ok(p_watt / (bandwidth_hz * temperature_k * BOLTZMANN * f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Per-symbol SNR over network and small-scale realizations.
    Snr,
    /// Outage rate per grouping draw on a fixed layout.
    GroupingRate,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Snr => "snr",
            Metric::GroupingRate => "grouping_rate",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(Metric::Snr),
            "grouping_rate" => Ok(Metric::GroupingRate),
            other => Err(Error::UnknownStrategy {
                kind: "metric",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub deployment: String,
    /// APs per km².
    pub density: f64,
    pub region_half_width_km: f64,
    pub antennas_per_ap: usize,
    pub terminals: Vec<Point>,
    pub shadow: ShadowParams,
    pub code: String,
    pub grouping: String,
    pub csi: CsiMode,
    pub tau_c: usize,
    pub tau_p: usize,
    pub power: String,
    pub rx_antennas: usize,
    pub epsilon: f64,
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
    pub metric: Metric,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub temperature_k: f64,
    pub noise_figure_db: f64,
    pub symbol_energy: f64,
    pub path_loss: PathLossParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "basic".into(),
            deployment: "ppp".into(),
            density: 20.0,
            region_half_width_km: 5.0,
            antennas_per_ap: 1,
            terminals: vec![Point::ORIGIN],
            shadow: ShadowParams::none(),
            code: "single".into(),
            grouping: "random".into(),
            csi: CsiMode::Perfect,
            tau_c: 300,
            tau_p: 1,
            power: "uniform".into(),
            rx_antennas: 1,
            epsilon: 1e-3,
            outer: 1000,
            inner: 100,
            seed: 1,
            metric: Metric::Snr,
            tx_power_w: 1e-3,
            bandwidth_hz: 200e3,
            temperature_k: 300.0,
            noise_figure_db: 9.0,
            symbol_energy: 1.0,
            path_loss: PathLossParams::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "deployment",
    "density",
    "region_half_width_km",
    "antennas_per_ap",
    "terminals",
    "shadow",
    "shadow_sigma_db",
    "shadow_delta",
    "shadow_decorrelation_km",
    "shadow_max_joint",
    "code",
    "grouping",
    "csi",
    "tau_c",
    "tau_p",
    "power",
    "rx_antennas",
    "epsilon",
    "outer",
    "inner",
    "seed",
    "metric",
    "tx_power_w",
    "bandwidth_hz",
    "temperature_k",
    "noise_figure_db",
    "symbol_energy",
    "carrier_mhz",
    "ap_height_m",
    "terminal_height_m",
    "d_ref_km",
    "d_inner_km",
    "d_outer_km",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

fn parse_terminals(value: &str) -> Result<Vec<Point>> {
    value
        .split(';')
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("terminal '{pair}' is not 'x,y'")))?;
            Ok(Point::new(
                parse_value("terminals", x.trim())?,
                parse_value("terminals", y.trim())?,
            ))
        })
        .collect()
}

impl ScenarioConfig {
    /// `ρ` from the transmit power and noise parameters.
    pub fn rho(&self) -> Result<f64> {
        normalized_power(
            self.tx_power_w,
            self.bandwidth_hz,
            self.temperature_k,
            self.noise_figure_db,
        )
    }

    pub fn region(&self) -> Result<Region> {
        Region::new(self.region_half_width_km)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "name" => self.name = v.to_string(),
            "deployment" => self.deployment = v.to_string(),
            "density" => self.density = parse_value(key, v)?,
            "region_half_width_km" => self.region_half_width_km = parse_value(key, v)?,
            "antennas_per_ap" => self.antennas_per_ap = parse_value(key, v)?,
            "terminals" => self.terminals = parse_terminals(v)?,
            "shadow" => self.shadow.mode = v.parse::<ShadowMode>()?,
            "shadow_sigma_db" => self.shadow.sigma_db = parse_value(key, v)?,
            "shadow_delta" => self.shadow.delta = parse_value(key, v)?,
            "shadow_decorrelation_km" => self.shadow.decorrelation_km = parse_value(key, v)?,
            "shadow_max_joint" => self.shadow.max_joint = parse_value(key, v)?,
            "code" => self.code = v.to_string(),
            "grouping" => self.grouping = v.to_string(),
            "csi" => self.csi = v.parse()?,
            "tau_c" => self.tau_c = parse_value(key, v)?,
            "tau_p" => self.tau_p = parse_value(key, v)?,
            "power" => self.power = v.to_string(),
            "rx_antennas" => self.rx_antennas = parse_value(key, v)?,
            "epsilon" => self.epsilon = parse_value(key, v)?,
            "outer" => self.outer = parse_value(key, v)?,
            "inner" => self.inner = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "metric" => self.metric = v.parse()?,
            "tx_power_w" => self.tx_power_w = parse_value(key, v)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_value(key, v)?,
            "temperature_k" => self.temperature_k = parse_value(key, v)?,
            "noise_figure_db" => self.noise_figure_db = parse_value(key, v)?,
            "symbol_energy" => self.symbol_energy = parse_value(key, v)?,
            "carrier_mhz" => self.path_loss.carrier_mhz = parse_value(key, v)?,
            "ap_height_m" => self.path_loss.ap_height_m = parse_value(key, v)?,
            "terminal_height_m" => self.path_loss.terminal_height_m = parse_value(key, v)?,
            "d_ref_km" => self.path_loss.d_ref_km = parse_value(key, v)?,
            "d_inner_km" => self.path_loss.d_inner_km = parse_value(key, v)?,
            "d_outer_km" => self.path_loss.d_outer_km = parse_value(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "name" => self.name.clone(),
            "deployment" => self.deployment.clone(),
            "density" => self.density.to_string(),
            "region_half_width_km" => self.region_half_width_km.to_string(),
            "antennas_per_ap" => self.antennas_per_ap.to_string(),
            "terminals" => self
                .terminals
                .iter()
                .map(|p| format!("{},{}", p.x, p.y))
                .collect::<Vec<_>>()
                .join(";"),
            "shadow" => self.shadow.mode.to_string(),
            "shadow_sigma_db" => self.shadow.sigma_db.to_string(),
            "shadow_delta" => self.shadow.delta.to_string(),
            "shadow_decorrelation_km" => self.shadow.decorrelation_km.to_string(),
            "shadow_max_joint" => self.shadow.max_joint.to_string(),
            "code" => self.code.clone(),
            "grouping" => self.grouping.clone(),
            "csi" => self.csi.to_string(),
            "tau_c" => self.tau_c.to_string(),
            "tau_p" => self.tau_p.to_string(),
            "power" => self.power.clone(),
            "rx_antennas" => self.rx_antennas.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "outer" => self.outer.to_string(),
            "inner" => self.inner.to_string(),
            "seed" => self.seed.to_string(),
            "metric" => self.metric.to_string(),
            "tx_power_w" => self.tx_power_w.to_string(),
            "bandwidth_hz" => self.bandwidth_hz.to_string(),
            "temperature_k" => self.temperature_k.to_string(),
            "noise_figure_db" => self.noise_figure_db.to_string(),
            "symbol_energy" => self.symbol_energy.to_string(),
            "carrier_mhz" => self.path_loss.carrier_mhz.to_string(),
            "ap_height_m" => self.path_loss.ap_height_m.to_string(),
            "terminal_height_m" => self.path_loss.terminal_height_m.to_string(),
            "d_ref_km" => self.path_loss.d_ref_km.to_string(),
            "d_inner_km" => self.path_loss.d_inner_km.to_string(),
            "d_outer_km" => self.path_loss.d_outer_km.to_string(),
            _ => unreachable!("key list and accessor are out of sync"),
        }
    }

    /// Parses the `key = value` form. Keys not given keep their defaults;
    /// unknown or repeated keys are rejected. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ScenarioConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: key '{key}' given twice", lineno + 1)));
            }
            config
                .set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(config)
    }

    /// Canonical text form: every key, in a fixed order.
    pub fn to_config_string(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn validate(&self, strategies: &Strategies) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.name.is_empty() || self.name.contains([',', '\n', '"', '#']) {
            return bad(format!(
                "scenario name '{}' must be non-empty without , # or quotes",
                self.name
            ));
        }
        strategies.deployments.get(&self.deployment)?;
        strategies.groupings.get(&self.grouping)?;
        strategies.powers.get(&self.power)?;
        let code = strategies.code(&self.code)?;
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return bad(format!("density must be non-negative, got {}", self.density));
        }
        if self.deployment == "hex" && self.density <= 0.0 {
            return bad("hexagonal deployment needs a positive density".into());
        }
        self.region()?;
        if self.antennas_per_ap == 0 {
            return bad("antennas_per_ap must be at least 1".into());
        }
        if self.terminals.is_empty() {
            return bad("at least one terminal is required".into());
        }
        let region = self.region()?;
        if let Some(t) = self.terminals.iter().find(|t| !region.contains(t)) {
            return bad(format!("terminal ({}, {}) lies outside the region", t.x, t.y));
        }
        self.shadow.validate()?;
        self.path_loss.validate()?;
        if self.rx_antennas == 0 {
            return bad("rx_antennas must be at least 1".into());
        }
        if self.tau_p >= self.tau_c {
            return bad(format!("tau_p = {} must be below tau_c = {}", self.tau_p, self.tau_c));
        }
        if self.csi == CsiMode::Ls && self.tau_p < code.n_groups {
            return bad(format!(
                "tau_p = {} cannot carry {} orthogonal pilots",
                self.tau_p, code.n_groups
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.outer == 0 || self.inner == 0 {
            return bad("outer and inner trial counts must be positive".into());
        }
        match self.metric {
            Metric::Snr => {
                let needed = min_samples(self.epsilon);
                if self.outer * self.inner < needed {
                    return bad(format!(
                        "{} samples are too few for epsilon = {}; need {needed}",
                        self.outer * self.inner,
                        self.epsilon
                    ));
                }
            }
            Metric::GroupingRate => {
                if self.csi != CsiMode::Perfect || self.shadow.mode != ShadowMode::None || self.rx_antennas != 1 {
                    return bad("grouping_rate needs perfect CSI, no shadowing and one receive antenna".into());
                }
            }
        }
        if !(self.symbol_energy > 0.0 && self.symbol_energy.is_finite()) {
            return bad("symbol_energy must be positive".into());
        }
        self.rho()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_power() {
        let rho = ScenarioConfig::default().rho().unwrap();
        assert!((rho / 1.52e11 - 1.0).abs() < 0.01, "{rho}");
        assert!((10.0 * rho.log10() - 111.8).abs() < 0.05);
    }

    #[test]
    fn power_scaling() {
        let base = normalized_power(1e-3, 200e3, 300.0, 9.0).unwrap();
        let f6 = normalized_power(1e-3, 200e3, 300.0, 6.0).unwrap();
        assert!((f6 / base - 10f64.powf(0.3)).abs() < 1e-12);
        let wide = normalized_power(1e-3, 400e3, 300.0, 9.0).unwrap();
        assert!((wide / base - 0.5).abs() < 1e-15);
        assert!(normalized_power(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn round_trip() {
        let mut c = ScenarioConfig {
            terminals: vec![Point::new(0.1, -0.25), Point::new(1.0 / 3.0, 0.0)],
            epsilon: 0.01,
            ..Default::default()
        };
        c.shadow.mode = ShadowMode::Correlated;
        let text = c.to_config_string();
        assert_eq!(ScenarioConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn comments_and_errors() {
        let c = ScenarioConfig::parse("# header\n\ndensity = 40 # trailing\n").unwrap();
        assert_eq!(c.density, 40.0);
        assert!(matches!(ScenarioConfig::parse("colour = red"), Err(Error::Config(_))));
        assert!(matches!(
            ScenarioConfig::parse("density = 1\ndensity = 2"),
            Err(Error::Config(_))
        ));
        assert!(matches!(ScenarioConfig::parse("density"), Err(Error::Config(_))));
        assert!(matches!(ScenarioConfig::parse("outer = many"), Err(Error::Config(_))));
    }

    #[test]
    fn validation() {
        let s = Strategies::standard();
        assert!(ScenarioConfig::default().validate(&s).is_ok());
        let mut c = ScenarioConfig {
            code: "alamouti".into(),
            csi: CsiMode::Ls,
            tau_p: 1,
            ..Default::default()
        };
        assert!(c.validate(&s).is_err());
        c.tau_p = 2;
        assert!(c.validate(&s).is_ok());
        c.outer = 10;
        assert!(c.validate(&s).is_err());
        let c = ScenarioConfig {
            grouping: "smart".into(),
            ..Default::default()
        };
        assert!(matches!(c.validate(&s), Err(Error::UnknownStrategy { .. })));
    }
}
