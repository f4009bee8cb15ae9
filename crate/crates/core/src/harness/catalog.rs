//! Preset experiments, one per figure of the coverage study.

use super::config::{Metric, ScenarioConfig};
use crate::error::{Error, Result};
use crate::propagation::{ShadowMode, ShadowParams};
use crate::registry::fig7_terminals;
use crate::snr::CsiMode;

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub variants: Vec<ScenarioConfig>,
}

impl Experiment {
    /// Applies the same seed and trial counts to every variant.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        outer: Option<usize>,
        inner: Option<usize>,
        epsilon: Option<f64>,
    ) -> Self {
        for v in &mut self.variants {
            if let Some(s) = seed {
                v.seed = s;
            }
            if let Some(o) = outer {
                v.outer = o;
            }
            if let Some(i) = inner {
                v.inner = i;
            }
            if let Some(e) = epsilon {
                v.epsilon = e;
            }
        }
        self
    }

    pub fn variant(&self, name: &str) -> Option<&ScenarioConfig> {
        self.variants.iter().find(|v| v.name == name)
    }
}

fn named(name: String, base: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig { name, ..base.clone() }
}

/// Perfect CSI, no shadowing, one group, PPP at 20 APs/km².
pub fn basic() -> ScenarioConfig {
    ScenarioConfig::default()
}

/// Correlated shadowing, LS estimation with `τ_p = N_g`, optimized pilot
/// power, random grouping.
pub fn practical(code: &str, n_groups: usize) -> ScenarioConfig {
    ScenarioConfig {
        shadow: ShadowParams::default(),
        csi: CsiMode::Ls,
        code: code.into(),
        tau_p: n_groups,
        power: "optimized".into(),
        ..basic()
    }
}

fn fig3() -> Experiment {
    let mut variants = Vec::new();
    for density in [10.0, 20.0, 40.0, 80.0] {
        for deployment in ["hex", "ppp"] {
            let mut c = named(format!("fig3/{deployment}-d{density}"), &basic());
            c.deployment = deployment.into();
            c.density = density;
            variants.push(c);
        }
    }
    Experiment {
        name: "fig3",
        description: "hexagonal lattice vs PPP over AP density",
        variants,
    }
}

fn fig4() -> Experiment {
    let variants = [
        ("path-loss", ShadowMode::None),
        ("uncorrelated", ShadowMode::Uncorrelated),
        ("correlated", ShadowMode::Correlated),
    ]
    .into_iter()
    .map(|(label, mode)| {
        let mut c = named(format!("fig4/{label}"), &basic());
        c.shadow = ShadowParams {
            mode,
            ..ShadowParams::default()
        };
        c
    })
    .collect();
    Experiment {
        name: "fig4",
        description: "SNR under three large-scale fading models",
        variants,
    }
}

fn fig5() -> Experiment {
    let base = ScenarioConfig {
        power: "uniform".into(),
        ..practical("single", 1)
    };
    let mut variants = Vec::new();
    for tau_p in 1..=10 {
        let mut c = named(format!("fig5/ls-tp{tau_p}"), &base);
        c.tau_p = tau_p;
        variants.push(c);
    }
    let mut opt = named("fig5/optimized-tp1".into(), &base);
    opt.power = "optimized".into();
    variants.push(opt);
    let mut perfect = named("fig5/perfect".into(), &base);
    perfect.csi = CsiMode::Perfect;
    variants.push(perfect);
    Experiment {
        name: "fig5",
        description: "pilot length trade-off with equal pilot and data power",
        variants,
    }
}

fn fig6() -> Experiment {
    let mut nominal = named("fig6/nominal".into(), &practical("single", 1));
    nominal.power = "uniform".into();
    let mut variants = vec![
        nominal,
        named("fig6/single-optimized".into(), &practical("single", 1)),
        named("fig6/alamouti".into(), &practical("alamouti", 2)),
        named("fig6/rate34".into(), &practical("rate34", 4)),
    ];
    for (code, ng) in [("alamouti", 2), ("rate34", 4)] {
        let mut c = named(format!("fig6/{code}-neighbor"), &practical(code, ng));
        c.grouping = "neighbor".into();
        variants.push(c);
    }
    Experiment {
        name: "fig6",
        description: "transmit diversity and grouping strategies",
        variants,
    }
}

fn fig7() -> Experiment {
    let base = ScenarioConfig {
        deployment: "fig7".into(),
        region_half_width_km: 0.6,
        terminals: fig7_terminals(),
        code: "alamouti".into(),
        metric: Metric::GroupingRate,
        ..basic()
    };
    let random = named("fig7_positions/random".into(), &base);
    let mut neighbor = named("fig7_positions/neighbor".into(), &base);
    neighbor.grouping = "neighbor".into();
    Experiment {
        name: "fig7_positions",
        description: "fixed three-terminal layout, randomness over groupings only",
        variants: vec![random, neighbor],
    }
}

fn fig8() -> Experiment {
    let mut variants = Vec::new();
    for (code, ng) in [("single", 1), ("alamouti", 2), ("rate34", 4)] {
        for rx in [1, 2] {
            let mut c = named(format!("fig8/{code}-rx{rx}"), &practical(code, ng));
            c.rx_antennas = rx;
            variants.push(c);
        }
    }
    Experiment {
        name: "fig8",
        description: "receive diversity with two terminal antennas",
        variants,
    }
}

fn fig9() -> Experiment {
    let mut cell_free = named("fig9/cell-free".into(), &practical("alamouti", 2));
    cell_free.density = 1000.0;
    let mut cellular = named("fig9/cellular".into(), &practical("alamouti", 2));
    cellular.deployment = "hex".into();
    cellular.density = 10.0;
    cellular.antennas_per_ap = 100;
    Experiment {
        name: "fig9",
        description: "1000 antennas per km²: single-antenna PPP APs vs 100-antenna hex base stations",
        variants: vec![cell_free, cellular],
    }
}

pub fn experiment_catalog() -> Vec<Experiment> {
    vec![fig3(), fig4(), fig5(), fig6(), fig7(), fig8(), fig9()]
}

pub fn experiment(name: &str) -> Result<Experiment> {
    experiment_catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "scenario",
            name: name.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Strategies;

    #[test]
    fn presets_are_valid_and_round_trip() {
        let s = Strategies::standard();
        for e in experiment_catalog() {
            for v in &e.variants {
                v.validate(&s).unwrap_or_else(|err| panic!("{}: {err}", v.name));
                assert_eq!(&ScenarioConfig::parse(&v.to_config_string()).unwrap(), v);
            }
        }
    }

    #[test]
    fn fig9_antenna_density() {
        let e = experiment("fig9").unwrap();
        for v in &e.variants {
            assert_eq!(v.density * v.antennas_per_ap as f64, 1000.0);
            assert_eq!(v.code, "alamouti");
        }
        assert!(experiment("fig10").is_err());
    }
}
