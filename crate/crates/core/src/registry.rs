//! Named strategies selectable from a scenario config.

use std::collections::BTreeMap;

use rand::Rng;

use crate::deployment::{hex_spacing, place_hex_with_phase, place_ppp, DeploymentKind, NetworkLayout, Point, Region};
use crate::error::{Error, Result};
use crate::grouping::{neighbor_grouping, random_grouping, Grouping};
use crate::ostbc::OstbcCode;
use crate::power::{optimize_pilot_power_in, PowerPlan};
use crate::propagation::PathLossParams;
use crate::rng::SimRng;

/// Name-indexed set of boxed strategies.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, strategy: Box<T>) {
        self.entries.insert(name.to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

pub struct DeploymentRequest {
    pub density: f64,
    pub region: Region,
    pub antennas_per_ap: usize,
}

pub trait DeploymentStrategy: Send + Sync {
    fn place(&self, request: &DeploymentRequest, rng: &mut SimRng) -> Result<NetworkLayout>;
}

pub struct PppDeployment;

impl DeploymentStrategy for PppDeployment {
    fn place(&self, request: &DeploymentRequest, rng: &mut SimRng) -> Result<NetworkLayout> {
        place_ppp(request.density, request.region, rng)?.with_antennas(request.antennas_per_ap)
    }
}

/// Hexagonal lattice with a uniformly random phase per realization.
pub struct HexDeployment;

impl DeploymentStrategy for HexDeployment {
    fn place(&self, request: &DeploymentRequest, rng: &mut SimRng) -> Result<NetworkLayout> {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        place_hex_with_phase(request.density, request.region, u, v)?.with_antennas(request.antennas_per_ap)
    }
}

/// A hand-placed layout that ignores density and randomness.
pub struct FixedDeployment {
    pub positions: Vec<Point>,
}

impl DeploymentStrategy for FixedDeployment {
    fn place(&self, request: &DeploymentRequest, _rng: &mut SimRng) -> Result<NetworkLayout> {
        NetworkLayout::new(
            self.positions.clone(),
            request.antennas_per_ap,
            DeploymentKind::Fixed,
            request.region,
        )
    }
}

/// AP positions (km) of the three-terminal grouping example. Terminal 1
/// sits next to the two closest APs of the layout.
pub fn fig7_positions() -> Vec<Point> {
    [
        (-0.215, 0.16),
        (-0.18, 0.135),
        (0.27, 0.22),
        (-0.45, 0.4),
        (-0.1, 0.42),
        (0.15, 0.45),
        (0.45, 0.42),
        (-0.5, 0.05),
        (-0.3, -0.1),
        (0.0, 0.1),
        (0.1, -0.05),
        (0.4, 0.0),
        (0.5, -0.25),
        (-0.45, -0.4),
        (-0.15, -0.3),
        (0.25, -0.5),
        (0.3, -0.15),
        (-0.05, -0.55),
    ]
    .into_iter()
    .map(|(x, y)| Point::new(x, y))
    .collect()
}

/// Terminal positions (km) of the grouping example.
pub fn fig7_terminals() -> Vec<Point> {
    vec![Point::new(-0.2, 0.15), Point::new(0.25, 0.2), Point::new(0.05, -0.35)]
}

pub trait GroupingStrategy: Send + Sync {
    fn group(&self, layout: &NetworkLayout, n_groups: usize, rng: &mut SimRng) -> Result<Grouping>;
}

pub struct RandomGrouping;

impl GroupingStrategy for RandomGrouping {
    fn group(&self, layout: &NetworkLayout, n_groups: usize, rng: &mut SimRng) -> Result<Grouping> {
        random_grouping(layout.n_antennas(), n_groups, rng)
    }
}

pub struct NeighborGrouping;

impl GroupingStrategy for NeighborGrouping {
    fn group(&self, layout: &NetworkLayout, n_groups: usize, _rng: &mut SimRng) -> Result<Grouping> {
        neighbor_grouping(layout, n_groups)
    }
}

pub struct PowerRequest<'a> {
    pub layout: &'a NetworkLayout,
    pub path_loss: &'a PathLossParams,
    pub rho: f64,
    pub tau_p: usize,
    pub tau_c: usize,
    pub es: f64,
}

pub trait PowerStrategy: Send + Sync {
    fn plan(&self, request: &PowerRequest<'_>) -> Result<PowerPlan>;
}

pub struct UniformPower;

impl PowerStrategy for UniformPower {
    fn plan(&self, r: &PowerRequest<'_>) -> Result<PowerPlan> {
        PowerPlan::uniform(r.rho, r.tau_p, r.tau_c)
    }
}

/// Worst-position heuristic. The search window is the central half of the
/// region, capped at ten lattice spacings.
pub struct OptimizedPower;

impl OptimizedPower {
    pub fn window(layout: &NetworkLayout) -> Result<Region> {
        let hw = 0.5 * layout.region.half_width();
        let cap = 10.0 * hex_spacing(layout.density());
        Region::new(if cap.is_finite() { hw.min(cap) } else { hw })
    }
}

impl PowerStrategy for OptimizedPower {
    fn plan(&self, r: &PowerRequest<'_>) -> Result<PowerPlan> {
        if r.layout.is_empty() {
            return PowerPlan::uniform(r.rho, r.tau_p, r.tau_c);
        }
        let window = Self::window(r.layout)?;
        optimize_pilot_power_in(r.layout, r.path_loss, window, r.rho, r.tau_p, r.tau_c, r.es)
    }
}

/// Every strategy family known to the harness.
pub struct Strategies {
    pub deployments: Registry<dyn DeploymentStrategy>,
    pub groupings: Registry<dyn GroupingStrategy>,
    pub powers: Registry<dyn PowerStrategy>,
    pub codes: Registry<dyn Fn() -> OstbcCode + Send + Sync>,
}

impl Strategies {
    pub fn standard() -> Self {
        let mut deployments: Registry<dyn DeploymentStrategy> = Registry::new("deployment");
        deployments.register("ppp", Box::new(PppDeployment));
        deployments.register("hex", Box::new(HexDeployment));
        deployments.register(
            "fig7",
            Box::new(FixedDeployment {
                positions: fig7_positions(),
            }),
        );

        let mut groupings: Registry<dyn GroupingStrategy> = Registry::new("grouping");
        groupings.register("random", Box::new(RandomGrouping));
        groupings.register("neighbor", Box::new(NeighborGrouping));

        let mut powers: Registry<dyn PowerStrategy> = Registry::new("power");
        powers.register("uniform", Box::new(UniformPower));
        powers.register("optimized", Box::new(OptimizedPower));

        let mut codes: Registry<dyn Fn() -> OstbcCode + Send + Sync> = Registry::new("code");
        codes.register("single", Box::new(OstbcCode::single));
        codes.register("alamouti", Box::new(OstbcCode::alamouti));
        codes.register("rate34", Box::new(OstbcCode::rate_three_quarters));

        Strategies {
            deployments,
            groupings,
            powers,
            codes,
        }
    }

    pub fn code(&self, name: &str) -> Result<OstbcCode> {
        Ok(self.codes.get(name)?())
    }
}

impl Default for Strategies {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::closest_pair;
    use crate::rng::seeded;

    #[test]
    fn lookup() {
        let s = Strategies::standard();
        assert_eq!(s.code("rate34").unwrap().n_groups, 4);
        assert!(matches!(
            s.groupings.get("smart"),
            Err(Error::UnknownStrategy { kind: "grouping", .. })
        ));
        assert_eq!(s.powers.names(), vec!["optimized", "uniform"]);
    }

    #[test]
    fn fig7_closest_pair_is_next_to_terminal_one() {
        let layout = FixedDeployment {
            positions: fig7_positions(),
        }
        .place(
            &DeploymentRequest {
                density: 0.0,
                region: Region::new(0.6).unwrap(),
                antennas_per_ap: 1,
            },
            &mut seeded(0),
        )
        .unwrap();
        assert_eq!(closest_pair(&layout), Some((0, 1)));
        let t1 = fig7_terminals()[0];
        let mut d: Vec<f64> = layout.positions.iter().map(|p| p.distance(&t1)).collect();
        d.sort_by(f64::total_cmp);
        assert!(d[1] < 0.03 && d[2] > 0.15);
    }

    #[test]
    fn hex_phase_moves_the_lattice() {
        let req = DeploymentRequest {
            density: 20.0,
            region: Region::new(1.0).unwrap(),
            antennas_per_ap: 1,
        };
        let mut rng = seeded(3);
        let a = HexDeployment.place(&req, &mut rng).unwrap();
        let b = HexDeployment.place(&req, &mut rng).unwrap();
        assert_ne!(a.positions, b.positions);
    }
}
