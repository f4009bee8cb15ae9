//! Access-point layouts: Poisson point process, hexagonal lattice, and the
//! grid search for the worst-served position.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

/// Square region centred at the origin, side `2 * half_width` km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    half_width: f64,
}

impl Region {
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid(format!(
                "region half-width must be positive, got {half_width}"
            )));
        }
        Ok(Region { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }
}

impl Default for Region {
    fn default() -> Self {
        Region { half_width: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeploymentKind {
    Ppp,
    Hexagonal,
    /// Hand-placed or imported positions.
    Fixed,
}

impl fmt::Display for DeploymentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeploymentKind::Ppp => "ppp",
            DeploymentKind::Hexagonal => "hexagonal",
            DeploymentKind::Fixed => "fixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    pub positions: Vec<Point>,
    pub antennas_per_ap: usize,
    pub kind: DeploymentKind,
    pub region: Region,
}

impl NetworkLayout {
    pub fn new(positions: Vec<Point>, antennas_per_ap: usize, kind: DeploymentKind, region: Region) -> Result<Self> {
        if antennas_per_ap == 0 {
            return Err(Error::invalid("antennas per AP must be at least 1"));
        }
        if let Some(p) = positions.iter().find(|p| !region.contains(p)) {
            return Err(Error::invalid(format!(
                "AP at ({}, {}) lies outside the region",
                p.x, p.y
            )));
        }
        Ok(NetworkLayout {
            positions,
            antennas_per_ap,
            kind,
            region,
        })
    }

    pub fn n_aps(&self) -> usize {
        self.positions.len()
    }

    pub fn n_antennas(&self) -> usize {
        self.positions.len() * self.antennas_per_ap
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// AP index that owns antenna `antenna`.
    pub fn ap_of_antenna(&self, antenna: usize) -> usize {
        antenna / self.antennas_per_ap
    }

    pub fn with_antennas(mut self, antennas_per_ap: usize) -> Result<Self> {
        if antennas_per_ap == 0 {
            return Err(Error::invalid("antennas per AP must be at least 1"));
        }
        self.antennas_per_ap = antennas_per_ap;
        Ok(self)
    }

    /// AP density implied by the layout, per km².
    pub fn density(&self) -> f64 {
        self.n_aps() as f64 / self.region.area()
    }
}

/// Nearest-neighbour spacing of a hexagonal lattice with the given density.
pub fn hex_spacing(density: f64) -> f64 {
    (2.0 / (3f64.sqrt() * density)).sqrt()
}

pub fn place_ppp<R: Rng + ?Sized>(density: f64, region: Region, rng: &mut R) -> Result<NetworkLayout> {
    if !(density >= 0.0 && density.is_finite()) {
        return Err(Error::invalid(format!("density must be non-negative, got {density}")));
    }
    let mean = density * region.area();
    let count = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::invalid(e.to_string()))?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    let hw = region.half_width();
    let positions = (0..count)
        .map(|_| Point::new(rng.random_range(-hw..=hw), rng.random_range(-hw..=hw)))
        .collect();
    NetworkLayout::new(positions, 1, DeploymentKind::Ppp, region)
}

/// Hexagonal lattice with one point at the origin, shifted by half a cell
/// along `(a1 + a2) / 2`.
pub fn place_hex(density: f64, region: Region) -> Result<NetworkLayout> {
    place_hex_with_phase(density, region, 0.5, 0.5)
}

/// Hexagonal lattice translated by `u·a1 + v·a2` where `a1`, `a2` are the
/// primitive lattice vectors and `u, v ∈ [0, 1)`.
pub fn place_hex_with_phase(density: f64, region: Region, u: f64, v: f64) -> Result<NetworkLayout> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::invalid(format!("hex density must be positive, got {density}")));
    }
    let s = hex_spacing(density);
    let row_height = s * 3f64.sqrt() / 2.0;
    let (ox, oy) = (u * s + v * s / 2.0, v * row_height);
    let hw = region.half_width();

    let j_min = ((-hw - oy) / row_height).floor() as i64 - 1;
    let j_max = ((hw - oy) / row_height).ceil() as i64 + 1;
    let mut positions = Vec::new();
    for j in j_min..=j_max {
        let y = j as f64 * row_height + oy;
        if y.abs() > hw {
            continue;
        }
        let shift = j as f64 * s / 2.0 + ox;
        let i_min = ((-hw - shift) / s).floor() as i64 - 1;
        let i_max = ((hw - shift) / s).ceil() as i64 + 1;
        for i in i_min..=i_max {
            let x = i as f64 * s + shift;
            if x.abs() <= hw {
                positions.push(Point::new(x, y));
            }
        }
    }
    NetworkLayout::new(positions, 1, DeploymentKind::Hexagonal, region)
}

/// Default grid resolution for [`worst_position`]: a tenth of the hexagonal
/// spacing at the layout's density.
pub fn default_resolution(layout: &NetworkLayout) -> f64 {
    if layout.is_empty() {
        return layout.region.half_width() / 50.0;
    }
    hex_spacing(layout.density()) / 10.0
}

/// Grid point maximising the distance to its closest AP over the whole
/// layout region.
pub fn worst_position(layout: &NetworkLayout, grid_resolution: f64) -> Result<Point> {
    worst_position_in(layout, layout.region, grid_resolution).map(|(p, _)| p)
}

/// Same as [`worst_position`] but searching `window` only. Returns the point
/// and its distance to the closest AP.
pub fn worst_position_in(layout: &NetworkLayout, window: Region, grid_resolution: f64) -> Result<(Point, f64)> {
    if layout.is_empty() {
        return Err(Error::NoAccessPoints);
    }
    if !(grid_resolution > 0.0 && grid_resolution.is_finite()) {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let hw = window.half_width();
    let n = (2.0 * hw / grid_resolution).ceil() as usize + 1;
    let step = 2.0 * hw / (n - 1) as f64;
    let index = SpatialIndex::new(&layout.positions, layout.region);

    let mut best = (Point::new(-hw, -hw), -1.0);
    for row in 0..n {
        let y = -hw + row as f64 * step;
        for col in 0..n {
            let p = Point::new(-hw + col as f64 * step, y);
            let (_, d2) = index.nearest(&p).expect("index is non-empty");
            if d2 > best.1 {
                best = (p, d2);
            }
        }
    }
    Ok((best.0, best.1.sqrt()))
}

/// Uniform bucket grid for nearest-neighbour queries with optional removal.
/// Ties on distance are broken by the lower point index.
pub(crate) struct SpatialIndex {
    points: Vec<Point>,
    min: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
    live: usize,
}

impl SpatialIndex {
    pub(crate) fn new(points: &[Point], region: Region) -> Self {
        let hw = region.half_width();
        let mut min = Point::new(-hw, -hw);
        let mut max = Point::new(hw, hw);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        let width = (max.x - min.x).max(1e-9);
        let height = (max.y - min.y).max(1e-9);
        let target = (width * height / points.len().max(1) as f64).sqrt() * 1.5;
        let cell = target.max(width.max(height) / 4096.0);
        let nx = ((width / cell).floor() as usize + 1).max(1);
        let ny = ((height / cell).floor() as usize + 1).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let mut index = SpatialIndex {
            points: points.to_vec(),
            min,
            cell,
            nx,
            ny,
            cells: Vec::new(),
            live: points.len(),
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = index.cell_of(p);
            cells[cy * nx + cx].push(i);
        }
        index.cells = cells;
        index
    }

    fn cell_of(&self, p: &Point) -> (usize, usize) {
        let cx = ((p.x - self.min.x) / self.cell).floor();
        let cy = ((p.y - self.min.y) / self.cell).floor();
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        (clamp(cx, self.nx), clamp(cy, self.ny))
    }

    pub(crate) fn len(&self) -> usize {
        self.live
    }

    pub(crate) fn remove(&mut self, idx: usize) {
        let (cx, cy) = self.cell_of(&self.points[idx]);
        let bucket = &mut self.cells[cy * self.nx + cx];
        if let Some(pos) = bucket.iter().position(|&j| j == idx) {
            bucket.swap_remove(pos);
            self.live -= 1;
        }
    }

    pub(crate) fn nearest(&self, p: &Point) -> Option<(usize, f64)> {
        self.nearest_where(p, |_| true)
    }

    /// Closest live point accepted by `keep`, as `(index, squared distance)`.
    pub(crate) fn nearest_where(&self, p: &Point, keep: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        if self.live == 0 {
            return None;
        }
        let (cx, cy) = self.cell_of(p);
        let (cx, cy) = (cx as i64, cy as i64);
        let max_ring = self.nx.max(self.ny) as i64;
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            let mut visit = |x: i64, y: i64| {
                if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                    return;
                }
                for &j in &self.cells[y as usize * self.nx + x as usize] {
                    if !keep(j) {
                        continue;
                    }
                    let d2 = p.distance_squared(&self.points[j]);
                    let better = match best {
                        None => true,
                        Some((bj, bd)) => d2 < bd || (d2 == bd && j < bj),
                    };
                    if better {
                        best = Some((j, d2));
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy);
            } else {
                for x in (cx - ring)..=(cx + ring) {
                    visit(x, cy - ring);
                    visit(x, cy + ring);
                }
                for y in (cy - ring + 1)..=(cy + ring - 1) {
                    visit(cx - ring, y);
                    visit(cx + ring, y);
                }
            }
            if let Some((_, bd)) = best {
                let reach = ring as f64 * self.cell;
                if bd < reach * reach {
                    break;
                }
            }
        }
        best
    }
}

/// Writes one row per AP (`x_km,y_km,antennas`), or one row per antenna with
/// an extra `group` column when a grouping is given.
pub fn write_layout_csv<W: Write>(
    writer: W,
    layout: &NetworkLayout,
    grouping: Option<&crate::grouping::Grouping>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match grouping {
        None => {
            w.write_record(["x_km", "y_km", "antennas"])?;
            for p in &layout.positions {
                w.write_record([p.x.to_string(), p.y.to_string(), layout.antennas_per_ap.to_string()])?;
            }
        }
        Some(g) => {
            if g.assignment.len() != layout.n_antennas() {
                return Err(Error::Dimension {
                    expected: layout.n_antennas(),
                    got: g.assignment.len(),
                });
            }
            w.write_record(["x_km", "y_km", "antennas", "group"])?;
            for (antenna, group) in g.assignment.iter().enumerate() {
                let p = layout.positions[layout.ap_of_antenna(antenna)];
                w.write_record([
                    p.x.to_string(),
                    p.y.to_string(),
                    layout.antennas_per_ap.to_string(),
                    group.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_layout_csv`]. Rows carrying a
/// `group` column are per antenna; consecutive rows of one AP are merged.
pub fn read_layout_csv<R: Read>(
    reader: R,
    region: Region,
) -> Result<(NetworkLayout, Option<crate::grouping::Grouping>)> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (xi, yi, ai) = match (column("x_km"), column("y_km"), column("antennas")) {
        (Some(x), Some(y), Some(a)) => (x, y, a),
        _ => return Err(Error::Config("layout CSV needs x_km, y_km, antennas columns".into())),
    };
    let gi = column("group");

    let parse = |s: &str, what: &str| -> Result<f64> {
        f64::from_str(s.trim()).map_err(|_| Error::Config(format!("bad {what} value '{s}'")))
    };
    let mut positions: Vec<Point> = Vec::new();
    let mut antennas: Option<usize> = None;
    let mut groups = Vec::new();
    for record in r.records() {
        let record = record?;
        let p = Point::new(parse(&record[xi], "x_km")?, parse(&record[yi], "y_km")?);
        let m: usize = record[ai]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad antennas value '{}'", &record[ai])))?;
        match antennas {
            None => antennas = Some(m),
            Some(prev) if prev != m => return Err(Error::Config("all APs must have the same antenna count".into())),
            _ => {}
        }
        if let Some(gi) = gi {
            groups.push(
                record[gi]
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad group value '{}'", &record[gi])))?,
            );
            // per-antenna rows: a new AP starts every `m` rows
            if (groups.len() - 1) % m == 0 {
                positions.push(p);
            }
        } else {
            positions.push(p);
        }
    }
    let m = antennas.unwrap_or(1);
    let layout = NetworkLayout::new(positions, m, DeploymentKind::Fixed, region)?;
    let grouping = match gi {
        Some(_) => {
            let n_groups = groups.iter().max().map_or(1, |g| g + 1);
            Some(crate::grouping::Grouping::new(groups, n_groups)?)
        }
        None => None,
    };
    Ok((layout, grouping))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn region10() -> Region {
        Region::new(5.0).unwrap()
    }

    #[test]
    fn zero_density_ppp_is_empty() {
        let layout = place_ppp(0.0, region10(), &mut seeded(1)).unwrap();
        assert!(layout.is_empty());
    }

    #[test]
    fn negative_density_is_rejected() {
        assert!(matches!(
            place_ppp(-1.0, region10(), &mut seeded(1)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(place_hex(0.0, region10()).is_err());
        assert!(Region::new(0.0).is_err());
    }

    #[test]
    fn ppp_mean_count_matches_intensity() {
        let mut rng = seeded(11);
        let draws = 1000;
        let total: usize = (0..draws)
            .map(|_| place_ppp(20.0, region10(), &mut rng).unwrap().n_aps())
            .sum();
        let mean = total as f64 / draws as f64;
        let tol = 3.0 * 2000f64.sqrt();
        assert!((mean - 2000.0).abs() < tol, "mean count {mean}");
    }

    #[test]
    fn hex_spacing_at_default_density() {
        let s = hex_spacing(20.0);
        assert!((s - 0.240).abs() < 0.001, "spacing {s}");
    }

    #[test]
    fn hex_interior_neighbors_are_equidistant() {
        let layout = place_hex(20.0, Region::new(1.0).unwrap()).unwrap();
        let s = hex_spacing(20.0);
        for (i, p) in layout.positions.iter().enumerate() {
            if p.x.abs() > 0.6 || p.y.abs() > 0.6 {
                continue;
            }
            let mut d: Vec<f64> = layout
                .positions
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(q))
                .collect();
            d.sort_by(f64::total_cmp);
            for (k, dk) in d.iter().take(6).enumerate() {
                assert!((dk - s).abs() < 1e-12, "neighbor {k} at {dk}");
            }
            assert!(d[6] > s * 1.5);
        }
    }

    #[test]
    fn hex_count_within_one_boundary_ring() {
        let region = region10();
        let layout = place_hex(20.0, region).unwrap();
        let expected = 20.0 * region.area();
        let ring = 8.0 * region.half_width() / hex_spacing(20.0);
        assert!((layout.n_aps() as f64 - expected).abs() <= ring);
    }

    #[test]
    fn hex_is_deterministic() {
        let a = place_hex(13.0, region10()).unwrap();
        let b = place_hex(13.0, region10()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worst_position_single_ap_is_a_corner() {
        let region = Region::new(1.0).unwrap();
        let layout = NetworkLayout::new(vec![Point::ORIGIN], 1, DeploymentKind::Fixed, region).unwrap();
        let p = worst_position(&layout, 0.1).unwrap();
        assert_eq!(p.x.abs(), 1.0);
        assert_eq!(p.y.abs(), 1.0);
        // lowest row-major index among the four tied corners
        assert_eq!(p, Point::new(-1.0, -1.0));
    }

    #[test]
    fn worst_position_on_hex_hits_triangle_circumcenter() {
        let region = Region::new(1.0).unwrap();
        let layout = place_hex(20.0, region).unwrap();
        let s = hex_spacing(20.0);
        let window = Region::new(0.5).unwrap();
        let (_, d) = worst_position_in(&layout, window, s / 50.0).unwrap();
        let circumradius = s / 3f64.sqrt();
        assert!((d - circumradius).abs() < s / 50.0, "d={d}, R={circumradius}");
    }

    #[test]
    fn worst_position_never_sits_on_an_ap() {
        let region = Region::new(1.0).unwrap();
        let layout = NetworkLayout::new(
            vec![Point::new(-1.0, -1.0), Point::new(0.0, 0.0)],
            1,
            DeploymentKind::Fixed,
            region,
        )
        .unwrap();
        let p = worst_position(&layout, 0.5).unwrap();
        assert!(layout.positions.iter().all(|ap| ap.distance(&p) > 0.0));
    }

    #[test]
    fn worst_position_empty_layout_errors() {
        let layout = NetworkLayout::new(vec![], 1, DeploymentKind::Ppp, region10()).unwrap();
        assert!(matches!(worst_position(&layout, 0.1), Err(Error::NoAccessPoints)));
    }

    #[test]
    fn spatial_index_matches_brute_force() {
        let region = Region::new(2.0).unwrap();
        let mut rng = seeded(3);
        let layout = place_ppp(15.0, region, &mut rng).unwrap();
        let index = SpatialIndex::new(&layout.positions, region);
        for _ in 0..500 {
            let q = Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let brute = layout
                .positions
                .iter()
                .enumerate()
                .map(|(i, p)| (i, q.distance_squared(p)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!(index.nearest(&q).unwrap(), brute);
        }
    }

    #[test]
    fn layout_csv_round_trip() {
        let region = Region::new(1.0).unwrap();
        let layout = place_ppp(10.0, region, &mut seeded(5)).unwrap();
        let mut buf = Vec::new();
        write_layout_csv(&mut buf, &layout, None).unwrap();
        let (back, grouping) = read_layout_csv(buf.as_slice(), region).unwrap();
        assert!(grouping.is_none());
        assert_eq!(back.positions, layout.positions);
        assert_eq!(back.antennas_per_ap, 1);
    }
}
