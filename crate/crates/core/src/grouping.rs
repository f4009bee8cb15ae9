//! Partitioning AP antennas into the groups that jointly transmit one code.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::deployment::{NetworkLayout, SpatialIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    /// Group index of each antenna, in antenna order.
    pub assignment: Vec<usize>,
    pub n_groups: usize,
}

impl Grouping {
    pub fn new(assignment: Vec<usize>, n_groups: usize) -> Result<Self> {
        if n_groups == 0 {
            return Err(Error::invalid("number of groups must be at least 1"));
        }
        if let Some(&g) = assignment.iter().find(|&&g| g >= n_groups) {
            return Err(Error::invalid(format!("group index {g} out of range 0..{n_groups}")));
        }
        Ok(Grouping { assignment, n_groups })
    }

    pub fn single(n_antennas: usize) -> Self {
        Grouping {
            assignment: vec![0; n_antennas],
            n_groups: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }
}

fn check_feasible(n_antennas: usize, n_groups: usize) -> Result<()> {
    if n_groups == 0 {
        return Err(Error::invalid("number of groups must be at least 1"));
    }
    if n_antennas < n_groups {
        return Err(Error::Infeasible(format!(
            "{n_antennas} antennas cannot fill {n_groups} groups"
        )));
    }
    Ok(())
}

/// Uniformly random balanced partition: shuffle, then deal out blocks whose
/// sizes differ by at most one.
pub fn random_grouping<R: Rng + ?Sized>(n_antennas: usize, n_groups: usize, rng: &mut R) -> Result<Grouping> {
    check_feasible(n_antennas, n_groups)?;
    let mut order: Vec<usize> = (0..n_antennas).collect();
    order.shuffle(rng);
    let mut assignment = vec![0; n_antennas];
    let base = n_antennas / n_groups;
    let extra = n_antennas % n_groups;
    let mut cursor = 0;
    for g in 0..n_groups {
        let size = base + usize::from(g < extra);
        for &antenna in &order[cursor..cursor + size] {
            assignment[antenna] = g;
        }
        cursor += size;
    }
    Grouping::new(assignment, n_groups)
}

/// Chain heuristic that puts geographically close APs in different groups.
///
/// Starts at the lower-index AP of the closest pair, then keeps hopping from
/// the last assigned AP to its nearest unassigned AP. Groups are handed out
/// cyclically per antenna, so an AP with `M >= n_groups` antennas covers
/// every group.
pub fn neighbor_grouping(layout: &NetworkLayout, n_groups: usize) -> Result<Grouping> {
    check_feasible(layout.n_antennas(), n_groups)?;
    if layout.positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::invalid("AP positions must be finite"));
    }
    let order = neighbor_chain(layout);
    let m = layout.antennas_per_ap;
    let mut assignment = vec![0; layout.n_antennas()];
    let mut n_assigned = 0usize;
    for ap in order {
        for k in 0..m {
            assignment[ap * m + k] = n_assigned % n_groups;
            n_assigned += 1;
        }
    }
    Grouping::new(assignment, n_groups)
}

/// Visiting order of the APs under the nearest-unassigned chain.
pub fn neighbor_chain(layout: &NetworkLayout) -> Vec<usize> {
    let n = layout.n_aps();
    if n == 0 {
        return Vec::new();
    }
    let mut index = SpatialIndex::new(&layout.positions, layout.region);
    let start = closest_pair_indexed(layout, &index).map_or(0, |(a, _)| a);

    let mut order = Vec::with_capacity(n);
    let mut current = start;
    index.remove(current);
    order.push(current);
    while index.len() > 0 {
        let (next, _) = index
            .nearest(&layout.positions[current])
            .expect("index still holds unassigned APs");
        index.remove(next);
        order.push(next);
        current = next;
    }
    order
}

/// Closest AP pair `(i, j)` with `i < j`; ties resolved by the smaller pair
/// in lexicographic order.
pub fn closest_pair(layout: &NetworkLayout) -> Option<(usize, usize)> {
    closest_pair_indexed(layout, &SpatialIndex::new(&layout.positions, layout.region))
}

fn closest_pair_indexed(layout: &NetworkLayout, index: &SpatialIndex) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, p) in layout.positions.iter().enumerate() {
        if let Some((j, d2)) = index.nearest_where(p, |j| j != i) {
            let pair = (i.min(j), i.max(j));
            let better = match best {
                None => true,
                Some((a, b, bd)) => d2 < bd || (d2 == bd && pair < (a, b)),
            };
            if better {
                best = Some((pair.0, pair.1, d2));
            }
        }
    }
    best.map(|(a, b, _)| (a, b))
}

/// Per-group sum of the per-antenna large-scale coefficients.
pub fn group_large_scale(beta: &[f64], grouping: &Grouping) -> Result<Vec<f64>> {
    if beta.len() != grouping.len() {
        return Err(Error::Dimension {
            expected: grouping.len(),
            got: beta.len(),
        });
    }
    let mut sums = vec![0.0; grouping.n_groups];
    for (b, &g) in beta.iter().zip(&grouping.assignment) {
        sums[g] += b;
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{place_ppp, DeploymentKind, Point, Region};
    use crate::rng::seeded;

    fn line_layout(xs: &[f64]) -> NetworkLayout {
        let positions = xs.iter().map(|&x| Point::new(x, 0.0)).collect();
        NetworkLayout::new(positions, 1, DeploymentKind::Fixed, Region::new(10.0).unwrap()).unwrap()
    }

    #[test]
    fn single_group_takes_everything() {
        let g = random_grouping(7, 1, &mut seeded(1)).unwrap();
        assert!(g.assignment.iter().all(|&k| k == 0));
        let layout = line_layout(&[0.0, 5.0, 2.0]);
        let g = neighbor_grouping(&layout, 1).unwrap();
        assert!(g.assignment.iter().all(|&k| k == 0));
    }

    #[test]
    fn random_grouping_is_balanced() {
        let g = random_grouping(10, 4, &mut seeded(2)).unwrap();
        let mut sizes = g.group_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3, 3]);
    }

    #[test]
    fn infeasible_grouping_errors() {
        assert!(matches!(
            random_grouping(3, 4, &mut seeded(1)),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            neighbor_grouping(&line_layout(&[0.0]), 2),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn two_aps_land_in_different_groups() {
        let g = neighbor_grouping(&line_layout(&[0.0, 3.0]), 2).unwrap();
        assert_ne!(g.assignment[0], g.assignment[1]);
    }

    #[test]
    fn chain_on_a_line() {
        // closest pair (0,1); chain 0 -> 1 -> 3 -> 6
        let g = neighbor_grouping(&line_layout(&[0.0, 1.0, 3.0, 6.0]), 2).unwrap();
        assert_eq!(g.assignment, vec![0, 1, 0, 1]);
    }

    #[test]
    fn chain_is_permutation_covariant() {
        let xs = [6.0, 3.0, 0.0, 1.0];
        let g = neighbor_grouping(&line_layout(&xs), 2).unwrap();
        let group_of = |x: f64| g.assignment[xs.iter().position(|&v| v == x).unwrap()];
        assert_eq!(group_of(0.0), group_of(3.0));
        assert_eq!(group_of(1.0), group_of(6.0));
        assert_ne!(group_of(0.0), group_of(1.0));
    }

    #[test]
    fn multi_antenna_aps_cover_all_groups() {
        let layout = place_ppp(10.0, Region::new(1.0).unwrap(), &mut seeded(4))
            .unwrap()
            .with_antennas(4)
            .unwrap();
        let g = neighbor_grouping(&layout, 4).unwrap();
        for ap in 0..layout.n_aps() {
            let mut groups: Vec<usize> = (0..4).map(|k| g.assignment[ap * 4 + k]).collect();
            groups.sort_unstable();
            assert_eq!(groups, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn group_sums() {
        let g = Grouping::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(group_large_scale(&[1.0, 2.0, 3.0], &g).unwrap(), vec![3.0, 3.0]);
        let one = Grouping::single(3);
        assert_eq!(group_large_scale(&[1.0, 2.0, 3.0], &one).unwrap(), vec![6.0]);
        assert!(matches!(group_large_scale(&[1.0], &g), Err(Error::Dimension { .. })));
    }
}
