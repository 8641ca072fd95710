//! Secondary routing under the infrastructure model: data paths blocked by
//! an avoidance region are shifted into the avoidance-free band of their
//! lattice period.

use super::detour::{route_from_plan, Obstacles};
use super::{straight, Phase, RoutePath, Segment};
use crate::error::{Error, Result};
use crate::geometry::{CellGrid, CellIndex};
use crate::regions::{Region, RegionSet};

/// Distance of a shifted path from the region centre, given the distance
/// `y1 ∈ [0, D1]` of the blocked path.
pub fn shift_y(y1: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0) {
        return Err(Error::InvalidArgument(format!("D1 must be positive, got {d1}")));
    }
    if !(0.0..=d1).contains(&y1) {
        return Err(Error::InvalidArgument(format!("y1 = {y1} outside [0, {d1}]")));
    }
    Ok(d2 / d1 * y1 + d1)
}

/// Avoidance regions indexed by cell, with the lattice geometry needed for
/// shifting.
#[derive(Debug, Clone)]
pub struct AvoidanceMap {
    pub grid: CellGrid,
    pub regions: Vec<Region>,
    pub half_width: u32,
    /// BS lattice pitch in secondary cells.
    pub pitch_cells: f64,
    region_of: Vec<u32>,
}

impl AvoidanceMap {
    /// `l` is the number of base stations.
    pub fn new(avoid: &RegionSet, l: usize) -> Self {
        let pitch = avoid.grid.cells_per_side as f64 / (l as f64).sqrt();
        Self::from_regions(avoid.grid, avoid.regions.clone(), pitch)
    }

    pub fn from_regions(grid: CellGrid, regions: Vec<Region>, pitch_cells: f64) -> Self {
        let mut region_of = vec![u32::MAX; grid.num_cells()];
        for (i, r) in regions.iter().enumerate() {
            for c in r.cells(&grid) {
                region_of[grid.linear(c)] = i as u32;
            }
        }
        let half_width = regions.iter().map(|r| r.half_width_cells).max().unwrap_or(0);
        AvoidanceMap {
            grid,
            regions,
            half_width,
            pitch_cells,
            region_of,
        }
    }

    /// A map with no regions, for routing without avoidance.
    pub fn empty(grid: CellGrid) -> Self {
        Self::from_regions(grid, Vec::new(), grid.cells_per_side as f64)
    }

    pub fn contains(&self, c: CellIndex) -> bool {
        self.region_of[self.grid.linear(c)] != u32::MAX
    }

    fn region_at(&self, c: CellIndex) -> Option<&Region> {
        match self.region_of[self.grid.linear(c)] {
            u32::MAX => None,
            i => Some(&self.regions[i as usize]),
        }
    }

    /// First region met walking from `a` to `b` (both included).
    fn first_on(&self, a: CellIndex, b: CellIndex) -> Option<&Region> {
        std::iter::once(a)
            .chain(straight(a, b, Segment::HDP).into_iter().map(|(c, _)| c))
            .find_map(|c| self.region_at(c))
    }

    /// Line index after shifting `coord` away from `center`, flipping to the
    /// other side if the first choice leaves the grid.
    fn shifted(&self, center: u32, coord: u32, k: u32) -> Option<u32> {
        let d1 = k as f64 + 0.5;
        let d2 = self.pitch_cells / 2.0 - d1;
        let y1 = coord.abs_diff(center) as f64;
        let y2 = shift_y(y1, d1, d2).ok()?;
        let o = ((y2.round() as i64).max(k as i64 + 1)) as i64;
        let s = self.grid.cells_per_side as i64;
        let sign = if coord >= center { 1 } else { -1 };
        [center as i64 + sign * o, center as i64 - sign * o]
            .into_iter()
            .find(|v| (0..s).contains(v))
            .map(|v| v as u32)
    }

    /// Row of the HDP from column `c0` to `c1` starting on `row`, plus a
    /// flag set when two shifts did not clear it.
    fn hdp_row(&self, row: u32, c0: u32, c1: u32) -> (u32, bool) {
        let blocking = |r: u32| self.first_on(CellIndex::new(c0, r), CellIndex::new(c1, r)).copied();
        let mut r = row;
        for _ in 0..2 {
            let Some(reg) = blocking(r) else {
                return (r, false);
            };
            match self.shifted(reg.center_cell.row, r, reg.half_width_cells) {
                Some(next) => r = next,
                None => return (r, true),
            }
        }
        (r, blocking(r).is_some())
    }

    /// Column of the VDP covering rows after `r0` up to `r1`.
    fn vdp_col(&self, col: u32, r0: u32, r1: u32) -> (u32, bool) {
        let first_row = if r1 > r0 { r0 + 1 } else { r0 - 1 };
        let blocking =
            |c: u32| self.first_on(CellIndex::new(c, first_row), CellIndex::new(c, r1)).copied();
        let mut c = col;
        for _ in 0..2 {
            let Some(reg) = blocking(c) else {
                return (c, false);
            };
            match self.shifted(reg.center_cell.col, c, reg.half_width_cells) {
                Some(next) => c = next,
                None => return (c, true),
            }
        }
        (c, blocking(c).is_some())
    }
}

/// Shifted HDP/VDP plan between two secondary cells.
pub(crate) fn shifted_plan(
    src: CellIndex,
    dst: CellIndex,
    avoid: &AvoidanceMap,
) -> (Vec<(CellIndex, Segment)>, bool) {
    let mut unresolved = false;
    let row = if src.col != dst.col {
        let (r, flag) = avoid.hdp_row(src.row, src.col, dst.col);
        unresolved |= flag;
        r
    } else {
        src.row
    };
    let col = if row != dst.row {
        let (c, flag) = avoid.vdp_col(dst.col, row, dst.row);
        unresolved |= flag;
        c
    } else {
        dst.col
    };
    let mut walk = vec![(src, Segment::HDP)];
    let a = CellIndex::new(src.col, row);
    let b = CellIndex::new(col, row);
    let c = CellIndex::new(col, dst.row);
    walk.extend(straight(src, a, Segment::ShiftConnector));
    walk.extend(straight(a, b, Segment::HDP));
    walk.extend(straight(b, c, Segment::VDP));
    walk.extend(straight(c, dst, Segment::ShortHDP));
    (walk, unresolved)
}

/// Secondary route under the infrastructure model. Hops leaving a cell
/// inside an avoidance region run in Phase One, all others in Phase Two.
pub fn secondary_route_infra(
    pair_id: usize,
    src: CellIndex,
    dst: CellIndex,
    avoid: &AvoidanceMap,
    obs: &Obstacles,
) -> RoutePath {
    let (plan, unresolved) = shifted_plan(src, dst, avoid);
    let mut route = route_from_plan(pair_id, plan, obs);
    route.shift_unresolved = unresolved;
    for h in &mut route.hops {
        h.phase = if avoid.contains(h.from_cell) {
            Phase::One
        } else {
            Phase::Two
        };
    }
    route
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::regions::RegionKind;
    use crate::routing::RouteStatus;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(s: u32) -> CellGrid {
        build_grid(1.0 / (s as f64 * s as f64)).unwrap()
    }

    fn ci(c: u32, r: u32) -> CellIndex {
        CellIndex::new(c, r)
    }

    fn lattice(s: u32, per_side: u32, k: u32) -> AvoidanceMap {
        let g = grid(s);
        let pitch = s as f64 / per_side as f64;
        let regions = (0..per_side * per_side)
            .map(|i| {
                let (bx, by) = (i % per_side, i / per_side);
                Region {
                    kind: RegionKind::Avoidance,
                    center_cell: ci(
                        ((bx as f64 + 0.5) * pitch) as u32,
                        ((by as f64 + 0.5) * pitch) as u32,
                    ),
                    half_width_cells: k,
                }
            })
            .collect();
        AvoidanceMap::from_regions(g, regions, pitch)
    }

    #[test]
    fn shift_y_examples() {
        assert_eq!(shift_y(0.0, 0.1, 0.3).unwrap(), 0.1);
        assert_relative_eq!(shift_y(0.1, 0.1, 0.3).unwrap(), 0.4, max_relative = 1e-15);
        assert_relative_eq!(shift_y(0.05, 0.1, 0.3).unwrap(), 0.25, max_relative = 1e-15);
        assert!(shift_y(0.2, 0.1, 0.3).is_err());
        assert!(shift_y(-0.01, 0.1, 0.3).is_err());
        assert!(shift_y(0.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn unblocked_pair_is_plain_and_phase_two() {
        let av = lattice(40, 2, 3);
        let obs = Obstacles::none(av.grid);
        let r = secondary_route_infra(0, ci(0, 0), ci(39, 39), &av, &obs);
        assert_eq!(r.status, RouteStatus::Served);
        assert!(r.hops.iter().all(|h| h.phase == Phase::Two));
        assert!(r
            .hops
            .iter()
            .all(|h| matches!(h.segment, Segment::HDP | Segment::VDP)));
        assert_eq!(r.hops.len(), 78);
    }

    #[test]
    fn blocked_hdp_row_follows_the_shift_map() {
        // k = 3, pitch 20: D1 = 3.5, D2 = 6.5.
        let av = lattice(40, 2, 3);
        let obs = Obstacles::none(av.grid);
        let ar = 10;
        for y1 in 0..=3u32 {
            let row = ar + y1;
            let r = secondary_route_infra(0, ci(0, row), ci(39, row), &av, &obs);
            let y2 = shift_y(y1 as f64, 3.5, 6.5).unwrap();
            let expect = ar + (y2.round() as u32).max(4);
            let hdp_rows: Vec<u32> = r
                .hops
                .iter()
                .filter(|h| h.segment == Segment::HDP)
                .map(|h| h.from_cell.row)
                .collect();
            assert!(!hdp_rows.is_empty());
            assert!(hdp_rows.iter().all(|&rr| rr == expect), "y1 {y1}: {hdp_rows:?}");
            assert!(r.hops.iter().any(|h| h.segment == Segment::ShiftConnector));
            assert!(r.cells().iter().filter(|&&c| av.contains(c)).count() <= 1);
        }
    }

    #[test]
    fn shift_goes_down_below_center() {
        let av = lattice(40, 2, 3);
        let obs = Obstacles::none(av.grid);
        let r = secondary_route_infra(0, ci(0, 9), ci(39, 9), &av, &obs);
        let y2 = shift_y(1.0, 3.5, 6.5).unwrap().round() as u32;
        assert!(r
            .hops
            .iter()
            .filter(|h| h.segment == Segment::HDP)
            .all(|h| h.from_cell.row == 10 - y2));
    }

    #[test]
    fn source_inside_region_starts_in_phase_one() {
        let av = lattice(40, 2, 3);
        let obs = Obstacles::none(av.grid);
        let r = secondary_route_infra(0, ci(10, 10), ci(30, 35), &av, &obs);
        assert_eq!(r.status, RouteStatus::Served);
        let phases: Vec<Phase> = r.hops.iter().map(|h| h.phase).collect();
        let first_two = phases.iter().position(|&p| p == Phase::Two).unwrap();
        assert!(first_two > 0);
        assert!(phases[..first_two].iter().all(|&p| p == Phase::One));
        assert!(phases[first_two..].iter().all(|&p| p == Phase::Two));
    }

    #[test]
    fn blocked_vdp_shifts_column_and_uses_short_hdp() {
        let av = lattice(40, 2, 3);
        let obs = Obstacles::none(av.grid);
        let r = secondary_route_infra(0, ci(0, 0), ci(11, 39), &av, &obs);
        assert!(r.hops.iter().any(|h| h.segment == Segment::ShortHDP));
        let vdp_cols: Vec<u32> = r
            .hops
            .iter()
            .filter(|h| h.segment == Segment::VDP)
            .map(|h| h.from_cell.col)
            .collect();
        let y2 = shift_y(1.0, 3.5, 6.5).unwrap().round() as u32;
        assert!(vdp_cols.iter().all(|&c| c == 10 + y2.max(4)));
        assert!(r.hops.iter().all(|h| h.segment != Segment::ShortVDP));
    }

    proptest! {
        #[test]
        fn infra_routes_are_connected(
            src in (0u32..40, 0u32..40),
            dst in (0u32..40, 0u32..40),
            k in 0u32..4,
        ) {
            let av = lattice(40, 2, k);
            let obs = Obstacles::none(av.grid);
            let (a, b) = (ci(src.0, src.1), ci(dst.0, dst.1));
            let r = secondary_route_infra(0, a, b, &av, &obs);
            prop_assert_eq!(r.status, RouteStatus::Served);
            prop_assert!(r.is_connected_walk());
            prop_assert_eq!(r.hops[0].from_cell, a);
            prop_assert_eq!(r.hops.last().unwrap().to_cell, b);
            for h in &r.hops {
                prop_assert_eq!(h.phase == Phase::One, av.contains(h.from_cell));
            }
        }
    }
}
