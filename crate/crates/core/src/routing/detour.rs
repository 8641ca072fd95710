//! Wall-following detours around blocked clusters.

use std::collections::{HashMap, HashSet};

use super::{hdp_vdp_walk, hops_from_walk, RoutePath, RouteStatus, Segment};
use crate::geometry::{CellGrid, CellIndex};
use crate::regions::RegionSet;

type Dir = (i64, i64);

fn right(d: Dir) -> Dir {
    (d.1, -d.0)
}

fn left(d: Dir) -> Dir {
    (-d.1, d.0)
}

fn back(d: Dir) -> Dir {
    (-d.0, -d.1)
}

/// Blocked cells of a grid with their 8-connected component labels.
#[derive(Debug, Clone)]
pub struct Obstacles {
    pub grid: CellGrid,
    blocked: Vec<bool>,
    label: Vec<u32>,
}

impl Obstacles {
    pub fn new(rs: &RegionSet) -> Self {
        Obstacles {
            grid: rs.grid,
            blocked: rs.blocked_mask().to_vec(),
            label: rs.blocked_components(),
        }
    }

    pub fn none(grid: CellGrid) -> Self {
        Self::new(&RegionSet::empty(grid))
    }

    pub fn is_blocked(&self, c: CellIndex) -> bool {
        self.blocked[self.grid.linear(c)]
    }

    fn label(&self, c: CellIndex) -> u32 {
        self.label[self.grid.linear(c)]
    }

    fn step(&self, c: CellIndex, d: Dir) -> Option<CellIndex> {
        self.grid.checked(c.col as i64 + d.0, c.row as i64 + d.1)
    }

    /// Walks with the obstacle on the right (`right_hand`) or left side
    /// until `target` accepts a cell. `None` if the walk leaves the grid or
    /// starts repeating itself.
    fn follow(
        &self,
        start: CellIndex,
        heading_in: Dir,
        right_hand: bool,
        target: impl Fn(CellIndex) -> bool,
    ) -> Option<Vec<CellIndex>> {
        let (toward, away): (fn(Dir) -> Dir, fn(Dir) -> Dir) =
            if right_hand { (right, left) } else { (left, right) };
        let mut heading = away(heading_in);
        let mut cur = start;
        let mut walk = Vec::new();
        let mut seen = HashSet::new();
        loop {
            let mut moved = false;
            for d in [toward(heading), heading, away(heading), back(heading)] {
                let next = self.step(cur, d)?;
                if self.is_blocked(next) {
                    continue;
                }
                cur = next;
                heading = d;
                walk.push(cur);
                moved = true;
                break;
            }
            if !moved {
                return None;
            }
            if target(cur) {
                return Some(walk);
            }
            if !seen.insert((cur, heading)) {
                return None;
            }
        }
    }
}

/// Removes cycles so every cell appears once.
pub(crate) fn loop_erase(walk: Vec<(CellIndex, Segment)>) -> Vec<(CellIndex, Segment)> {
    let mut out: Vec<(CellIndex, Segment)> = Vec::with_capacity(walk.len());
    let mut pos: HashMap<CellIndex, usize> = HashMap::new();
    for (c, s) in walk {
        if let Some(&p) = pos.get(&c) {
            for (gone, _) in out.drain(p + 1..) {
                pos.remove(&gone);
            }
        } else {
            pos.insert(c, out.len());
            out.push((c, s));
        }
    }
    out
}

/// Follows `planned`, replacing each blocked stretch by the shorter
/// wall-following walk around its cluster (clockwise on ties).
pub(crate) fn detour_walk(
    planned: &[(CellIndex, Segment)],
    obs: &Obstacles,
) -> Result<Vec<(CellIndex, Segment)>, RouteStatus> {
    let (first, last) = (planned[0].0, planned[planned.len() - 1].0);
    if obs.is_blocked(first) || obs.is_blocked(last) {
        return Err(RouteStatus::UnservedInRegion);
    }
    if planned.iter().all(|&(c, _)| !obs.is_blocked(c)) {
        return Ok(planned.to_vec());
    }
    let index: HashMap<CellIndex, usize> =
        planned.iter().enumerate().map(|(i, &(c, _))| (c, i)).collect();
    let mut out = vec![planned[0]];
    let mut i = 0;
    while i + 1 < planned.len() {
        let next = planned[i + 1];
        if !obs.is_blocked(next.0) {
            out.push(next);
            i += 1;
            continue;
        }
        let comp = obs.label(next.0);
        let last_c = (i + 1..planned.len())
            .filter(|&j| obs.is_blocked(planned[j].0) && obs.label(planned[j].0) == comp)
            .max()
            .unwrap_or(i + 1);
        let cur = planned[i].0;
        let heading = (
            next.0.col as i64 - cur.col as i64,
            next.0.row as i64 - cur.row as i64,
        );
        let target = |c: CellIndex| index.get(&c).is_some_and(|&j| j > last_c);
        let cw = obs.follow(cur, heading, true, target);
        let ccw = obs.follow(cur, heading, false, target);
        let walk = match (cw, ccw) {
            (Some(a), Some(b)) => {
                if b.len() < a.len() {
                    b
                } else {
                    a
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(RouteStatus::UnservedDisconnected),
        };
        let rejoin = *walk.last().expect("walks are non-empty");
        out.extend(walk.into_iter().map(|c| (c, Segment::Detour)));
        i = index[&rejoin];
    }
    Ok(out)
}

pub(crate) fn route_from_plan(
    pair_id: usize,
    planned: Vec<(CellIndex, Segment)>,
    obs: &Obstacles,
) -> RoutePath {
    match detour_walk(&loop_erase(planned), obs) {
        Ok(walk) => RoutePath {
            pair_id,
            hops: hops_from_walk(&walk),
            status: RouteStatus::Served,
            shift_unresolved: false,
        },
        Err(status) => RoutePath::unserved(pair_id, status),
    }
}

/// HDP then VDP on the secondary grid, detouring around blocked clusters.
pub fn secondary_route_adhoc(
    pair_id: usize,
    src: CellIndex,
    dst: CellIndex,
    obs: &Obstacles,
) -> RoutePath {
    route_from_plan(pair_id, hdp_vdp_walk(src, dst), obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::regions::{free_cell_graph, Region, RegionKind};
    use crate::routing::primary_route;
    use proptest::prelude::*;

    fn grid(s: u32) -> CellGrid {
        build_grid(1.0 / (s as f64 * s as f64)).unwrap()
    }

    fn regions(s: u32, centers: &[(u32, u32, u32)]) -> RegionSet {
        RegionSet::new(
            grid(s),
            centers
                .iter()
                .map(|&(c, r, k)| Region {
                    kind: RegionKind::PreservePrimary,
                    center_cell: CellIndex::new(c, r),
                    half_width_cells: k,
                })
                .collect(),
        )
    }

    fn ci(c: u32, r: u32) -> CellIndex {
        CellIndex::new(c, r)
    }

    #[test]
    fn no_regions_matches_primary_shape() {
        let obs = Obstacles::none(grid(10));
        for (a, b) in [((0, 0), (9, 9)), ((5, 2), (1, 7)), ((3, 3), (3, 3))] {
            let r = secondary_route_adhoc(0, ci(a.0, a.1), ci(b.0, b.1), &obs);
            let p = primary_route(0, ci(a.0, a.1), ci(b.0, b.1));
            assert_eq!(r.hops, p.hops);
        }
    }

    #[test]
    fn endpoint_in_region_is_unserved() {
        let obs = Obstacles::new(&regions(12, &[(6, 6, 1)]));
        let r = secondary_route_adhoc(0, ci(0, 0), ci(6, 7), &obs);
        assert_eq!(r.status, RouteStatus::UnservedInRegion);
        assert!(r.hops.is_empty());
        let r = secondary_route_adhoc(0, ci(5, 5), ci(0, 0), &obs);
        assert_eq!(r.status, RouteStatus::UnservedInRegion);
    }

    #[test]
    fn single_cluster_mid_hdp_adds_four_hops_over_the_top() {
        let obs = Obstacles::new(&regions(12, &[(5, 5, 1)]));
        let r = secondary_route_adhoc(0, ci(0, 5), ci(11, 5), &obs);
        assert_eq!(r.status, RouteStatus::Served);
        assert_eq!(r.hops.len(), 11 + 4);
        let cells = r.cells();
        let expect_detour = [
            ci(3, 6),
            ci(3, 7),
            ci(4, 7),
            ci(5, 7),
            ci(6, 7),
            ci(7, 7),
            ci(7, 6),
            ci(7, 5),
        ];
        assert_eq!(&cells[4..12], &expect_detour);
        assert!(r.hops[3..11].iter().all(|h| h.segment == Segment::Detour));
        assert_eq!(r.hops[11].segment, Segment::HDP);
        let fg = free_cell_graph(&regions(12, &[(5, 5, 1)]));
        assert!(fg.reachable(ci(0, 5), ci(7, 5)));
    }

    #[test]
    fn shorter_side_wins() {
        // Cluster extends further up than down, so the detour goes below.
        let obs = Obstacles::new(&regions(14, &[(6, 6, 1), (6, 8, 1), (6, 10, 1)]));
        let r = secondary_route_adhoc(0, ci(0, 6), ci(13, 6), &obs);
        assert_eq!(r.status, RouteStatus::Served);
        assert!(r.cells().iter().any(|c| c.row == 4));
        assert!(r.cells().iter().all(|c| c.row <= 6));
    }

    #[test]
    fn wall_to_wall_cluster_disconnects() {
        let centers: Vec<(u32, u32, u32)> = (0..4).map(|i| (4, 1 + 3 * i, 1)).collect();
        let obs = Obstacles::new(&regions(12, &centers));
        let r = secondary_route_adhoc(0, ci(0, 5), ci(11, 5), &obs);
        assert_eq!(r.status, RouteStatus::UnservedDisconnected);
    }

    #[test]
    fn cluster_on_border_forces_the_other_side() {
        let obs = Obstacles::new(&regions(12, &[(5, 0, 1)]));
        let r = secondary_route_adhoc(0, ci(0, 0), ci(11, 0), &obs);
        assert_eq!(r.status, RouteStatus::Served);
        assert_eq!(r.hops.len(), 11 + 4);
    }

    #[test]
    fn vdp_detour() {
        let obs = Obstacles::new(&regions(12, &[(6, 6, 1)]));
        let r = secondary_route_adhoc(0, ci(0, 1), ci(6, 11), &obs);
        assert!(r.is_served());
        assert!(r.is_connected_walk());
        assert_eq!(r.hops.len(), 6 + 10 + 4);
    }

    #[test]
    fn loop_erase_removes_cycles() {
        let w = vec![
            (ci(0, 0), Segment::HDP),
            (ci(1, 0), Segment::HDP),
            (ci(1, 1), Segment::VDP),
            (ci(0, 1), Segment::HDP),
            (ci(0, 0), Segment::VDP),
            (ci(0, 1), Segment::VDP),
        ];
        let e: Vec<CellIndex> = loop_erase(w).into_iter().map(|(c, _)| c).collect();
        assert_eq!(e, vec![ci(0, 0), ci(0, 1)]);
    }

    proptest! {
        #[test]
        fn served_routes_are_free_connected_walks(
            centers in prop::collection::vec((0u32..16, 0u32..16), 0..10),
            src in (0u32..16, 0u32..16),
            dst in (0u32..16, 0u32..16),
        ) {
            let cs: Vec<(u32, u32, u32)> = centers.iter().map(|&(c, r)| (c, r, 1)).collect();
            let rs = regions(16, &cs);
            let obs = Obstacles::new(&rs);
            let (a, b) = (ci(src.0, src.1), ci(dst.0, dst.1));
            let r = secondary_route_adhoc(7, a, b, &obs);
            prop_assert_eq!(r.pair_id, 7);
            match r.status {
                RouteStatus::Served => {
                    prop_assert!(r.is_connected_walk());
                    prop_assert_eq!(r.hops[0].from_cell, a);
                    prop_assert_eq!(r.hops.last().unwrap().to_cell, b);
                    prop_assert!(r.cells().iter().all(|&c| !rs.is_blocked(c)));
                    prop_assert!(free_cell_graph(&rs).reachable(a, b));
                    prop_assert!(r.hops.len() >= a.manhattan(&b) as usize);
                }
                RouteStatus::UnservedInRegion => {
                    prop_assert!(rs.is_blocked(a) || rs.is_blocked(b));
                    prop_assert!(r.hops.is_empty());
                }
                RouteStatus::UnservedDisconnected => {
                    prop_assert!(!rs.is_blocked(a) && !rs.is_blocked(b));
                    prop_assert!(r.hops.is_empty());
                }
            }
        }
    }
}
