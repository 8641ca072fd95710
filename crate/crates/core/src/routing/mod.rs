//! Cell-level routing for both networks and per-cell load classification.

mod detour;
mod infra;
mod loads;
mod primary;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::CellIndex;

pub use detour::{secondary_route_adhoc, Obstacles};
pub use infra::{secondary_route_infra, shift_y, AvoidanceMap};
pub use loads::{classify_loads, write_loads_csv, CellLoad, LoadClass};
pub use primary::{primary_route, primary_route_infra, InfraRoute};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum Segment {
    HDP,
    VDP,
    Detour,
    ShiftConnector,
    ShortHDP,
    ShortVDP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    One,
    Two,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub from_cell: CellIndex,
    pub to_cell: CellIndex,
    pub segment: Segment,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RouteStatus {
    Served,
    UnservedInRegion,
    UnservedDisconnected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePath {
    pub pair_id: usize,
    pub hops: Vec<Hop>,
    pub status: RouteStatus,
    /// Set when a shifted path still crossed an avoidance region after
    /// the second shift.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub shift_unresolved: bool,
}

impl RoutePath {
    pub fn unserved(pair_id: usize, status: RouteStatus) -> Self {
        RoutePath {
            pair_id,
            hops: Vec::new(),
            status,
            shift_unresolved: false,
        }
    }

    pub fn is_served(&self) -> bool {
        self.status == RouteStatus::Served
    }

    /// Visited cells in order, including the source cell.
    pub fn cells(&self) -> Vec<CellIndex> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        if let Some(h) = self.hops.first() {
            out.push(h.from_cell);
        }
        out.extend(self.hops.iter().filter(|h| h.from_cell != h.to_cell).map(|h| h.to_cell));
        out
    }

    /// Whether consecutive hops chain and every hop moves to a 4-neighbour
    /// or stays put.
    pub fn is_connected_walk(&self) -> bool {
        self.hops.windows(2).all(|w| w[0].to_cell == w[1].from_cell)
            && self
                .hops
                .iter()
                .all(|h| h.from_cell.manhattan(&h.to_cell) <= 1)
    }
}

/// Builds hops from a cell walk where `cells[i].1` tags the hop entering
/// `cells[i].0`. A one-cell walk becomes a single zero-length hop.
pub(crate) fn hops_from_walk(walk: &[(CellIndex, Segment)]) -> Vec<Hop> {
    if walk.len() == 1 {
        return vec![Hop {
            from_cell: walk[0].0,
            to_cell: walk[0].0,
            segment: walk[0].1,
            phase: Phase::NotApplicable,
        }];
    }
    walk.windows(2)
        .map(|w| Hop {
            from_cell: w[0].0,
            to_cell: w[1].0,
            segment: w[1].1,
            phase: Phase::NotApplicable,
        })
        .collect()
}

/// Straight walk from `a` to `b` along one axis, excluding `a`.
pub(crate) fn straight(a: CellIndex, b: CellIndex, seg: Segment) -> Vec<(CellIndex, Segment)> {
    debug_assert!(a.col == b.col || a.row == b.row);
    let mut out = Vec::new();
    let mut c = a;
    while c != b {
        if c.col != b.col {
            c.col = if b.col > c.col { c.col + 1 } else { c.col - 1 };
        } else {
            c.row = if b.row > c.row { c.row + 1 } else { c.row - 1 };
        }
        out.push((c, seg));
    }
    out
}

/// Row-then-column walk from `src` to `dst`, including both ends.
pub(crate) fn hdp_vdp_walk(src: CellIndex, dst: CellIndex) -> Vec<(CellIndex, Segment)> {
    let corner = CellIndex::new(dst.col, src.row);
    let mut walk = vec![(src, Segment::HDP)];
    walk.extend(straight(src, corner, Segment::HDP));
    walk.extend(straight(corner, dst, Segment::VDP));
    walk
}

#[derive(Serialize)]
struct RouteLine<'a> {
    pair_id: usize,
    status: RouteStatus,
    hops: &'a [Hop],
}

/// One JSON object per route.
pub fn write_routes_jsonl<W: Write>(routes: &[RoutePath], mut w: W) -> Result<()> {
    for r in routes {
        serde_json::to_writer(
            &mut w,
            &RouteLine {
                pair_id: r.pair_id,
                status: r.status,
                hops: &r.hops,
            },
        )?;
        w.write_all(b"\n")
            .map_err(|e| crate::error::Error::io("<routes>", e))?;
    }
    Ok(())
}
