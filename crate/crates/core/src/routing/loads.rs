use std::io::Write;

use serde::{Deserialize, Serialize};

use super::RoutePath;
use crate::error::Result;
use crate::geometry::{CellGrid, CellIndex};
use crate::regions::RegionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadClass {
    Regular,
    Loaded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLoad {
    pub cell: CellIndex,
    pub path_count: u32,
    pub classification: LoadClass,
    pub in_avoidance: bool,
}

/// Number of served routes touching each cell, with the cell's class.
///
/// `preservation` decides Loaded cells; `avoidance` only sets the flag.
pub fn classify_loads(
    routes: &[RoutePath],
    grid: &CellGrid,
    preservation: Option<&RegionSet>,
    avoidance: Option<&RegionSet>,
) -> Vec<CellLoad> {
    let mut count = vec![0u32; grid.num_cells()];
    let mut stamp = vec![usize::MAX; grid.num_cells()];
    for (ri, r) in routes.iter().enumerate().filter(|(_, r)| r.is_served()) {
        for h in &r.hops {
            for c in [h.from_cell, h.to_cell] {
                let i = grid.linear(c);
                if stamp[i] != ri {
                    stamp[i] = ri;
                    count[i] += 1;
                }
            }
        }
    }
    grid.cells()
        .map(|c| CellLoad {
            cell: c,
            path_count: count[grid.linear(c)],
            classification: match preservation {
                Some(rs) if rs.is_loaded(c) => LoadClass::Loaded,
                _ => LoadClass::Regular,
            },
            in_avoidance: avoidance.is_some_and(|a| a.is_blocked(c)),
        })
        .collect()
}

#[derive(Serialize)]
struct LoadRow {
    col: u32,
    row: u32,
    count: u32,
    classification: LoadClass,
    in_avoidance: bool,
}

pub fn write_loads_csv<W: Write>(loads: &[CellLoad], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for l in loads {
        wr.serialize(LoadRow {
            col: l.cell.col,
            row: l.cell.row,
            count: l.path_count,
            classification: l.classification,
            in_avoidance: l.in_avoidance,
        })?;
    }
    wr.flush()
        .map_err(|e| crate::error::Error::io("<loads csv>", e))?;
    Ok(())
}
