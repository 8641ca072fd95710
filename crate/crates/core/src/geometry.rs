//! Points on the unit square, Poisson deployment and square cell grids.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// A location in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Column/row address of a cell; row 0 is the bottom row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub col: u32,
    pub row: u32,
}

impl CellIndex {
    pub fn new(col: u32, row: u32) -> Self {
        CellIndex { col, row }
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(&self, other: &CellIndex) -> u32 {
        self.col.abs_diff(other.col).max(self.row.abs_diff(other.row))
    }

    /// Manhattan distance in cells.
    pub fn manhattan(&self, other: &CellIndex) -> u32 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

/// An `s × s` tiling of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub cells_per_side: u32,
    pub cell_side: f64,
    pub cell_area: f64,
    pub nominal_area: f64,
}

/// Slack absorbing round-off when `1/√a` is an exact integer.
const FLOOR_SLACK: f64 = 1e-9;

/// Builds the grid whose cells are at least `nominal_area` large.
pub fn build_grid(nominal_area: f64) -> Result<CellGrid> {
    if !(nominal_area > 0.0 && nominal_area <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cell area must lie in (0, 1], got {nominal_area}"
        )));
    }
    let s = ((1.0 / nominal_area.sqrt()) + FLOOR_SLACK).floor().max(1.0) as u32;
    let side = 1.0 / s as f64;
    Ok(CellGrid {
        cells_per_side: s,
        cell_side: side,
        cell_area: side * side,
        nominal_area,
    })
}

impl CellGrid {
    pub fn side(&self) -> u32 {
        self.cells_per_side
    }

    pub fn num_cells(&self) -> usize {
        (self.cells_per_side as usize).pow(2)
    }

    /// Row-major linear index.
    pub fn linear(&self, c: CellIndex) -> usize {
        c.row as usize * self.cells_per_side as usize + c.col as usize
    }

    pub fn from_linear(&self, i: usize) -> CellIndex {
        let s = self.cells_per_side as usize;
        CellIndex::new((i % s) as u32, (i / s) as u32)
    }

    /// Cell at signed coordinates, or `None` outside the grid.
    pub fn checked(&self, col: i64, row: i64) -> Option<CellIndex> {
        let s = self.cells_per_side as i64;
        if (0..s).contains(&col) && (0..s).contains(&row) {
            Some(CellIndex::new(col as u32, row as u32))
        } else {
            None
        }
    }

    pub fn center(&self, c: CellIndex) -> Point {
        Point::new(
            (c.col as f64 + 0.5) * self.cell_side,
            (c.row as f64 + 0.5) * self.cell_side,
        )
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.num_cells()).map(move |i| self.from_linear(i))
    }

    /// 4-neighbours inside the grid.
    pub fn neighbors4(&self, c: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        STEPS
            .iter()
            .filter_map(move |&(dc, dr)| self.checked(c.col as i64 + dc, c.row as i64 + dr))
    }

    /// 8-neighbours inside the grid.
    pub fn neighbors8(&self, c: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        (-1i64..=1)
            .flat_map(|dr| (-1i64..=1).map(move |dc| (dc, dr)))
            .filter(|&(dc, dr)| dc != 0 || dr != 0)
            .filter_map(move |(dc, dr)| self.checked(c.col as i64 + dc, c.row as i64 + dr))
    }
}

/// Cell containing `p`; points on the right/top edge fold into the last cell.
pub fn cell_of(p: Point, g: &CellGrid) -> CellIndex {
    let s = g.cells_per_side;
    let fold = |v: f64| -> u32 {
        let k = (v * s as f64).floor();
        if k <= 0.0 {
            0
        } else {
            (k as u32).min(s - 1)
        }
    };
    CellIndex::new(fold(p.x), fold(p.y))
}

/// A realization of node positions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeSet {
    pub positions: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    x: f64,
    y: f64,
}

impl NodeSet {
    pub fn new(positions: Vec<Point>) -> Self {
        NodeSet { positions }
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.positions {
            wr.serialize(CsvRow { x: p.x, y: p.y })?;
        }
        wr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut positions = Vec::new();
        for row in rd.deserialize() {
            let row: CsvRow = row?;
            let p = Point::new(row.x, row.y);
            if !p.is_in_unit_square() {
                return Err(Error::InvalidArgument(format!(
                    "point ({}, {}) outside the unit square",
                    p.x, p.y
                )));
            }
            positions.push(p);
        }
        Ok(NodeSet { positions })
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Homogeneous Poisson point process of intensity `density` on the unit square.
pub fn sample_ppp(density: f64, seed: u64) -> Result<NodeSet> {
    sample_ppp_stream(density, seed, 0)
}

/// As [`sample_ppp`], drawing from sub-stream `stream` of `seed`.
pub fn sample_ppp_stream(density: f64, seed: u64, stream: u64) -> Result<NodeSet> {
    if !(density >= 0.0) || !density.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "density must be a finite non-negative number, got {density}"
        )));
    }
    let mut rng = stream_rng(seed, stream);
    let count = if density == 0.0 {
        0
    } else {
        let poisson = Poisson::new(density)
            .map_err(|e| Error::InvalidArgument(format!("poisson({density}): {e}")))?;
        poisson.sample(&mut rng) as usize
    };
    let positions = (0..count)
        .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    Ok(NodeSet { positions })
}
