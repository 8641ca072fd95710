//! Preservation and avoidance regions on the secondary grid, their cluster
//! decomposition, and the free-cell connectivity graph.

use std::collections::VecDeque;
use std::io::Write;

use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::deployment::{Model, NetworkInstance, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::geometry::{cell_of, CellGrid, CellIndex, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    PreservePrimary,
    PreserveBS,
    Avoidance,
}

/// A `(2k+1)×(2k+1)` block of secondary cells, clipped to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub center_cell: CellIndex,
    pub half_width_cells: u32,
}

/// Inclusive clipped bounds `(col0, col1, row0, row1)`.
pub type Bounds = (u32, u32, u32, u32);

impl Region {
    pub fn bounds(&self, grid: &CellGrid) -> Bounds {
        let k = self.half_width_cells;
        let last = grid.cells_per_side - 1;
        let c = self.center_cell;
        (
            c.col.saturating_sub(k),
            (c.col + k).min(last),
            c.row.saturating_sub(k),
            (c.row + k).min(last),
        )
    }

    pub fn contains(&self, cell: CellIndex, grid: &CellGrid) -> bool {
        let (c0, c1, r0, r1) = self.bounds(grid);
        (c0..=c1).contains(&cell.col) && (r0..=r1).contains(&cell.row)
    }

    pub fn cells(&self, grid: &CellGrid) -> impl Iterator<Item = CellIndex> {
        let (c0, c1, r0, r1) = self.bounds(grid);
        (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| CellIndex::new(c, r)))
    }

    pub fn cell_count(&self, grid: &CellGrid) -> usize {
        let (c0, c1, r0, r1) = self.bounds(grid);
        ((c1 - c0 + 1) * (r1 - r0 + 1)) as usize
    }
}

/// Whether two clipped squares overlap or touch, corners included.
fn touching(a: Bounds, b: Bounds) -> bool {
    b.0 <= a.1 + 1 && a.0 <= b.1 + 1 && b.2 <= a.3 + 1 && a.2 <= b.3 + 1
}

/// Regions on one grid together with the union of their cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    pub regions: Vec<Region>,
    pub grid: CellGrid,
    blocked: Vec<bool>,
}

#[derive(Serialize)]
struct RegionSetDoc<'a> {
    schema_version: u32,
    cells_per_side: u32,
    regions: &'a [Region],
}

impl RegionSet {
    pub fn new(grid: CellGrid, regions: Vec<Region>) -> Self {
        let mut blocked = vec![false; grid.num_cells()];
        for r in &regions {
            for c in r.cells(&grid) {
                blocked[grid.linear(c)] = true;
            }
        }
        RegionSet {
            regions,
            grid,
            blocked,
        }
    }

    pub fn empty(grid: CellGrid) -> Self {
        Self::new(grid, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn is_blocked(&self, c: CellIndex) -> bool {
        self.blocked[self.grid.linear(c)]
    }

    pub fn blocked_mask(&self) -> &[bool] {
        &self.blocked
    }

    pub fn blocked_cells(&self) -> Vec<CellIndex> {
        self.grid.cells().filter(|&c| self.is_blocked(c)).collect()
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    pub fn blocked_area(&self) -> f64 {
        self.blocked_count() as f64 * self.grid.cell_area
    }

    /// An unblocked cell with a blocked 8-neighbour.
    pub fn is_loaded(&self, c: CellIndex) -> bool {
        !self.is_blocked(c) && self.grid.neighbors8(c).any(|o| self.is_blocked(o))
    }

    /// Label of each blocked cell's 8-connected component; `u32::MAX` for
    /// free cells.
    pub fn blocked_components(&self) -> Vec<u32> {
        let g = &self.grid;
        let mut label = vec![u32::MAX; g.num_cells()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..g.num_cells() {
            if !self.blocked[start] || label[start] != u32::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(g.from_linear(start));
            while let Some(c) = queue.pop_front() {
                for o in g.neighbors8(c) {
                    let i = g.linear(o);
                    if self.blocked[i] && label[i] == u32::MAX {
                        label[i] = next;
                        queue.push_back(o);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&RegionSetDoc {
            schema_version: SCHEMA_VERSION,
            cells_per_side: self.grid.cells_per_side,
            regions: &self.regions,
        })?)
    }

    /// Plain PBM bitmap, top row first, 1 for blocked cells.
    pub fn write_pbm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let s = self.grid.cells_per_side;
        writeln!(w, "P1")?;
        writeln!(w, "{s} {s}")?;
        for row in (0..s).rev() {
            let line: Vec<&str> = (0..s)
                .map(|col| {
                    if self.is_blocked(CellIndex::new(col, row)) {
                        "1"
                    } else {
                        "0"
                    }
                })
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Cells per side of a square of `cells` cells, as a half-width.
fn half_width_for(cells: f64) -> u32 {
    ((cells.sqrt() - 1.0) / 2.0).round().max(0.0) as u32
}

fn bs_to_secondary_ratio(inst: &NetworkInstance) -> Result<f64> {
    let bs = inst.bs_grid.as_ref().ok_or_else(|| {
        Error::Precondition("base-station regions need the infrastructure model".into())
    })?;
    Ok(bs.cell_area / inst.secondary_grid.cell_area)
}

/// Half-width of the avoidance squares for an instance.
pub fn avoidance_half_width(inst: &NetworkInstance) -> Result<u32> {
    Ok(half_width_for(inst.config.delta_a * bs_to_secondary_ratio(inst)?))
}

/// Half-width of the preservation squares around base stations.
pub fn bs_preservation_half_width(inst: &NetworkInstance) -> Result<u32> {
    let ratio = bs_to_secondary_ratio(inst)?;
    Ok(half_width_for(inst.config.delta_a / inst.config.n.ln() * ratio))
}

fn bs_cells(inst: &NetworkInstance) -> Vec<CellIndex> {
    inst.bs_positions
        .iter()
        .map(|&p| cell_of(p, &inst.secondary_grid))
        .collect()
}

/// One 3×3 region per primary node, plus one per BS under the
/// infrastructure model.
pub fn build_preservation_regions(inst: &NetworkInstance) -> Result<RegionSet> {
    let grid = inst.secondary_grid;
    if grid.cells_per_side < 3 {
        return Err(Error::Precondition(format!(
            "secondary grid has {} cells per side, need at least 3",
            grid.cells_per_side
        )));
    }
    let mut regions: Vec<Region> = inst
        .primary_nodes
        .positions
        .iter()
        .map(|&p| Region {
            kind: RegionKind::PreservePrimary,
            center_cell: cell_of(p, &grid),
            half_width_cells: 1,
        })
        .collect();
    if inst.model() == Model::Infrastructure {
        let k = bs_preservation_half_width(inst)?;
        regions.extend(bs_cells(inst).into_iter().map(|c| Region {
            kind: RegionKind::PreserveBS,
            center_cell: c,
            half_width_cells: k,
        }));
    }
    Ok(RegionSet::new(grid, regions))
}

/// One avoidance square per BS; fails if two of them overlap.
pub fn build_avoidance_regions(inst: &NetworkInstance) -> Result<RegionSet> {
    if inst.model() != Model::Infrastructure {
        return Err(Error::Precondition(
            "avoidance regions need the infrastructure model".into(),
        ));
    }
    let grid = inst.secondary_grid;
    let k = avoidance_half_width(inst)?;
    let regions: Vec<Region> = bs_cells(inst)
        .into_iter()
        .map(|c| Region {
            kind: RegionKind::Avoidance,
            center_cell: c,
            half_width_cells: k,
        })
        .collect();
    let mut cover = vec![0u8; grid.num_cells()];
    for r in &regions {
        for c in r.cells(&grid) {
            let slot = &mut cover[grid.linear(c)];
            if *slot > 0 {
                return Err(Error::InvalidConfig(format!(
                    "delta_a = {} makes avoidance regions of half-width {k} overlap \
                     (BS pitch is {:.2} secondary cells)",
                    inst.config.delta_a,
                    grid.cells_per_side as f64 / (inst.l as f64).sqrt()
                )));
            }
            *slot = 1;
        }
    }
    Ok(RegionSet::new(grid, regions))
}

/// Clusters of mutually touching preservation regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    pub clusters: Vec<Vec<usize>>,
    pub max_size: usize,
    pub projection_lengths: Vec<u32>,
}

/// Total length of the union of inclusive integer intervals.
fn union_length(mut iv: Vec<(u32, u32)>) -> u32 {
    iv.sort_unstable();
    let mut total = 0;
    let mut cur: Option<(u32, u32)> = None;
    for (a, b) in iv {
        cur = match cur {
            Some((ca, cb)) if a <= cb + 1 => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca + 1;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = cur {
        total += cb - ca + 1;
    }
    total
}

pub fn cluster_components(rs: &RegionSet) -> Result<ClusterDecomposition> {
    if let Some(r) = rs.regions.iter().find(|r| r.kind != RegionKind::PreservePrimary) {
        return Err(Error::InvalidArgument(format!(
            "cluster decomposition takes primary preservation regions only, found {:?}",
            r.kind
        )));
    }
    let grid = &rs.grid;
    let n = rs.regions.len();
    let bounds: Vec<Bounds> = rs.regions.iter().map(|r| r.bounds(grid)).collect();
    let kmax = rs.regions.iter().map(|r| r.half_width_cells).max().unwrap_or(0);

    let mut by_center: Vec<Vec<usize>> = vec![Vec::new(); grid.num_cells()];
    for (i, r) in rs.regions.iter().enumerate() {
        by_center[grid.linear(r.center_cell)].push(i);
    }

    let mut uf = UnionFind::<usize>::new(n);
    for (i, r) in rs.regions.iter().enumerate() {
        let w = (r.half_width_cells + kmax + 1) as i64;
        let (cc, cr) = (r.center_cell.col as i64, r.center_cell.row as i64);
        for dr in -w..=w {
            for dc in -w..=w {
                let Some(c) = grid.checked(cc + dc, cr + dr) else {
                    continue;
                };
                for &j in &by_center[grid.linear(c)] {
                    if j > i && touching(bounds[i], bounds[j]) {
                        uf.union(i, j);
                    }
                }
            }
        }
    }

    let labels = uf.into_labeling();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &root) in labels.iter().enumerate() {
        let slot = *root_slot[root].get_or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[slot].push(i);
    }
    let projection_lengths = clusters
        .iter()
        .map(|c| union_length(c.iter().map(|&i| (bounds[i].2, bounds[i].3)).collect()))
        .collect();
    let max_size = clusters.iter().map(Vec::len).max().unwrap_or(0);
    Ok(ClusterDecomposition {
        clusters,
        max_size,
        projection_lengths,
    })
}

/// Unblocked cells joined by 4-adjacency.
#[derive(Debug, Clone)]
pub struct FreeCellGraph {
    pub graph: UnGraph<CellIndex, ()>,
    node_of: Vec<Option<NodeIndex>>,
    component: Vec<usize>,
    grid: CellGrid,
}

pub fn free_cell_graph(rs: &RegionSet) -> FreeCellGraph {
    let grid = rs.grid;
    let mut graph = UnGraph::new_undirected();
    let mut node_of = vec![None; grid.num_cells()];
    for c in grid.cells() {
        if !rs.is_blocked(c) {
            node_of[grid.linear(c)] = Some(graph.add_node(c));
        }
    }
    for c in grid.cells() {
        let Some(a) = node_of[grid.linear(c)] else {
            continue;
        };
        for o in [grid.checked(c.col as i64 + 1, c.row as i64), grid.checked(c.col as i64, c.row as i64 + 1)]
            .into_iter()
            .flatten()
        {
            if let Some(b) = node_of[grid.linear(o)] {
                graph.add_edge(a, b, ());
            }
        }
    }
    let mut uf = UnionFind::<usize>::new(graph.node_count());
    for e in graph.raw_edges() {
        uf.union(e.source().index(), e.target().index());
    }
    let component = uf.into_labeling();
    FreeCellGraph {
        graph,
        node_of,
        component,
        grid,
    }
}

impl FreeCellGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn component_count(&self) -> usize {
        petgraph::algo::connected_components(&self.graph)
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.component.len()];
        for &c in &self.component {
            counts[c] += 1;
        }
        let mut sizes: Vec<usize> = counts.into_iter().filter(|&k| k > 0).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn reachable(&self, a: CellIndex, b: CellIndex) -> bool {
        match (self.node_of[self.grid.linear(a)], self.node_of[self.grid.linear(b)]) {
            (Some(x), Some(y)) => self.component[x.index()] == self.component[y.index()],
            _ => false,
        }
    }
}

/// Region of `kind` and half-width `k` centred on the cell containing `p`.
pub fn region_at(p: Point, grid: &CellGrid, kind: RegionKind, k: u32) -> Region {
    Region {
        kind,
        center_cell: cell_of(p, grid),
        half_width_cells: k,
    }
}
