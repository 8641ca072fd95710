//! Slot-level simulation of one network instance.
//!
//! Routes are laid on the grids, each cell serves its queued hops
//! round-robin over a number of frames, and every active slot is evaluated
//! with the SINR of all co-slot transmitters. A cell's rate is its worst
//! frame; a pair's rate is its worst hop after sharing among the paths
//! through each cell.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{verify_bounds, LoadStats, SlotTally, ThroughputReport};
use crate::deployment::{Model, NetworkInstance, ScalingConfig};
use crate::error::{Error, Result};
use crate::geometry::{cell_of, CellGrid, Point};
use crate::phy::{
    evaluate_links, gain, log2_1p, phase_of, rate_constants, tx_power, Link, PhyConstants, TxKind,
};
use crate::regions::{
    build_avoidance_regions, build_preservation_regions, cluster_components, free_cell_graph,
    ClusterDecomposition, RegionKind, RegionSet,
};
use crate::routing::{
    classify_loads, primary_route, primary_route_infra, secondary_route_adhoc,
    secondary_route_infra, AvoidanceMap, CellLoad, InfraRoute, LoadClass, Obstacles, RoutePath,
    RouteStatus,
};

/// Slots per ad hoc frame: 9 primary phases, each secondary phase repeated 3 times.
const ADHOC_SLOTS: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Frames simulated; each cell serves entry `f mod len` of its queue in frame `f`.
    pub frames: usize,
    /// Keep per-link slot samples.
    pub trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            frames: 4,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Network {
    Primary,
    Secondary,
}

/// One evaluated link in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub frame: usize,
    pub slot: usize,
    pub network: Network,
    pub link: usize,
    pub sinr: f64,
    pub rate: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::io("<slot trace>", e))?;
    Ok(())
}

/// Everything computed for one instance.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub report: ThroughputReport,
    pub phy: PhyConstants,
    pub preservation: RegionSet,
    pub avoidance: Option<RegionSet>,
    pub clusters: ClusterDecomposition,
    pub primary_routes: Vec<RoutePath>,
    pub infra_routes: Vec<InfraRoute>,
    pub secondary_routes: Vec<RoutePath>,
    pub primary_loads: Vec<CellLoad>,
    pub secondary_loads: Vec<CellLoad>,
    pub bs_uplink_counts: Vec<u32>,
    pub bs_downlink_counts: Vec<u32>,
    pub trace: Vec<TraceRow>,
}

/// Node nearest each cell centre; empty cells fall back to the centre.
struct Relays {
    pos: Vec<Point>,
    phantom: Vec<bool>,
}

fn relays(nodes: &[Point], grid: &CellGrid) -> Relays {
    let mut best: Vec<Option<(f64, Point)>> = vec![None; grid.num_cells()];
    for &p in nodes {
        let c = cell_of(p, grid);
        let d = p.dist2(&grid.center(c));
        let slot = &mut best[grid.linear(c)];
        if slot.is_none_or(|(bd, _)| d < bd) {
            *slot = Some((d, p));
        }
    }
    let phantom = best.iter().map(Option::is_none).collect();
    let pos = best
        .iter()
        .enumerate()
        .map(|(i, b)| b.map_or_else(|| grid.center(grid.from_linear(i)), |(_, p)| p))
        .collect();
    Relays { pos, phantom }
}

/// Queued (route, hop) entries of each cell, in route order.
fn hop_queues(routes: &[RoutePath], grid: &CellGrid) -> Vec<Vec<(usize, usize)>> {
    let mut q = vec![Vec::new(); grid.num_cells()];
    for (ri, r) in routes.iter().enumerate().filter(|(_, r)| r.is_served()) {
        for (hi, h) in r.hops.iter().enumerate() {
            q[grid.linear(h.from_cell)].push((ri, hi));
        }
    }
    q
}

/// Endpoints of one hop: the source on the first hop, the destination on
/// the last, relays elsewhere.
fn hop_endpoints(
    route: &RoutePath,
    hop: usize,
    src: Point,
    dst: Point,
    relays: &Relays,
    grid: &CellGrid,
) -> (Point, Point) {
    let h = route.hops[hop];
    let tx = if hop == 0 { src } else { relays.pos[grid.linear(h.from_cell)] };
    let rx = if hop + 1 == route.hops.len() {
        dst
    } else {
        relays.pos[grid.linear(h.to_cell)]
    };
    (tx, rx)
}

/// A cell's transmission in one frame.
struct CellTx {
    cell: usize,
    link: Link,
}

struct Counters {
    clamps: usize,
}

impl Counters {
    fn link(&mut self, tx: Point, rx: Point, kind: TxKind, cfg: &ScalingConfig) -> Link {
        let (power, clamped) = tx_power(tx.dist(&rx), kind, cfg);
        self.clamps += clamped as usize;
        Link { tx, rx, power }
    }
}

/// SINR and rate of each link; co-located endpoints get an unlimited rate.
fn evaluate(links: &[Link], cfg: &ScalingConfig) -> Result<Vec<(f64, f64)>> {
    let usable: Vec<usize> = (0..links.len())
        .filter(|&i| links[i].tx.dist2(&links[i].rx) > 0.0)
        .collect();
    let mut out = vec![(f64::INFINITY, f64::INFINITY); links.len()];
    if usable.len() == links.len() {
        for (o, s) in out.iter_mut().zip(evaluate_links(links, cfg.n0, cfg.alpha)?) {
            *o = (s.sinr, s.rate);
        }
        return Ok(out);
    }
    // Co-located links still interfere with the others.
    for &i in &usable {
        let l = &links[i];
        let interference: f64 = links
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, o)| o.power * gain(o.tx.dist2(&l.rx), cfg.alpha))
            .sum();
        let sinr = l.power * gain(l.tx.dist2(&l.rx), cfg.alpha) / (cfg.n0 + interference);
        out[i] = (sinr, log2_1p(sinr));
    }
    Ok(out)
}

/// Power received at `rx` from `links`.
fn received(links: &[CellTx], rx: Point, alpha: f64) -> f64 {
    links
        .iter()
        .map(|t| t.link.power * gain(t.link.tx.dist2(&rx), alpha))
        .sum()
}

struct Tallies {
    primary_floor: SlotTally,
    secondary_floor: SlotTally,
    phase1: SlotTally,
    phase2: SlotTally,
    interference: SlotTally,
    max_interference: f64,
    trace: Vec<TraceRow>,
    keep_trace: bool,
}

impl Tallies {
    fn new(keep_trace: bool) -> Self {
        Tallies {
            primary_floor: SlotTally::default(),
            secondary_floor: SlotTally::default(),
            phase1: SlotTally::default(),
            phase2: SlotTally::default(),
            interference: SlotTally::default(),
            max_interference: 0.0,
            trace: Vec::new(),
            keep_trace,
        }
    }

    fn interference(&mut self, value: f64, limit: f64) {
        self.interference.record(value <= limit);
        self.max_interference = self.max_interference.max(value);
    }

    fn trace(&mut self, frame: usize, slot: usize, network: Network, samples: &[(f64, f64)]) {
        if self.keep_trace {
            self.trace.extend(samples.iter().enumerate().map(|(link, &(sinr, rate))| TraceRow {
                frame,
                slot,
                network,
                link,
                sinr,
                rate,
            }));
        }
    }
}

fn min_in(slot: &mut f64, v: f64) {
    *slot = slot.min(v);
}

/// Worst rate of a pair over its hops after sharing each cell's rate.
fn pair_rate(route: &RoutePath, grid: &CellGrid, cell_rate: &[f64], loads: &[CellLoad]) -> f64 {
    route
        .hops
        .iter()
        .map(|h| {
            let i = grid.linear(h.from_cell);
            cell_rate[i] / loads[i].path_count.max(1) as f64
        })
        .fold(f64::INFINITY, f64::min)
}

struct Rates {
    /// Finite rates of served pairs.
    values: Vec<f64>,
}

impl Rates {
    fn from_iter(it: impl Iterator<Item = f64>) -> Self {
        Rates {
            values: it.collect(),
        }
    }

    /// (min, sum-by-min, mean), zeros when nothing is served.
    fn summary(&self) -> (f64, f64, f64) {
        if self.values.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let k = self.values.len() as f64;
        let finite: Vec<f64> = self.values.iter().copied().filter(|v| v.is_finite()).collect();
        let t = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let t = if t.is_finite() { t } else { 0.0 };
        let mean = if finite.is_empty() {
            0.0
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        (t, t * k, mean)
    }
}

/// Secondary route cells for every pair, with source and destination points.
fn secondary_endpoints(inst: &NetworkInstance) -> Vec<(Point, Point)> {
    let pos = &inst.secondary_nodes.positions;
    inst.secondary_pairs
        .pairs
        .iter()
        .map(|&(s, d)| (pos[s], pos[d]))
        .collect()
}

fn primary_endpoints(inst: &NetworkInstance) -> Vec<(Point, Point)> {
    let pos = &inst.primary_nodes.positions;
    inst.primary_pairs
        .pairs
        .iter()
        .map(|&(s, d)| (pos[s], pos[d]))
        .collect()
}

fn only_kind(rs: &RegionSet, kind: RegionKind) -> RegionSet {
    RegionSet::new(
        rs.grid,
        rs.regions.iter().filter(|r| r.kind == kind).copied().collect(),
    )
}

fn max_mean<'a>(loads: impl Iterator<Item = &'a CellLoad>) -> (u32, f64) {
    let (mut max, mut sum, mut k) = (0u32, 0u64, 0usize);
    for l in loads {
        max = max.max(l.path_count);
        sum += l.path_count as u64;
        k += 1;
    }
    (max, if k == 0 { 0.0 } else { sum as f64 / k as f64 })
}

/// Runs the full protocol stack on `inst`.
pub fn simulate(inst: &NetworkInstance, opts: &SimOptions) -> Result<Simulation> {
    if opts.frames == 0 {
        return Err(Error::InvalidArgument("frames must be at least 1".into()));
    }
    let cfg = inst.config;
    let phy = rate_constants(&cfg, inst.m)?;
    let preservation = build_preservation_regions(inst)?;
    let primary_regions = only_kind(&preservation, RegionKind::PreservePrimary);
    let clusters = cluster_components(&primary_regions)?;
    let avoidance = match inst.model() {
        Model::AdHoc => None,
        Model::Infrastructure => Some(build_avoidance_regions(inst)?),
    };

    let sgrid = inst.secondary_grid;
    let obs = Obstacles::new(&preservation);
    let sec_pts = secondary_endpoints(inst);
    let avoid_map = avoidance.as_ref().map(|a| AvoidanceMap::new(a, inst.l));
    let secondary_routes: Vec<RoutePath> = sec_pts
        .iter()
        .enumerate()
        .map(|(i, &(s, d))| {
            let (sc, dc) = (cell_of(s, &sgrid), cell_of(d, &sgrid));
            match &avoid_map {
                None => secondary_route_adhoc(i, sc, dc, &obs),
                Some(am) => secondary_route_infra(i, sc, dc, am, &obs),
            }
        })
        .collect();
    let secondary_loads = classify_loads(
        &secondary_routes,
        &sgrid,
        Some(&preservation),
        avoidance.as_ref(),
    );
    let sec_relays = relays(&inst.secondary_nodes.positions, &sgrid);
    let sec_queues = hop_queues(&secondary_routes, &sgrid);

    let mut counters = Counters { clamps: 0 };
    let mut tallies = Tallies::new(opts.trace);
    let pri_pts = primary_endpoints(inst);

    // Secondary links active in one frame, grouped by TDMA phase and, under
    // the infrastructure model, by avoidance (Phase One) or not (Phase Two).
    let secondary_frame = |f: usize, counters: &mut Counters| -> [Vec<Vec<CellTx>>; 2] {
        let mut out: [Vec<Vec<CellTx>>; 2] =
            [(0..9).map(|_| Vec::new()).collect(), (0..9).map(|_| Vec::new()).collect()];
        for (ci, q) in sec_queues.iter().enumerate().filter(|(_, q)| !q.is_empty()) {
            let (ri, hi) = q[f % q.len()];
            let (s, d) = sec_pts[ri];
            let (tx, rx) = hop_endpoints(&secondary_routes[ri], hi, s, d, &sec_relays, &sgrid);
            let cell = sgrid.from_linear(ci);
            let band = avoidance.as_ref().is_some_and(|a| !a.is_blocked(cell)) as usize;
            out[band][phase_of(cell) as usize].push(CellTx {
                cell: ci,
                link: counters.link(tx, rx, TxKind::Secondary, &cfg),
            });
        }
        out
    };

    let mut sec_rate = vec![f64::INFINITY; sgrid.num_cells()];
    let limit = cfg.delta_p * phy.i;

    let mut primary_routes = Vec::new();
    let mut infra_routes = Vec::new();
    let mut primary_loads = Vec::new();
    let mut bs_uplink_counts = Vec::new();
    let mut bs_downlink_counts = Vec::new();
    let pair_rates: Rates;
    let alone_rates: Rates;
    let mut phantom_relays = 0usize;
    let empty_primary_cells;

    match inst.model() {
        Model::AdHoc => {
            let pgrid = inst.primary_grid;
            primary_routes = pri_pts
                .iter()
                .enumerate()
                .map(|(i, &(s, d))| primary_route(i, cell_of(s, &pgrid), cell_of(d, &pgrid)))
                .collect();
            primary_loads = classify_loads(&primary_routes, &pgrid, None, None);
            let pri_relays = relays(&inst.primary_nodes.positions, &pgrid);
            empty_primary_cells = pri_relays.phantom.iter().filter(|&&p| p).count();
            let pri_queues = hop_queues(&primary_routes, &pgrid);
            phantom_relays += pri_queues
                .iter()
                .zip(&pri_relays.phantom)
                .filter(|(q, &ph)| !q.is_empty() && ph)
                .count();

            let mut cell_rate = vec![f64::INFINITY; pgrid.num_cells()];
            let mut alone_rate = vec![f64::INFINITY; pgrid.num_cells()];
            for f in 0..opts.frames {
                let mut pri: Vec<Vec<CellTx>> = (0..9).map(|_| Vec::new()).collect();
                for (ci, q) in pri_queues.iter().enumerate().filter(|(_, q)| !q.is_empty()) {
                    let (ri, hi) = q[f % q.len()];
                    let (s, d) = pri_pts[ri];
                    let (tx, rx) =
                        hop_endpoints(&primary_routes[ri], hi, s, d, &pri_relays, &pgrid);
                    pri[phase_of(pgrid.from_linear(ci)) as usize].push(CellTx {
                        cell: ci,
                        link: counters.link(tx, rx, TxKind::Primary, &cfg),
                    });
                }
                let [sec, _] = secondary_frame(f, &mut counters);

                for (ph, txs) in pri.iter().enumerate() {
                    let links: Vec<Link> = txs.iter().map(|t| t.link).collect();
                    let samples = evaluate(&links, &cfg)?;
                    for (t, &(_, r)) in txs.iter().zip(&samples) {
                        let r = r / 9.0;
                        tallies.primary_floor.record(r >= phy.k_p);
                        min_in(&mut alone_rate[t.cell], r);
                    }
                    tallies.trace(f, ph, Network::Primary, &samples);
                }

                let mut sec_best: Vec<f64> = vec![0.0; sgrid.num_cells()];
                for t in 0..ADHOC_SLOTS {
                    let (pp, sp) = (t % 9, t / 3);
                    let links: Vec<Link> =
                        pri[pp].iter().chain(&sec[sp]).map(|t| t.link).collect();
                    let samples = evaluate(&links, &cfg)?;
                    let np = pri[pp].len();
                    for (tx, &(_, r)) in pri[pp].iter().zip(&samples) {
                        min_in(&mut cell_rate[tx.cell], r / 9.0);
                        tallies.interference(received(&sec[sp], tx.link.rx, cfg.alpha), limit);
                    }
                    for (tx, &(_, r)) in sec[sp].iter().zip(&samples[np..]) {
                        let b = &mut sec_best[tx.cell];
                        *b = b.max(r / ADHOC_SLOTS as f64);
                    }
                    tallies.trace(f, ADHOC_SLOTS + t, Network::Secondary, &samples);
                }
                for txs in &sec {
                    for t in txs {
                        let r = sec_best[t.cell];
                        tallies.secondary_floor.record(r >= phy.k_s);
                        min_in(&mut sec_rate[t.cell], r);
                    }
                }
            }
            pair_rates = Rates::from_iter(
                primary_routes
                    .iter()
                    .map(|r| pair_rate(r, &pgrid, &cell_rate, &primary_loads)),
            );
            alone_rates = Rates::from_iter(
                primary_routes
                    .iter()
                    .map(|r| pair_rate(r, &pgrid, &alone_rate, &primary_loads)),
            );
        }
        Model::Infrastructure => {
            let bgrid = inst.bs_grid.expect("infrastructure instances carry a BS grid");
            infra_routes = pri_pts
                .iter()
                .enumerate()
                .map(|(i, &(s, d))| {
                    primary_route_infra(i, s, d, inst).expect("BS grid present")
                })
                .collect();
            let nb = bgrid.num_cells();
            let mut ulq: Vec<Vec<usize>> = vec![Vec::new(); nb];
            let mut dlq: Vec<Vec<usize>> = vec![Vec::new(); nb];
            for r in &infra_routes {
                ulq[r.source_bs].push(r.pair_id);
                dlq[r.destination_bs].push(r.pair_id);
            }
            bs_uplink_counts = ulq.iter().map(|q| q.len() as u32).collect();
            bs_downlink_counts = dlq.iter().map(|q| q.len() as u32).collect();
            empty_primary_cells = relays(&inst.primary_nodes.positions, &inst.primary_grid)
                .phantom
                .iter()
                .filter(|&&p| p)
                .count();

            let mut ul_rate = vec![f64::INFINITY; nb];
            let mut dl_rate = vec![f64::INFINITY; nb];
            let mut dl_alone = vec![f64::INFINITY; nb];
            let (w1, w2) = (cfg.delta_t / 18.0, (1.0 - cfg.delta_t) / 18.0);
            for f in 0..opts.frames {
                let ul: Vec<CellTx> = ulq
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| !q.is_empty())
                    .map(|(b, q)| CellTx {
                        cell: b,
                        link: counters.link(
                            pri_pts[q[f % q.len()]].0,
                            inst.bs_positions[b],
                            TxKind::Primary,
                            &cfg,
                        ),
                    })
                    .collect();
                let dl: Vec<CellTx> = dlq
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| !q.is_empty())
                    .map(|(b, q)| CellTx {
                        cell: b,
                        link: counters.link(
                            inst.bs_positions[b],
                            pri_pts[q[f % q.len()]].1,
                            TxKind::Primary,
                            &cfg,
                        ),
                    })
                    .collect();

                let links: Vec<Link> = ul.iter().map(|t| t.link).collect();
                let samples = evaluate(&links, &cfg)?;
                for (t, &(_, r)) in ul.iter().zip(&samples) {
                    tallies.primary_floor.record(r >= phy.k_p_prime);
                    min_in(&mut ul_rate[t.cell], r);
                }
                tallies.trace(f, 0, Network::Primary, &samples);

                let links: Vec<Link> = dl.iter().map(|t| t.link).collect();
                let samples = evaluate(&links, &cfg)?;
                for (t, &(_, r)) in dl.iter().zip(&samples) {
                    tallies.primary_floor.record(r >= phy.k_p_prime);
                    min_in(&mut dl_alone[t.cell], r);
                }

                let sec = secondary_frame(f, &mut counters);
                for (band, groups) in sec.iter().enumerate() {
                    let (w, floor) = if band == 0 {
                        (w1, phy.k_s1_of_m)
                    } else {
                        (w2, phy.k_s2)
                    };
                    for (ph, stx) in groups.iter().enumerate() {
                        let links: Vec<Link> = dl.iter().chain(stx).map(|t| t.link).collect();
                        let samples = evaluate(&links, &cfg)?;
                        for (t, &(_, r)) in dl.iter().zip(&samples) {
                            min_in(&mut dl_rate[t.cell], r);
                            tallies.interference(received(stx, t.link.rx, cfg.alpha), limit);
                        }
                        for (t, &(_, r)) in stx.iter().zip(&samples[dl.len()..]) {
                            let r = r * w;
                            let tally = if band == 0 {
                                &mut tallies.phase1
                            } else {
                                &mut tallies.phase2
                            };
                            tally.record(r >= floor);
                            tallies.secondary_floor.record(r >= floor);
                            min_in(&mut sec_rate[t.cell], r);
                        }
                        tallies.trace(f, 1 + 9 * band + ph, Network::Secondary, &samples);
                    }
                }
            }
            let share = |rate: &[f64], count: &[u32], b: usize| rate[b] / count[b].max(1) as f64;
            let infra_rate = |r: &InfraRoute, dl: &[f64]| {
                0.5 * share(&ul_rate, &bs_uplink_counts, r.source_bs)
                    .min(share(dl, &bs_downlink_counts, r.destination_bs))
            };
            pair_rates = Rates::from_iter(infra_routes.iter().map(|r| infra_rate(r, &dl_rate)));
            alone_rates = Rates::from_iter(infra_routes.iter().map(|r| infra_rate(r, &dl_alone)));
        }
    }
    phantom_relays += sec_queues
        .iter()
        .zip(&sec_relays.phantom)
        .filter(|(q, &ph)| !q.is_empty() && ph)
        .count();

    let sec_rates = Rates::from_iter(
        secondary_routes
            .iter()
            .filter(|r| r.is_served())
            .map(|r| pair_rate(r, &sgrid, &sec_rate, &secondary_loads)),
    );
    let (t_p, s_p, mean_p) = pair_rates.summary();
    let (t_alone, s_alone, mean_alone) = alone_rates.summary();
    let (t_s, s_s, mean_s) = sec_rates.summary();

    let served = secondary_routes.iter().filter(|r| r.is_served()).count();
    let unserved_in_region = secondary_routes
        .iter()
        .filter(|r| r.status == RouteStatus::UnservedInRegion)
        .count();
    let disconnected: Vec<usize> = secondary_routes
        .iter()
        .enumerate()
        .filter(|(_, r)| r.status == RouteStatus::UnservedDisconnected)
        .map(|(i, _)| i)
        .collect();
    let disconnected_but_reachable = if disconnected.is_empty() {
        0
    } else {
        let g = free_cell_graph(&preservation);
        disconnected
            .iter()
            .filter(|&&i| {
                let (s, d) = sec_pts[i];
                g.reachable(cell_of(s, &sgrid), cell_of(d, &sgrid))
            })
            .count()
    };
    if disconnected_but_reachable > 0 {
        log::debug!(
            "{disconnected_but_reachable} of {} disconnected pairs are reachable in the free-cell graph",
            disconnected.len()
        );
    }
    let loaded: Vec<bool> = secondary_loads
        .iter()
        .map(|l| l.classification == LoadClass::Loaded)
        .collect();
    let loaded_pass = secondary_routes
        .iter()
        .filter(|r| r.is_served() && r.cells().iter().any(|&c| loaded[sgrid.linear(c)]))
        .count();
    let total_pairs = secondary_routes.len();
    let frac = |k: usize| (total_pairs > 0).then(|| k as f64 / total_pairs as f64);

    let (primary_max, primary_mean) = max_mean(primary_loads.iter());
    let sel = |class: LoadClass, inside: Option<bool>| {
        max_mean(secondary_loads.iter().filter(move |l| {
            l.classification == class && inside.is_none_or(|v| l.in_avoidance == v)
        }))
    };
    let (reg_max, reg_mean) = sel(LoadClass::Regular, None);
    let (ld_max, ld_mean) = sel(LoadClass::Loaded, None);
    let load_stats = LoadStats {
        primary_max,
        primary_mean,
        bs_uplink_max: bs_uplink_counts.iter().copied().max().unwrap_or(0),
        bs_downlink_max: bs_downlink_counts.iter().copied().max().unwrap_or(0),
        secondary_regular_max: reg_max,
        secondary_regular_mean: reg_mean,
        secondary_loaded_max: ld_max,
        secondary_loaded_mean: ld_mean,
        regular_max_outside: sel(LoadClass::Regular, Some(false)).0,
        loaded_max_outside: sel(LoadClass::Loaded, Some(false)).0,
        regular_max_inside: sel(LoadClass::Regular, Some(true)).0,
        loaded_max_inside: sel(LoadClass::Loaded, Some(true)).0,
    };

    let avoidance_area_fraction = match (&avoidance, inst.bs_grid) {
        (Some(a), Some(bg)) => {
            let k = a.regions.first().map_or(0, |r| r.half_width_cells) as f64;
            (2.0 * k + 1.0).powi(2) * sgrid.cell_area / bg.cell_area
        }
        _ => cfg.delta_a,
    };

    let mut report = ThroughputReport {
        model: inst.model(),
        n: cfg.n,
        beta: cfg.beta,
        gamma: cfg.gamma,
        m: inst.m,
        l: inst.l,
        seed: inst.seed,
        primary_count: inst.primary_nodes.count(),
        secondary_count: inst.secondary_nodes.count(),
        primary_pairs: inst.primary_pairs.len(),
        secondary_pairs: total_pairs,
        served_secondary: served,
        t_p,
        s_p,
        t_alone,
        s_alone,
        t_s,
        s_s,
        mean_rate_p: mean_p,
        mean_rate_alone: mean_alone,
        mean_rate_s: mean_s,
        degenerate_primary: inst.primary_pairs.is_empty(),
        degenerate_secondary: served == 0,
        outage_fraction: frac(total_pairs - served),
        unserved_in_region,
        unserved_disconnected: disconnected.len(),
        disconnected_but_reachable,
        loaded_pass_fraction: frac(loaded_pass),
        shift_unresolved: secondary_routes.iter().filter(|r| r.shift_unresolved).count(),
        load_stats,
        empty_primary_cells,
        phantom_relays,
        power_clamps: counters.clamps,
        max_cluster_size: clusters.max_size,
        max_projection_length: clusters.projection_lengths.iter().copied().max().unwrap_or(0),
        preservation_blocked_area: primary_regions.blocked_area(),
        bs_preservation_area: only_kind(&preservation, RegionKind::PreserveBS).blocked_area(),
        avoidance_area_fraction,
        secondary_cell_area: sgrid.cell_area,
        primary_floor: tallies.primary_floor,
        secondary_floor: tallies.secondary_floor,
        secondary_floor_phase1: tallies.phase1,
        secondary_floor_phase2: tallies.phase2,
        interference_within: tallies.interference,
        max_secondary_interference: tallies.max_interference,
        phy,
        bound_checks: Vec::new(),
    };
    report.bound_checks = verify_bounds(&report, &cfg, &phy, clusters.max_size);

    Ok(Simulation {
        report,
        phy,
        preservation,
        avoidance,
        clusters,
        primary_routes,
        infra_routes,
        secondary_routes,
        primary_loads,
        secondary_loads,
        bs_uplink_counts,
        bs_downlink_counts,
        trace: tallies.trace,
    })
}
