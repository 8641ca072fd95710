//! Route secondary pairs around blocked cells and tally what happened.

use std::collections::BTreeMap;

use hetnet::deployment::{deploy, Model, ScalingConfig};
use hetnet::geometry::cell_of;
use hetnet::regions::build_preservation_regions;
use hetnet::routing::{secondary_route_adhoc, Obstacles, Segment};

fn main() -> hetnet::Result<()> {
    let cfg = ScalingConfig::new(60.0, Model::AdHoc).with_beta(2.5);
    let inst = deploy(&cfg, 11)?;
    let rs = build_preservation_regions(&inst)?;
    let obs = Obstacles::new(&rs);
    let g = &inst.secondary_grid;

    let mut status = BTreeMap::new();
    let mut segments = BTreeMap::new();
    let mut longest = 0;
    for (id, &(s, d)) in inst.secondary_pairs.pairs.iter().enumerate() {
        let src = cell_of(inst.secondary_nodes.positions[s], g);
        let dst = cell_of(inst.secondary_nodes.positions[d], g);
        let route = secondary_route_adhoc(id, src, dst, &obs);
        *status.entry(format!("{:?}", route.status)).or_insert(0) += 1;
        if route.is_served() {
            assert!(route.is_connected_walk());
            longest = longest.max(route.hops.len());
            for h in &route.hops {
                *segments.entry(format!("{:?}", h.segment)).or_insert(0usize) += 1;
            }
        }
    }
    let detours = segments.get(&format!("{:?}", Segment::Detour)).copied().unwrap_or(0);

    println!("{} pairs on a {}x{} grid, {} cells blocked", inst.secondary_pairs.len(), g.side(), g.side(), rs.blocked_count());
    println!("status: {status:?}");
    println!("hops by segment: {segments:?}");
    println!("{detours} detour hops, longest route {longest} hops");
    Ok(())
}
