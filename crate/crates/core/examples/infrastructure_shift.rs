//! Secondary routing under the infrastructure model: paths are shifted off
//! base-station avoidance regions, and hops that still start inside one run
//! in Phase One.

use hetnet::deployment::{deploy, Model, ScalingConfig};
use hetnet::geometry::cell_of;
use hetnet::regions::{build_avoidance_regions, build_preservation_regions};
use hetnet::routing::{secondary_route_infra, AvoidanceMap, Obstacles, Phase};
use hetnet::sim::{simulate, SimOptions};

fn main() -> hetnet::Result<()> {
    let cfg = ScalingConfig::new(60.0, Model::Infrastructure).with_beta(2.5);
    let inst = deploy(&cfg, 5)?;
    let avoid = build_avoidance_regions(&inst)?;
    let map = AvoidanceMap::new(&avoid, inst.l);
    let obs = Obstacles::new(&build_preservation_regions(&inst)?);
    let g = &inst.secondary_grid;

    let (mut one, mut two, mut unresolved, mut served) = (0, 0, 0, 0);
    for (id, &(s, d)) in inst.secondary_pairs.pairs.iter().enumerate() {
        let src = cell_of(inst.secondary_nodes.positions[s], g);
        let dst = cell_of(inst.secondary_nodes.positions[d], g);
        let r = secondary_route_infra(id, src, dst, &map, &obs);
        unresolved += r.shift_unresolved as usize;
        if r.is_served() {
            served += 1;
        }
        for h in &r.hops {
            match h.phase {
                Phase::One => one += 1,
                _ => two += 1,
            }
        }
    }
    println!(
        "{} base stations, avoidance covers {:.1}% of the area",
        inst.l,
        100.0 * avoid.blocked_area()
    );
    println!("{served}/{} pairs served, {unresolved} shifts unresolved", inst.secondary_pairs.len());
    println!("{one} Phase One hops, {two} Phase Two hops");

    let r = simulate(&inst, &SimOptions::default())?.report;
    println!(
        "T_p {:.3e} (alone {:.3e}), T_s {:.3e}, S_s {:.3e}",
        r.t_p, r.t_alone, r.t_s, r.s_s
    );
    Ok(())
}
