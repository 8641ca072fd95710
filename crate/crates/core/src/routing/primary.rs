use serde::{Deserialize, Serialize};

use super::{hdp_vdp_walk, hops_from_walk, RoutePath, RouteStatus};
use crate::deployment::NetworkInstance;
use crate::geometry::{CellIndex, Point};

/// HDP then VDP between two primary cells.
pub fn primary_route(pair_id: usize, src: CellIndex, dst: CellIndex) -> RoutePath {
    RoutePath {
        pair_id,
        hops: hops_from_walk(&hdp_vdp_walk(src, dst)),
        status: RouteStatus::Served,
        shift_unresolved: false,
    }
}

/// Uplink and downlink base stations of an infrastructure pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfraRoute {
    pub pair_id: usize,
    pub source_bs: usize,
    pub destination_bs: usize,
}

/// Source → nearest BS, backbone, nearest BS → destination.
///
/// Returns `None` under the ad hoc model.
pub fn primary_route_infra(
    pair_id: usize,
    src: Point,
    dst: Point,
    inst: &NetworkInstance,
) -> Option<InfraRoute> {
    Some(InfraRoute {
        pair_id,
        source_bs: inst.nearest_bs(src)?,
        destination_bs: inst.nearest_bs(dst)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{deploy, Model, ScalingConfig};
    use crate::routing::Segment;

    #[test]
    fn same_cell_is_one_zero_length_hop() {
        let c = CellIndex::new(2, 2);
        let r = primary_route(0, c, c);
        assert_eq!(r.hops.len(), 1);
        assert_eq!(r.hops[0].from_cell, r.hops[0].to_cell);
    }

    #[test]
    fn manhattan_shape() {
        let r = primary_route(0, CellIndex::new(0, 0), CellIndex::new(3, 2));
        let segs: Vec<Segment> = r.hops.iter().map(|h| h.segment).collect();
        use Segment::*;
        assert_eq!(segs, vec![HDP, HDP, HDP, VDP, VDP]);
        assert_eq!(r.hops.last().unwrap().to_cell, CellIndex::new(3, 2));
    }

    #[test]
    fn hop_count_is_manhattan_on_6x6() {
        let cells: Vec<CellIndex> = (0..36).map(|i| CellIndex::new(i % 6, i / 6)).collect();
        for &a in &cells {
            for &b in &cells {
                let r = primary_route(0, a, b);
                let expect = a.manhattan(&b).max(1) as usize;
                assert_eq!(r.hops.len(), expect);
                assert!(r.is_connected_walk());
                assert_eq!(r.hops[0].from_cell, a);
                assert_eq!(r.hops.last().unwrap().to_cell, b);
            }
        }
    }

    #[test]
    fn infra_route_uses_containing_cells() {
        let inst = deploy(&ScalingConfig::new(300.0, Model::Infrastructure), 4).unwrap();
        let bs = inst.bs_positions[5];
        let r = primary_route_infra(0, bs, bs, &inst).unwrap();
        assert_eq!(r.source_bs, 5);
        assert_eq!(r.destination_bs, 5);
        let adhoc = deploy(&ScalingConfig::new(300.0, Model::AdHoc), 4).unwrap();
        assert!(primary_route_infra(0, bs, bs, &adhoc).is_none());
    }
}
