//! Preservation regions around primary nodes and the clusters they form.
//!
//! Prints a PBM of the blocked cells to stdout when `--pbm` is given.

use hetnet::deployment::{deploy, Model, ScalingConfig};
use hetnet::regions::{build_preservation_regions, cluster_components, free_cell_graph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pbm = std::env::args().any(|a| a == "--pbm");
    for beta in [1.5, 2.5, 3.5] {
        let cfg = ScalingConfig::new(60.0, Model::AdHoc).with_beta(beta);
        let inst = deploy(&cfg, 3)?;
        let rs = build_preservation_regions(&inst)?;
        let clusters = cluster_components(&rs)?;
        let free = free_cell_graph(&rs);
        println!(
            "beta {beta}: {} regions, {:.1}% of area blocked, {} clusters, largest {}, \
             {} free components",
            rs.len(),
            100.0 * rs.blocked_area(),
            clusters.clusters.len(),
            clusters.max_size,
            free.component_count()
        );
        if pbm && beta == 3.5 {
            rs.write_pbm(std::io::stdout().lock())?;
        }
    }
    Ok(())
}
