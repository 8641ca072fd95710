//! Deploy both networks once and print what was sampled.
//!
//! `cargo run --example deploy_network -- 500 infra`

use hetnet::deployment::{deploy, Model, ScalingConfig};

fn main() -> hetnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(500.0);
    let model = match args.next().as_deref() {
        Some("infra") => Model::Infrastructure,
        _ => Model::AdHoc,
    };
    let inst = deploy(&ScalingConfig::new(n, model), 7)?;

    println!("model {:?}, n = {n}, m = {:.1}, l = {}", model, inst.m, inst.l);
    println!(
        "primary nodes {} ({} pairs), secondary nodes {} ({} pairs)",
        inst.primary_nodes.count(),
        inst.primary_pairs.len(),
        inst.secondary_nodes.count(),
        inst.secondary_pairs.len()
    );
    println!(
        "primary grid {}x{} (cell area {:.4}), secondary grid {}x{} (cell area {:.6})",
        inst.primary_grid.side(),
        inst.primary_grid.side(),
        inst.primary_grid.cell_area,
        inst.secondary_grid.side(),
        inst.secondary_grid.side(),
        inst.secondary_grid.cell_area
    );
    if let Some(bs) = &inst.bs_grid {
        println!("{} base stations on a {}x{} lattice", inst.bs_positions.len(), bs.side(), bs.side());
    }

    // Instances round-trip through JSON.
    let back = hetnet::deployment::NetworkInstance::from_json(&inst.to_json()?)?;
    assert_eq!(back, inst);
    Ok(())
}
