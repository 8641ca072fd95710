//! Fit how the primary throughput scales with density.

use hetnet::analysis::{scaling_sweep, Statistic};
use hetnet::deployment::{Model, ScalingConfig};
use hetnet::sim::SimOptions;

fn main() -> hetnet::Result<()> {
    let cfg = ScalingConfig::new(128.0, Model::AdHoc);
    let densities = [128.0, 256.0, 512.0, 1024.0];
    for stat in [Statistic::SAloneSqrtLogN, Statistic::Sp, Statistic::MaxCluster] {
        let (fit, _) = scaling_sweep(&cfg, &densities, 5, stat, 1, &SimOptions::default())?;
        println!(
            "{:<22} slope {:.3}, intercept {:.3}, r2 {:.4}",
            stat.name(),
            fit.slope,
            fit.intercept,
            fit.r2
        );
        for (x, y) in &fit.points {
            println!("    x = {x:>10.1}  y = {y:.4e}");
        }
    }
    Ok(())
}
