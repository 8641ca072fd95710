//! Primary throughput with and without secondary traffic as the secondary
//! power factor approaches its admissible maximum.

use hetnet::deployment::{deploy, Model, ScalingConfig};
use hetnet::sim::{simulate, SimOptions};

fn main() -> hetnet::Result<()> {
    for model in [Model::AdHoc, Model::Infrastructure] {
        let base = ScalingConfig::new(60.0, model).with_beta(2.5);
        println!("{model:?} (delta_loss {})", base.delta_loss);
        for scale in [0.1, 0.5, 1.0, 1.1] {
            let mut cfg = base;
            cfg.delta_p = base.delta_p * scale;
            let r = simulate(&deploy(&cfg, 9)?, &SimOptions::default())?.report;
            println!(
                "  delta_P {:.3e}: T_p/T_alone {:.4}, served secondary pairs {}",
                cfg.delta_p,
                r.protection_ratio(),
                r.served_secondary
            );
        }
    }
    Ok(())
}
