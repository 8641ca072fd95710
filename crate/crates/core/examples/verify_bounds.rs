//! Run a batch of trials and check every bound the configuration admits.

use hetnet::cli::format_checks;
use hetnet::deployment::{Model, ScalingConfig};
use hetnet::experiment::run_trials;
use hetnet::sim::SimOptions;

fn main() -> hetnet::Result<()> {
    for model in [Model::AdHoc, Model::Infrastructure] {
        let cfg = ScalingConfig::new(60.0, model).with_beta(2.5);
        let batch = run_trials(&cfg, 0, 10, 42, &SimOptions::default(), None)?;
        println!("{model:?}: pooled largest cluster {}", batch.n_hat_c);
        println!("{}", format_checks(&batch.checks));
        println!("all pass: {}\n", batch.all_pass());
    }
    Ok(())
}
