//! Interference series and per-cell rate constants for the default parameters.

use hetnet::deployment::{Model, ScalingConfig};
use hetnet::phy::{rate_constants, series_i, series_i_prime, DEFAULT_SERIES_TOL};

fn main() -> hetnet::Result<()> {
    for alpha in [3.0, 4.0, 6.0] {
        let i = series_i(1.0, alpha, DEFAULT_SERIES_TOL)?;
        let ip = series_i_prime(1.0, alpha, DEFAULT_SERIES_TOL)?;
        println!("alpha = {alpha}: I = {i:.6}, I' = {ip:.6}");
    }

    let cfg = ScalingConfig::new(1000.0, Model::Infrastructure);
    let k = rate_constants(&cfg, cfg.m())?;
    println!("\nn = {}, m = {:.0}", cfg.n, k.m);
    println!("delta_P max {:.6e} (ad hoc), {:.6e} (infra)", k.delta_p_max, k.delta_p_max_prime);
    println!("delta_P used {:.6e}", k.delta_p);
    println!("K_p  = {:.6e}", k.k_p);
    println!("K_s  = {:.6e}", k.k_s);
    println!("K'_p = {:.6e}", k.k_p_prime);
    println!("K_s1 = {:.6e}", k.k_s1_of_m);
    println!("K_s2 = {:.6e}", k.k_s2);
    Ok(())
}
