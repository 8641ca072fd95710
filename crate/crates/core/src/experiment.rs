//! Parallel trial batches and density sweeps.
//!
//! Trial `j` at density index `i` always uses `trial_seed(master, i, j)` and
//! results are collected in index order, so output does not depend on the
//! number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{summarize_checks, verify_bounds, CheckSummary, ThroughputReport};
use crate::deployment::{deploy, ScalingConfig};
use crate::error::{Error, Result};
use crate::seed::trial_seed;
use crate::sim::{simulate, SimOptions};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "HETNET_THREADS";

/// Worker count from an explicit override, else `HETNET_THREADS`, else all cores.
pub fn worker_count(threads: Option<usize>) -> usize {
    threads
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(threads))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
}

/// All trials at one density, with checks re-run against the pooled N̂_c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatch {
    pub density_index: usize,
    pub config: ScalingConfig,
    /// Largest cluster seen in any trial of the batch.
    pub n_hat_c: usize,
    pub reports: Vec<ThroughputReport>,
    pub checks: Vec<CheckSummary>,
}

impl TrialBatch {
    fn assemble(density_index: usize, config: ScalingConfig, mut reports: Vec<ThroughputReport>) -> Self {
        let n_hat_c = reports.iter().map(|r| r.max_cluster_size).max().unwrap_or(0);
        for r in &mut reports {
            r.bound_checks = verify_bounds(r, &config, &r.phy, n_hat_c);
        }
        let checks = summarize_checks(&reports);
        TrialBatch {
            density_index,
            config,
            n_hat_c,
            reports,
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn one_trial(cfg: &ScalingConfig, seed: u64, opts: &SimOptions) -> Result<ThroughputReport> {
    Ok(simulate(&deploy(cfg, seed)?, opts)?.report)
}

/// Runs `trials` independent trials of `cfg` as density index `density_index`.
pub fn run_trials(
    cfg: &ScalingConfig,
    density_index: usize,
    trials: usize,
    master_seed: u64,
    opts: &SimOptions,
    threads: Option<usize>,
) -> Result<TrialBatch> {
    let mut batches = run_configs(&[(density_index, *cfg)], trials, master_seed, opts, threads)?;
    Ok(batches.remove(0))
}

/// Runs `trials` trials at each density of `densities`, with the rest of the
/// configuration taken from `template`.
pub fn run_sweep(
    template: &ScalingConfig,
    densities: &[f64],
    trials: usize,
    master_seed: u64,
    opts: &SimOptions,
    threads: Option<usize>,
) -> Result<Vec<TrialBatch>> {
    let configs: Vec<(usize, ScalingConfig)> = densities
        .iter()
        .enumerate()
        .map(|(i, &n)| (i, template.with_n(n)))
        .collect();
    run_configs(&configs, trials, master_seed, opts, threads)
}

fn run_configs(
    configs: &[(usize, ScalingConfig)],
    trials: usize,
    master_seed: u64,
    opts: &SimOptions,
    threads: Option<usize>,
) -> Result<Vec<TrialBatch>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    for (_, c) in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let pool = thread_pool(threads)?;
    let reports: Vec<ThroughputReport> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, t)| {
                let (di, cfg) = configs[c];
                one_trial(&cfg, trial_seed(master_seed, di, t), opts)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut it = reports.into_iter();
    Ok(configs
        .iter()
        .map(|&(di, cfg)| TrialBatch::assemble(di, cfg, it.by_ref().take(trials).collect()))
        .collect())
}
