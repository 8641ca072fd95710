//! Throughput reports, analytic bounds, and power-law fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::deployment::{Model, NetworkInstance, ScalingConfig};
use crate::error::{Error, Result};
use crate::phy::PhyConstants;
use crate::routing::RoutePath;
use crate::sim::{simulate, SimOptions};

/// Count of active slots and how many met a rate floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SlotTally {
    pub samples: u64,
    pub meeting: u64,
}

impl SlotTally {
    pub fn record(&mut self, ok: bool) {
        self.samples += 1;
        self.meeting += ok as u64;
    }

    pub fn merge(&mut self, other: &SlotTally) {
        self.samples += other.samples;
        self.meeting += other.meeting;
    }

    /// Fraction meeting the floor; 1 when nothing was active.
    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.meeting as f64 / self.samples as f64
        }
    }
}

/// Maximum and mean path counts per cell class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadStats {
    pub primary_max: u32,
    pub primary_mean: f64,
    pub bs_uplink_max: u32,
    pub bs_downlink_max: u32,
    pub secondary_regular_max: u32,
    pub secondary_regular_mean: f64,
    pub secondary_loaded_max: u32,
    pub secondary_loaded_mean: f64,
    pub regular_max_outside: u32,
    pub loaded_max_outside: u32,
    pub regular_max_inside: u32,
    pub loaded_max_inside: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckKind {
    /// Must hold in at least 95% of non-voided trials.
    WhpTrial,
    /// Pooled over all trials, at least 99% of active slots.
    SlotFraction,
    /// Must hold on every trial.
    EveryTrial,
}

impl CheckKind {
    pub fn required_rate(&self) -> f64 {
        match self {
            CheckKind::WhpTrial => 0.95,
            CheckKind::SlotFraction => 0.99,
            CheckKind::EveryTrial => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// observed ≤ bound
    Upper,
    /// observed ≥ bound
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub kind: CheckKind,
    pub direction: Direction,
    pub bound: f64,
    pub observed: f64,
    pub pass: bool,
    /// Node counts strayed beyond ε, so this w.h.p. check does not count.
    pub voided: bool,
    pub n_hat_c: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slots: Option<SlotTally>,
}

impl BoundCheck {
    fn new(name: &str, kind: CheckKind, direction: Direction, bound: f64, observed: f64) -> Self {
        let pass = match direction {
            Direction::Upper => observed <= bound,
            Direction::Lower => observed >= bound,
        };
        BoundCheck {
            name: name.to_string(),
            kind,
            direction,
            bound,
            observed,
            pass,
            voided: false,
            n_hat_c: None,
            slots: None,
        }
    }

    fn slots(name: &str, tally: SlotTally) -> Self {
        let mut c = Self::new(
            name,
            CheckKind::SlotFraction,
            Direction::Lower,
            CheckKind::SlotFraction.required_rate(),
            tally.fraction(),
        );
        c.slots = Some(tally);
        c
    }

    fn with_nc(mut self, nc: usize) -> Self {
        self.n_hat_c = Some(nc);
        self
    }
}

/// Measured throughput, outage and load statistics of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub model: Model,
    pub n: f64,
    pub beta: f64,
    pub gamma: f64,
    pub m: f64,
    pub l: usize,
    pub seed: u64,
    pub primary_count: usize,
    pub secondary_count: usize,
    pub primary_pairs: usize,
    pub secondary_pairs: usize,
    pub served_secondary: usize,

    pub t_p: f64,
    pub s_p: f64,
    pub t_alone: f64,
    pub s_alone: f64,
    pub t_s: f64,
    pub s_s: f64,
    pub mean_rate_p: f64,
    pub mean_rate_alone: f64,
    pub mean_rate_s: f64,
    pub degenerate_primary: bool,
    pub degenerate_secondary: bool,

    pub outage_fraction: Option<f64>,
    pub unserved_in_region: usize,
    pub unserved_disconnected: usize,
    pub disconnected_but_reachable: usize,
    pub loaded_pass_fraction: Option<f64>,
    pub shift_unresolved: usize,

    pub load_stats: LoadStats,
    pub empty_primary_cells: usize,
    pub phantom_relays: usize,
    pub power_clamps: usize,

    pub max_cluster_size: usize,
    pub max_projection_length: u32,
    pub preservation_blocked_area: f64,
    pub bs_preservation_area: f64,
    pub avoidance_area_fraction: f64,
    pub secondary_cell_area: f64,

    pub primary_floor: SlotTally,
    pub secondary_floor: SlotTally,
    pub secondary_floor_phase1: SlotTally,
    pub secondary_floor_phase2: SlotTally,
    pub interference_within: SlotTally,
    pub max_secondary_interference: f64,

    pub phy: PhyConstants,
    pub bound_checks: Vec<BoundCheck>,
}

impl ThroughputReport {
    /// T_p / T_alone, or 1 when the primary network carries nothing.
    pub fn protection_ratio(&self) -> f64 {
        if self.t_alone > 0.0 {
            self.t_p / self.t_alone
        } else {
            1.0
        }
    }

    /// Unserved plus loaded-cell passes, both as fractions of all pairs.
    pub fn total_outage(&self) -> Option<f64> {
        Some(self.outage_fraction? + self.loaded_pass_fraction?)
    }
}

/// Runs the full protocol stack on an instance and measures throughput.
pub fn measure_throughput(inst: &NetworkInstance, opts: &SimOptions) -> Result<ThroughputReport> {
    Ok(simulate(inst, opts)?.report)
}

/// Fraction of secondary pairs left unserved; `None` without pairs.
pub fn outage_fraction(routes: &[RoutePath]) -> Option<f64> {
    if routes.is_empty() {
        return None;
    }
    Some(routes.iter().filter(|r| !r.is_served()).count() as f64 / routes.len() as f64)
}

/// Chernoff-type bound e^{−λ}(eλ)^x / x^x on P(X ≥ x), X ~ Poisson(λ).
pub fn poisson_tail(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0 && x > lambda) {
        return Err(Error::InvalidArgument(format!(
            "poisson tail bound needs x > lambda > 0, got lambda={lambda}, x={x}"
        )));
    }
    Ok((-lambda + x * (1.0 + lambda.ln()) - x * x.ln()).exp())
}

pub fn primary_load_bound(n: f64) -> f64 {
    4.0 * (2.0 * n * n.ln()).sqrt()
}

pub fn secondary_regular_bound(m: f64) -> f64 {
    4.0 * (2.0 * m * m.ln()).sqrt()
}

pub fn cluster_factor(n_hat_c: usize) -> f64 {
    6.0 * n_hat_c as f64 + 1.0
}

pub fn eps_s1(m: f64, beta: f64, eps: f64, n_hat_c: usize) -> f64 {
    72.0 * ((1.0 + eps) / (1.0 - eps)) * ((PI + 4.0 * n_hat_c as f64) / PI) * m.ln()
        / m.powf(1.0 - 1.0 / beta)
}

pub fn eps_s2(m: f64, beta: f64, eps: f64) -> f64 {
    40.0 * 2f64.sqrt() * ((1.0 + eps) / (1.0 - eps)) * m.ln().sqrt()
        / m.powf(1.5 - 2.0 / beta)
}

/// Outage added by the preservation regions around base stations, from
/// their total area.
pub fn eps_b(bs_area: f64, eps: f64) -> f64 {
    4.0 * bs_area / (1.0 - eps)
}

pub fn bs_load_bound(n: f64, l: usize) -> f64 {
    2.0 * n / l as f64
}

pub fn outside_regular_bound(m: f64, delta_a: f64) -> f64 {
    secondary_regular_bound(m) / (1.0 - delta_a.sqrt())
}

pub fn inside_regular_bound(m: f64, l: usize, delta_a: f64) -> f64 {
    2.0 * (2.0 * delta_a * (m / l as f64) * m.ln()).sqrt()
}

/// Whether realized node counts stay within ε of their densities.
pub fn counts_within_eps(report: &ThroughputReport, eps: f64) -> bool {
    let ok = |count: usize, mean: f64| (count as f64 - mean).abs() <= eps * mean;
    ok(report.primary_count, report.n) && ok(report.secondary_count, report.m)
}

/// Every implemented bound for one trial, with `n_hat_c` standing in for
/// the cluster-size constant.
pub fn verify_bounds(
    report: &ThroughputReport,
    cfg: &ScalingConfig,
    phy: &PhyConstants,
    n_hat_c: usize,
) -> Vec<BoundCheck> {
    use CheckKind::*;
    use Direction::*;
    let (n, m, eps) = (report.n, report.m, cfg.epsilon);
    let ls = &report.load_stats;
    let voided = !counts_within_eps(report, eps);
    let mut checks = Vec::new();

    checks.push(BoundCheck::new(
        "primary_pairs",
        WhpTrial,
        Lower,
        (1.0 - eps) * n / 2.0,
        report.primary_pairs as f64,
    ));
    checks.push(BoundCheck::new(
        "preservation_area",
        WhpTrial,
        Upper,
        9.0 * (1.0 + eps) * n * report.secondary_cell_area,
        report.preservation_blocked_area,
    ));

    match report.model {
        Model::AdHoc => {
            checks.push(BoundCheck::new(
                "primary_cell_occupancy",
                WhpTrial,
                Upper,
                0.0,
                report.empty_primary_cells as f64,
            ));
            checks.push(BoundCheck::new(
                "primary_load",
                WhpTrial,
                Upper,
                primary_load_bound(n),
                ls.primary_max as f64,
            ));
            checks.push(BoundCheck::new(
                "secondary_load_regular",
                WhpTrial,
                Upper,
                secondary_regular_bound(m),
                ls.secondary_regular_max as f64,
            ));
            checks.push(
                BoundCheck::new(
                    "secondary_load_loaded",
                    WhpTrial,
                    Upper,
                    cluster_factor(n_hat_c) * secondary_regular_bound(m),
                    ls.secondary_loaded_max as f64,
                )
                .with_nc(n_hat_c),
            );
            if let Some(out) = report.outage_fraction {
                checks.push(
                    BoundCheck::new(
                        "unserved_fraction",
                        WhpTrial,
                        Upper,
                        eps_s1(m, cfg.beta, eps, n_hat_c),
                        out,
                    )
                    .with_nc(n_hat_c),
                );
            }
            if cfg.beta > 4.0 / 3.0 {
                if let Some(lp) = report.loaded_pass_fraction {
                    checks.push(BoundCheck::new(
                        "loaded_pass_fraction",
                        WhpTrial,
                        Upper,
                        eps_s2(m, cfg.beta, eps),
                        lp,
                    ));
                }
                if let Some(total) = report.total_outage() {
                    checks.push(
                        BoundCheck::new(
                            "total_outage",
                            WhpTrial,
                            Upper,
                            eps_s1(m, cfg.beta, eps, n_hat_c) + eps_s2(m, cfg.beta, eps),
                            total,
                        )
                        .with_nc(n_hat_c),
                    );
                }
            }
            checks.push(BoundCheck::new(
                "primary_throughput_floor",
                WhpTrial,
                Lower,
                phy.k_p / primary_load_bound(n),
                report.t_p,
            ));
            checks.push(BoundCheck::slots("primary_rate_floor", report.primary_floor));
            checks.push(BoundCheck::slots("secondary_rate_floor", report.secondary_floor));
        }
        Model::Infrastructure => {
            let l = report.l;
            let da = report.avoidance_area_fraction;
            checks.push(BoundCheck::new(
                "bs_uplink_load",
                WhpTrial,
                Upper,
                bs_load_bound(n, l),
                ls.bs_uplink_max as f64,
            ));
            checks.push(BoundCheck::new(
                "bs_downlink_load",
                WhpTrial,
                Upper,
                bs_load_bound(n, l),
                ls.bs_downlink_max as f64,
            ));
            checks.push(BoundCheck::new(
                "secondary_load_outside_regular",
                WhpTrial,
                Upper,
                outside_regular_bound(m, da),
                ls.regular_max_outside as f64,
            ));
            checks.push(
                BoundCheck::new(
                    "secondary_load_outside_loaded",
                    WhpTrial,
                    Upper,
                    cluster_factor(n_hat_c) * outside_regular_bound(m, da),
                    ls.loaded_max_outside as f64,
                )
                .with_nc(n_hat_c),
            );
            checks.push(BoundCheck::new(
                "secondary_load_inside_regular",
                WhpTrial,
                Upper,
                inside_regular_bound(m, l, da),
                ls.regular_max_inside as f64,
            ));
            checks.push(
                BoundCheck::new(
                    "secondary_load_inside_loaded",
                    WhpTrial,
                    Upper,
                    cluster_factor(n_hat_c) * inside_regular_bound(m, l, da),
                    ls.loaded_max_inside as f64,
                )
                .with_nc(n_hat_c),
            );
            if let Some(out) = report.outage_fraction {
                checks.push(
                    BoundCheck::new(
                        "unserved_fraction",
                        WhpTrial,
                        Upper,
                        eps_s1(m, cfg.beta, eps, n_hat_c) + eps_b(report.bs_preservation_area, eps),
                        out,
                    )
                    .with_nc(n_hat_c),
                );
            }
            checks.push(BoundCheck::new(
                "primary_throughput_floor",
                WhpTrial,
                Lower,
                0.5 * phy.k_p_prime / bs_load_bound(n, l),
                report.t_p,
            ));
            checks.push(BoundCheck::slots("primary_rate_floor", report.primary_floor));
            checks.push(BoundCheck::slots("secondary_rate_floor_phase1", report.secondary_floor_phase1));
            checks.push(BoundCheck::slots("secondary_rate_floor_phase2", report.secondary_floor_phase2));
        }
    }

    checks.push(BoundCheck::slots("secondary_interference", report.interference_within));
    checks.push(BoundCheck::new(
        "primary_protection",
        EveryTrial,
        Lower,
        1.0 - cfg.delta_loss - 0.01,
        report.protection_ratio(),
    ));

    for c in &mut checks {
        if c.kind == WhpTrial {
            c.voided = voided;
        }
    }
    checks
}

/// Pooled outcome of one named check over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub kind: CheckKind,
    pub trials: usize,
    pub voided: usize,
    pub passed: usize,
    pub pass_rate: f64,
    pub required: f64,
    pub worst_observed: f64,
    pub bound: f64,
    pub n_hat_c: Option<usize>,
    pub pass: bool,
}

/// Pools per-trial checks by name, in first-seen order.
pub fn summarize_checks(reports: &[ThroughputReport]) -> Vec<CheckSummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        for c in &r.bound_checks {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let checks: Vec<&BoundCheck> = reports
                .iter()
                .flat_map(|r| r.bound_checks.iter().filter(move |c| c.name == name))
                .collect();
            let first = checks[0];
            let kind = first.kind;
            let counted: Vec<&&BoundCheck> = checks.iter().filter(|c| !c.voided).collect();
            let passed = counted.iter().filter(|c| c.pass).count();
            let worst = counted
                .iter()
                .map(|c| c.observed)
                .fold(None, |acc: Option<f64>, v| {
                    Some(match (acc, first.direction) {
                        (None, _) => v,
                        (Some(a), Direction::Upper) => a.max(v),
                        (Some(a), Direction::Lower) => a.min(v),
                    })
                })
                .unwrap_or(f64::NAN);
            let (pass_rate, pass) = match kind {
                CheckKind::SlotFraction => {
                    let mut t = SlotTally::default();
                    for c in &checks {
                        if let Some(s) = c.slots {
                            t.merge(&s);
                        }
                    }
                    (t.fraction(), t.fraction() >= kind.required_rate())
                }
                _ => {
                    let rate = if counted.is_empty() {
                        1.0
                    } else {
                        passed as f64 / counted.len() as f64
                    };
                    (rate, rate >= kind.required_rate())
                }
            };
            CheckSummary {
                name: name.to_string(),
                kind,
                trials: checks.len(),
                voided: checks.len() - counted.len(),
                passed,
                pass_rate,
                required: kind.required_rate(),
                worst_observed: worst,
                bound: first.bound,
                n_hat_c: first.n_hat_c,
                pass,
            }
        })
        .collect()
}

/// Least-squares fit of log(statistic) against log(density).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub statistic: String,
    pub points: Vec<(f64, f64)>,
    pub variances: Vec<f64>,
    pub excluded: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub note: String,
}

const FIT_NOTE: &str = "slope of an unweighted log-log fit; constants are not compared";

/// Fits `y = e^intercept · x^slope` through positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for &(x, y) in points {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            kept.push((x, y));
        } else {
            log::warn!("excluding non-positive point ({x}, {y}) from the fit");
            excluded.push(x);
        }
    }
    let mut xs: Vec<f64> = kept.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fit needs at least 2 distinct positive densities, got {}",
            xs.len()
        )));
    }
    let lx: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ScalingFit {
        statistic: String::new(),
        points: kept,
        variances: Vec::new(),
        excluded,
        slope,
        intercept,
        r2,
        note: FIT_NOTE.to_string(),
    })
}

/// Per-trial quantity fitted against a density axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    /// S_alone·√log n against n.
    SAloneSqrtLogN,
    /// S_s·√log m against m.
    SsSqrtLogM,
    /// S_alone against l.
    SAloneVsL,
    /// S_p against n.
    Sp,
    /// Outage fraction against m.
    Outage,
    /// Largest preservation cluster against n.
    MaxCluster,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::SAloneSqrtLogN => "s_alone_sqrt_log_n",
            Statistic::SsSqrtLogM => "s_s_sqrt_log_m",
            Statistic::SAloneVsL => "s_alone_vs_l",
            Statistic::Sp => "s_p",
            Statistic::Outage => "outage_fraction",
            Statistic::MaxCluster => "max_cluster_size",
        }
    }

    pub fn x(&self, r: &ThroughputReport) -> f64 {
        match self {
            Statistic::SsSqrtLogM | Statistic::Outage => r.m,
            Statistic::SAloneVsL => r.l as f64,
            _ => r.n,
        }
    }

    pub fn y(&self, r: &ThroughputReport) -> f64 {
        match self {
            Statistic::SAloneSqrtLogN => r.s_alone * r.n.ln().sqrt(),
            Statistic::SsSqrtLogM => r.s_s * r.m.ln().sqrt(),
            Statistic::SAloneVsL => r.s_alone,
            Statistic::Sp => r.s_p,
            Statistic::Outage => r.outage_fraction.unwrap_or(f64::NAN),
            Statistic::MaxCluster => r.max_cluster_size as f64,
        }
    }
}

/// Averages `stat` per density (one inner vector of trials per density)
/// and fits the means.
pub fn fit_statistic(batches: &[Vec<ThroughputReport>], stat: Statistic) -> Result<ScalingFit> {
    let mut points = Vec::new();
    let mut variances = Vec::new();
    for trials in batches.iter().filter(|t| !t.is_empty()) {
        let ys: Vec<f64> = trials.iter().map(|r| stat.y(r)).filter(|y| y.is_finite()).collect();
        let k = ys.len().max(1) as f64;
        let mean = ys.iter().sum::<f64>() / k;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        points.push((stat.x(&trials[0]), mean));
        variances.push(var);
    }
    let mut fit = fit_power_law(&points)?;
    fit.statistic = stat.name().to_string();
    fit.variances = variances;
    // Keep raw means, including excluded ones, for the record.
    fit.points = points;
    Ok(fit)
}

/// Runs `trials` trials at each density and fits `stat`.
pub fn scaling_sweep(
    cfg_template: &ScalingConfig,
    densities: &[f64],
    trials: usize,
    stat: Statistic,
    seed: u64,
    opts: &SimOptions,
) -> Result<(ScalingFit, Vec<Vec<ThroughputReport>>)> {
    if densities.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least 3 densities, got {}",
            densities.len()
        )));
    }
    if trials < 5 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least 5 trials per density, got {trials}"
        )));
    }
    let batches = crate::experiment::run_sweep(cfg_template, densities, trials, seed, opts, None)?;
    let reports: Vec<Vec<ThroughputReport>> = batches.into_iter().map(|b| b.reports).collect();
    Ok((fit_statistic(&reports, stat)?, reports))
}
