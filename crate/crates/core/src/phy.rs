//! Interference series, rate constants, TDMA phases, power control and
//! slot-level SINR evaluation.
//!
//! All rates are in bps/Hz (log base 2). TDMA time-sharing factors live in
//! the rate constants and in the frame engine, never inside [`evaluate_slot`].

use serde::{Deserialize, Serialize};

use crate::deployment::ScalingConfig;
use crate::error::{Error, Result};
use crate::geometry::{CellGrid, CellIndex, Point};

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Number of terms after which the series gives up on `tol` and returns its
/// bracketed estimate anyway.
const MAX_SERIES_TERMS: u64 = 50_000_000;

/// ∫_T^∞ t (a t − b)^{−α} dt.
fn kernel_tail_integral(a: f64, b: f64, alpha: f64, t: f64) -> f64 {
    let u0 = a * t - b;
    (u0.powf(2.0 - alpha) / (alpha - 2.0) + b * u0.powf(1.0 - alpha) / (alpha - 1.0)) / (a * a)
}

/// P·2^{α/2+3}·Σ_{t≥1} t (a t − b)^{−α}, with the tail past the last summed
/// term replaced by the midpoint of its integral bracket.
fn ring_series(p: f64, alpha: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "series needs alpha > 2, got {alpha}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let scale = p * 2f64.powf(alpha / 2.0 + 3.0);
    let f = |t: f64| t * (a * t - b).powf(-alpha);
    let mut sum = 0.0;
    let mut t = 0u64;
    loop {
        t += 1;
        let ft = f(t as f64);
        sum += ft;
        if scale * ft / 2.0 <= tol || t >= MAX_SERIES_TERMS {
            if t >= MAX_SERIES_TERMS {
                log::warn!("ring series stopped at {t} terms above tol {tol}");
            }
            let tf = t as f64;
            let hi = kernel_tail_integral(a, b, alpha, tf);
            let lo = kernel_tail_integral(a, b, alpha, tf + 1.0);
            return Ok(scale * (sum + 0.5 * (hi + lo)));
        }
    }
}

/// Worst-case interference bound of the ad hoc 9-TDMA schedule.
pub fn series_i(p: f64, alpha: f64, tol: f64) -> Result<f64> {
    ring_series(p, alpha, 3.0, 2.0, tol)
}

/// Worst-case interference bound of the simultaneous BS lattice.
pub fn series_i_prime(p: f64, alpha: f64, tol: f64) -> Result<f64> {
    ring_series(p, alpha, 2.0, 1.0, tol)
}

/// Largest secondary power fraction keeping the primary rate loss below
/// `delta_loss`, before clamping to 1.
pub fn delta_p_max(p: f64, n0: f64, delta_loss: f64, i: f64) -> f64 {
    if delta_loss == 0.0 {
        return 0.0;
    }
    let snr = p / n0;
    (1.0 / ((1.0 + snr).powf(1.0 - delta_loss) - 1.0) - n0 / p) * p / i
}

/// Per-cell sustainable rates and power limits for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhyConstants {
    pub i: f64,
    pub i_prime: f64,
    pub k_p: f64,
    pub k_s: f64,
    pub k_p_prime: f64,
    pub k_s1_of_m: f64,
    pub k_s2: f64,
    pub delta_p_max: f64,
    pub delta_p_max_prime: f64,
    pub delta_p: f64,
    pub m: f64,
}

/// log2(1 + x), accurate for small x.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// K′_{s,1}(m) for the secondary cells inside avoidance regions.
pub fn k_s1(cfg: &ScalingConfig, i: f64, i_prime: f64, m: f64) -> f64 {
    let bs_term = cfg.p * (2.0 * m.ln() / (cfg.beta * cfg.delta_a)).powf(cfg.alpha / 2.0);
    let denom = cfg.n0 + i_prime + cfg.delta_p * i + bs_term;
    cfg.delta_t / 18.0 * log2_1p(cfg.delta_p * cfg.p / denom)
}

/// Evaluates every constant at secondary density `m`.
pub fn rate_constants(cfg: &ScalingConfig, m: f64) -> Result<PhyConstants> {
    let i = series_i(cfg.p, cfg.alpha, DEFAULT_SERIES_TOL)?;
    let i_prime = series_i_prime(cfg.p, cfg.alpha, DEFAULT_SERIES_TOL)?;
    let dmax = delta_p_max(cfg.p, cfg.n0, cfg.delta_loss, i);
    // The infrastructure limit is stated with I as well.
    let dmax_prime = delta_p_max(cfg.p, cfg.n0, cfg.delta_loss, i);
    let limit = dmax.min(1.0);
    if !(cfg.delta_p > 0.0 && cfg.delta_p < limit) {
        return Err(Error::InvalidConfig(format!(
            "delta_p must lie in (0, {limit}), got {}",
            cfg.delta_p
        )));
    }
    let (p, n0, a, dp) = (cfg.p, cfg.n0, cfg.alpha, cfg.delta_p);
    let k_p = log2_1p(p / (n0 + i)) / 9.0;
    let k_s = log2_1p(dp * p / (n0 + (1.0 + dp) * i + 2f64.powf(1.5 * a) * p)) / 27.0;
    let k_p_prime = log2_1p(p / (n0 + i_prime));
    let bs_far = p * (2.0 / cfg.delta_a).powf(a / 2.0);
    let k_s2 = (1.0 - cfg.delta_t) / 18.0
        * log2_1p(dp * p / (n0 + i_prime + dp * i + bs_far));
    Ok(PhyConstants {
        i,
        i_prime,
        k_p,
        k_s,
        k_p_prime,
        k_s1_of_m: k_s1(cfg, i, i_prime, m),
        k_s2,
        delta_p_max: dmax,
        delta_p_max_prime: dmax_prime,
        delta_p: dp,
        m,
    })
}

/// 9-phase TDMA assignment over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSchedule {
    pub tdma_order: [u8; 9],
    pub phase_of_cell: Vec<u8>,
    pub cells_per_side: u32,
    pub secondary_repeat: u8,
    pub phase_split: f64,
}

pub fn phase_of(c: CellIndex) -> u8 {
    ((c.col % 3) + 3 * (c.row % 3)) as u8
}

pub fn schedule_9tdma(grid: &CellGrid) -> SlotSchedule {
    SlotSchedule {
        tdma_order: [0, 1, 2, 3, 4, 5, 6, 7, 8],
        phase_of_cell: grid.cells().map(phase_of).collect(),
        cells_per_side: grid.cells_per_side,
        secondary_repeat: 3,
        phase_split: 0.5,
    }
}

impl SlotSchedule {
    pub fn with_phase_split(mut self, delta_t: f64) -> Self {
        self.phase_split = delta_t;
        self
    }

    /// Cells active in TDMA phase `phase`.
    pub fn active_cells(&self, phase: u8) -> impl Iterator<Item = CellIndex> + '_ {
        let s = self.cells_per_side as usize;
        self.phase_of_cell
            .iter()
            .enumerate()
            .filter(move |&(_, &ph)| ph == phase)
            .map(move |(i, _)| CellIndex::new((i % s) as u32, (i / s) as u32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxKind {
    Primary,
    Secondary,
}

/// Protocol transmit power for a hop of length `d`, clamped at `P`.
///
/// The flag is set when the clamp was hit.
pub fn tx_power(d: f64, kind: TxKind, cfg: &ScalingConfig) -> (f64, bool) {
    let scale = match kind {
        TxKind::Primary => cfg.p,
        TxKind::Secondary => cfg.delta_p * cfg.p,
    };
    let raw = scale * d.powf(cfg.alpha);
    if raw > cfg.p {
        (cfg.p, true)
    } else {
        (raw, false)
    }
}

/// A transmission scheduled in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub tx: Point,
    pub rx: Point,
    pub power: f64,
}

/// Outcome of one link in one slot. `interference` is the summed received
/// power of every other co-slot transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub tx: Point,
    pub rx: Point,
    pub tx_power: f64,
    pub interference: f64,
    pub sinr: f64,
    pub rate: f64,
}

/// Path gain d^{−α} from squared distance.
#[inline]
pub fn gain(d2: f64, alpha: f64) -> f64 {
    let half = alpha * 0.5;
    if half == half.trunc() && half <= 8.0 {
        1.0 / d2.powi(half as i32)
    } else {
        d2.powf(-half)
    }
}

/// SINR and rate of every link against all others in the slot.
pub fn evaluate_slot(links: &[Link], cfg: &ScalingConfig) -> Result<Vec<LinkSample>> {
    evaluate_links(links, cfg.n0, cfg.alpha)
}

pub fn evaluate_links(links: &[Link], n0: f64, alpha: f64) -> Result<Vec<LinkSample>> {
    links
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let d2 = l.tx.dist2(&l.rx);
            if d2 == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "link {i} has co-located tx and rx"
                )));
            }
            let interference: f64 = links
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| o.power * gain(o.tx.dist2(&l.rx), alpha))
                .sum();
            let sinr = l.power * gain(d2, alpha) / (n0 + interference);
            Ok(LinkSample {
                tx: l.tx,
                rx: l.rx,
                tx_power: l.power,
                interference,
                sinr,
                rate: log2_1p(sinr),
            })
        })
        .collect()
}
