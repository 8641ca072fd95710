//! Network realizations: densities, node sets, pairings and the BS lattice.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_grid, sample_ppp_stream, CellGrid, CellIndex, NodeSet, Point};
use crate::phy;
use crate::seed::{stream_rng, Stream};

pub const SCHEMA_VERSION: u32 = 1;

/// Which primary network runs alongside the secondary ad hoc network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    AdHoc,
    Infrastructure,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adhoc" | "ad-hoc" | "ad_hoc" => Ok(Model::AdHoc),
            "infrastructure" | "infra" => Ok(Model::Infrastructure),
            other => Err(Error::InvalidConfig(format!(
                "model must be adhoc or infrastructure, got {other:?}"
            ))),
        }
    }
}

/// Scaling and protocol parameters of one simulated system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub n: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub p: f64,
    pub n0: f64,
    pub delta_loss: f64,
    pub delta_p: f64,
    pub delta_a: f64,
    pub delta_t: f64,
    pub epsilon: f64,
    pub model: Model,
}

pub const DEFAULT_BETA: f64 = 1.5;
pub const DEFAULT_GAMMA: f64 = 0.6;

impl ScalingConfig {
    /// Default parameters at density `n`, with `delta_p` set to 90% of its
    /// admissible maximum.
    pub fn new(n: f64, model: Model) -> Self {
        let mut cfg = ScalingConfig {
            n,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            alpha: 4.0,
            p: 1.0,
            n0: 1.0,
            delta_loss: 0.1,
            delta_p: 0.0,
            delta_a: 0.25,
            delta_t: 0.5,
            epsilon: 0.1,
            model,
        };
        cfg.delta_p = cfg.default_delta_p();
        cfg
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_n(mut self, n: f64) -> Self {
        self.n = n;
        self
    }

    /// 0.9·min(δ_P,max, 1) for the current power, noise and loss settings.
    pub fn default_delta_p(&self) -> f64 {
        let i = phy::series_i(self.p, self.alpha, phy::DEFAULT_SERIES_TOL).unwrap_or(f64::NAN);
        0.9 * phy::delta_p_max(self.p, self.n0, self.delta_loss, i).min(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidConfig(format!("{what} (got {v})")));
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        if !(self.n.is_finite() && self.n > 0.0) {
            return bad("n must be a positive finite density", self.n);
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return bad("beta must exceed 1", self.beta);
        }
        if !open01(self.gamma) {
            return bad("gamma must lie in (0, 1)", self.gamma);
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return bad("alpha must exceed 2", self.alpha);
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return bad("P must be positive", self.p);
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return bad("N0 must be positive", self.n0);
        }
        for (name, v) in [
            ("delta_loss", self.delta_loss),
            ("delta_p", self.delta_p),
            ("delta_a", self.delta_a),
            ("delta_t", self.delta_t),
            ("epsilon", self.epsilon),
        ] {
            if !open01(v) {
                return bad(&format!("{name} must lie in (0, 1)"), v);
            }
        }
        Ok(())
    }

    /// Secondary density m = n^β.
    pub fn m(&self) -> f64 {
        self.n.powf(self.beta)
    }

    /// Number of base stations, rounded to a perfect square.
    pub fn l(&self) -> usize {
        let side = self.n.powf(self.gamma / 2.0).round().max(1.0) as usize;
        side * side
    }

    pub fn primary_cell_area(&self) -> f64 {
        2.0 * self.n.ln() / self.n
    }

    pub fn secondary_cell_area(&self) -> f64 {
        let m = self.m();
        2.0 * m.ln() / m
    }
}

/// Returns `(m, l)` for a configuration.
pub fn derive_densities(cfg: &ScalingConfig) -> (f64, usize) {
    (cfg.m(), cfg.l())
}

/// Source/destination matching over the indices of a node set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SDPairing {
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Option<usize>,
}

impl SDPairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Uniform random matching of `nodes`, drawn from the default stream of `seed`.
pub fn pair_random(nodes: &NodeSet, seed: u64) -> Result<SDPairing> {
    pair_random_stream(nodes.count(), seed, 0)
}

pub(crate) fn pair_random_stream(count: usize, seed: u64, stream: u64) -> Result<SDPairing> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "pairing needs at least 2 nodes, got {count}"
        )));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut stream_rng(seed, stream));
    let pairs = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let unpaired = (count % 2 == 1).then(|| order[count - 1]);
    Ok(SDPairing { pairs, unpaired })
}

fn pair_or_empty(count: usize, seed: u64, stream: Stream) -> SDPairing {
    match pair_random_stream(count, seed, stream as u64) {
        Ok(p) => p,
        Err(_) => SDPairing {
            pairs: Vec::new(),
            unpaired: (count == 1).then_some(0),
        },
    }
}

/// One sampled realization of both networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub config: ScalingConfig,
    pub m: f64,
    pub l: usize,
    pub primary_nodes: NodeSet,
    pub secondary_nodes: NodeSet,
    pub bs_positions: Vec<Point>,
    pub primary_grid: CellGrid,
    pub secondary_grid: CellGrid,
    pub bs_grid: Option<CellGrid>,
    pub primary_pairs: SDPairing,
    pub secondary_pairs: SDPairing,
    pub seed: u64,
}

#[derive(Serialize)]
struct InstanceDocRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    instance: &'a NetworkInstance,
}

#[derive(Deserialize)]
struct InstanceDoc {
    schema_version: u32,
    #[serde(flatten)]
    instance: NetworkInstance,
}

impl NetworkInstance {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceDocRef {
            schema_version: SCHEMA_VERSION,
            instance: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        Ok(doc.instance)
    }

    pub fn model(&self) -> Model {
        self.config.model
    }

    /// Index of the base station closest to `p`.
    pub fn nearest_bs(&self, p: Point) -> Option<usize> {
        let g = self.bs_grid.as_ref()?;
        let c = crate::geometry::cell_of(p, g);
        Some(g.linear(c))
    }

    /// BS cell of a point under the infrastructure model.
    pub fn bs_cell(&self, p: Point) -> Option<CellIndex> {
        self.bs_grid.as_ref().map(|g| crate::geometry::cell_of(p, g))
    }
}

/// Samples both networks and, for the infrastructure model, the BS lattice.
pub fn deploy(cfg: &ScalingConfig, seed: u64) -> Result<NetworkInstance> {
    cfg.validate()?;
    if cfg.n < 3.0 {
        return Err(Error::InvalidConfig(format!(
            "n must be at least 3 for log-sized cells (got {})",
            cfg.n
        )));
    }
    let (m, l) = derive_densities(cfg);
    let primary_grid = build_grid(cfg.primary_cell_area())?;
    let secondary_grid = build_grid(cfg.secondary_cell_area())?;
    let primary_nodes = sample_ppp_stream(cfg.n, seed, Stream::PrimaryNodes as u64)?;
    let secondary_nodes = sample_ppp_stream(m, seed, Stream::SecondaryNodes as u64)?;
    let primary_pairs = pair_or_empty(primary_nodes.count(), seed, Stream::PrimaryPairing);
    let secondary_pairs = pair_or_empty(secondary_nodes.count(), seed, Stream::SecondaryPairing);

    let (bs_grid, bs_positions) = match cfg.model {
        Model::AdHoc => (None, Vec::new()),
        Model::Infrastructure => {
            let g = build_grid(1.0 / l as f64)?;
            let pos = g.cells().map(|c| g.center(c)).collect();
            (Some(g), pos)
        }
    };

    Ok(NetworkInstance {
        config: *cfg,
        m,
        l,
        primary_nodes,
        secondary_nodes,
        bs_positions,
        primary_grid,
        secondary_grid,
        bs_grid,
        primary_pairs,
        secondary_pairs,
        seed,
    })
}
