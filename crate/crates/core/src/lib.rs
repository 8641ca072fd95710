//! Monte Carlo simulation of a primary wireless network sharing its band
//! with a denser secondary ad hoc network.
//!
//! The primary network is either an ad hoc network using row-then-column
//! multihop routing, or an infrastructure network of base stations on a
//! square lattice. Secondary traffic is routed around preservation regions
//! that protect primary receivers, and transmits at a reduced power so the
//! primary throughput loss stays below a chosen fraction.
//!
//! ```no_run
//! use hetnet::deployment::{deploy, Model, ScalingConfig};
//! use hetnet::sim::{simulate, SimOptions};
//!
//! let cfg = ScalingConfig::new(200.0, Model::AdHoc);
//! let inst = deploy(&cfg, 1).unwrap();
//! let out = simulate(&inst, &SimOptions::default()).unwrap();
//! println!("T_p = {:.3e}, S_p = {:.3e}", out.report.t_p, out.report.s_p);
//! ```

pub mod analysis;
pub mod cli;
pub mod deployment;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod phy;
pub mod regions;
pub mod routing;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
