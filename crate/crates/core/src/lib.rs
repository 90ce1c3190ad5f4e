//! Revenue-sharing contracts between content providers (CPs) and an ISP.
//!
//! CPs hand the ISP a fraction of their revenue to induce investment that
//! raises their demand. This crate computes the resulting equilibria when the
//! ISP may or may not differentiate its effort across CPs, the Nash
//! bargaining alternative, a regulator's neutralizing tax, and brute-force
//! oracles that certify all of it.

pub mod bargaining;
pub mod cli;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod regulator;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{Contract, EffortProfile, MarketParams, NoiseModel, Regime, Utilities};
