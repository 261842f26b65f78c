//! PHY and MAC building blocks for an 802.11n/ac/ah cross-layer simulator.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! live in the companion `xlwifi` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytics;
pub mod channel;
pub mod cmat;
pub mod error;
pub mod link_abstraction;
pub mod mac_protocol;
pub mod precoding;
pub mod rates_framing;
pub mod rng;
pub mod sim_engine;

#[cfg(test)]
mod props;

pub use error::{Error, Result};
