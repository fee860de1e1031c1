//! Exposure simulation for uncollateralised swaps and a tail-event
//! wrong-way-risk overlay for CVA and FVA.
//!
//! The pipeline is: build a [`market_data::MarketSnapshot`], simulate base
//! and shocked exposure profiles ([`exposure`]), blend them per stress
//! scenario ([`wwr_overlay`]) and integrate against credit and funding
//! curves ([`xva`]). [`calibration`] estimates the coupling strength of a
//! counterparty to its sovereign from CDS history.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod error;
pub mod exposure;
pub mod instruments;
pub mod market_data;
pub mod pipeline;
pub mod wwr_overlay;
pub mod xva;

pub use error::{Error, Result};
