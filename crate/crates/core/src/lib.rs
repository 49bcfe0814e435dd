//! Closed-form stochastic-geometry model of LoRa uplink reception.
//!
//! Packets form a space-time Poisson process ("Poisson rain") around a single
//! gateway. Each packet picks its spreading factor from the received power
//! band it falls into, and a packet is lost when another packet of the same
//! band starts on air before the gateway has locked onto it. The crate
//! provides:
//!
//! * [`lora_phy`]: symbol, preamble and payload airtimes and the collision
//!   vulnerability window per spreading factor.
//! * [`channel`]: power-law path loss, mean-one fading laws and their
//!   fractional moments.
//! * [`analytic`]: the received-power intensity, per-class reception
//!   probabilities, equalizing sensitivities and the inhomogeneous to
//!   homogeneous network equivalence.
//! * [`montecarlo`]: brute-force space-time and power-domain simulators used
//!   as oracles for the closed forms.
//! * [`reproduce`]: comparison of equalized sensitivities against the
//!   published reference table.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod lora_phy;
pub mod montecarlo;
pub mod reproduce;

pub use analytic::{ClassResult, Scenario, SfClass};
pub use channel::{FadingModel, PathLossParams};
pub use error::{Error, Result};
pub use lora_phy::{AirTime, RadioConfig};
pub use montecarlo::{SimConfig, SimEstimate, SimMode};
