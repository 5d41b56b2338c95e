//! Secrecy energy efficiency (SEE) simulator for a RIS-assisted rate-splitting
//! downlink with untrusted energy-harvesting receivers.
//!
//! A multi-antenna base station serves `K` legitimate users through a
//! UAV-mounted reconfigurable intelligent surface while delivering wireless
//! power to `J` untrusted energy harvesters that may eavesdrop. The library
//! maximizes the fairness (max-min) secrecy rate per consumed watt by
//! alternating over three blocks:
//!
//! 1. common-rate allocation (a linear program with a closed-form equalizer),
//! 2. transmit precoders (Dinkelbach fractional programming + successive
//!    convex approximation, solved as second-order cone programs),
//! 3. RIS phase shifts (penalty-based SCA with a unit-modulus box).
//!
//! Module layout mirrors the data flow: [`config`] → [`channels`] → [`phy`]
//! (ground-truth evaluators) → [`taylor`] (surrogate kernels) → [`conic`]
//! (subproblem representation and solver binding) → [`opt`] (the three blocks
//! and the alternating driver) → [`experiments`] (Monte-Carlo harness used by
//! the CLI).

// validation guards use `!(v > 0.0)` on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod config;
pub mod conic;
pub mod experiments;
pub mod opt;
pub mod phy;
pub mod taylor;

pub use channels::{ChannelSet, RisPhases};
pub use config::{EhConstants, Geometry, Scheme, SystemConfig};
pub use phy::{EhReport, PrecoderSet, RateAllocation, RateReport};
