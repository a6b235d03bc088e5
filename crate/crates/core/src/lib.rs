//! Limited-feedback transmit beamforming for MISO-OFDM links.
//!
//! The crate generates frequency-selective Rayleigh channels with a uniform
//! power delay profile, builds per-subcarrier beamformer plans from a finite
//! feedback budget (RVQ with constant, linear or higher-order interpolation
//! across subcarrier clusters, or direct scalar quantization of the channel
//! taps), evaluates closed-form rate and power predictions, and checks them
//! with a deterministic Monte Carlo harness.
//!
//! Subcarriers are indexed from zero throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod chquant;
pub mod cli;
pub mod error;
pub mod interp;
pub mod linalg;
pub mod mc;
pub mod rng;
pub mod rvq;
pub mod stats;

pub use error::{Error, Result};

/// Unit for reported rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    /// Base-2 logarithm (bits per channel use).
    #[default]
    Bits,
    /// Natural logarithm (nats per channel use).
    Nats,
}

impl LogBase {
    /// `log(1 + x)` in this unit.
    pub fn log1p(self, x: f64) -> f64 {
        match self {
            LogBase::Bits => x.ln_1p() / std::f64::consts::LN_2,
            LogBase::Nats => x.ln_1p(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
