//! Signal-processing core for a massive-MIMO base station that serves
//! downlink users and runs radar surveillance on the same band.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Everything here is pure computation; randomness is always drawn
//! from an RNG handle supplied by the caller, and file formats, CLI and
//! parallel campaign orchestration live in the `jcas-sim` companion crate.
//!
//! Module map:
//!
//! - [`array`]: planar array geometry, steering vectors, beam gain.
//! - [`propagation`]: Rayleigh / LoS / Rice user channels, path loss, radar target.
//! - [`estimation`]: pilot books, PM and LMMSE channel estimators.
//! - [`beamforming`]: matched communication beams, PBR and ZFR radar beams.
//! - [`radar`]: OFDM transmit grids, target echoes, GLRT detection and calibration.
//! - [`rates`]: closed-form downlink rate bounds and their Monte Carlo oracle.
//! - [`scenario`]: user drops, noise bookkeeping, power budgets, RNG streams.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::needless_range_loop))]

extern crate alloc;

pub mod array;
pub mod beamforming;
mod error;
pub mod estimation;
pub mod linalg;
pub mod propagation;
pub mod radar;
pub mod rates;
pub mod scenario;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
