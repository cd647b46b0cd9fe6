//! Frequency-domain, sensor-wise attention for cross-domain human activity
//! recognition from 6-axis IMU windows.
//!
//! The pipeline is: canonical recordings ([`data`]) → fixed windows →
//! truncated amplitude spectra ([`spectral`]) → a one-block encoder whose
//! tokens are the sensor channels ([`model`]) → Adam training on a single
//! source domain ([`training`]) → evaluation on unseen target domains and
//! cost analysis ([`analysis`]).

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod data;
pub mod spectral;
pub mod model;
pub mod training;
pub mod analysis;
pub mod cli;

pub use error::{Error, Result};
