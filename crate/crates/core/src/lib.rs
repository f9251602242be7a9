//! Indoor localization from WiFi RSSI and IMU readings, built around three
//! pieces: a synthetic radio-map simulator (log-distance path loss with
//! shadowing), graph neural networks over access-point graphs (GCN and
//! dynamic edge convolution), and a first-order meta-learning layer that
//! adapts trained models to new environments from small support sets.
//!
//! Everything is seeded and deterministic: datasets, training runs, sweeps
//! and reports reproduce bit-exactly from their configuration.

pub mod error;
pub mod graph;
pub mod numeric;
pub mod radio;
pub mod rng;

pub use error::{Error, Result};
