//! Synthetic radio environments, fingerprint datasets, and the probabilistic
//! grid-search baseline.

mod baseline;
pub mod channel;
mod dataset;
mod environment;

pub use baseline::ml_baseline_locate;
pub use channel::{path_loss, predicted_rssi, rssi_at, rssi_likelihood, ChannelParams, PathLoss};
pub use dataset::{
    format_dataset, parse_dataset, read_dataset, write_dataset, Fingerprint, FingerprintDataset,
    DATASET_MAGIC, DEFAULT_RSSI_FLOOR,
};
pub use environment::{generate_dataset, ImuModel, Layout, RadioEnvironment};

/// 2D position in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}
