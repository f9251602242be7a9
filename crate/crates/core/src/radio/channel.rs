//! Log-distance path loss with log-normal shadowing, and the matching
//! Gaussian RSSI likelihood.

use crate::error::{Error, Result};
use crate::radio::Point;

/// LDPL channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Transmit power, dBm.
    pub p_tx: f64,
    /// Path loss at the reference distance, dB.
    pub pl0: f64,
    /// Path loss exponent.
    pub beta: f64,
    /// Reference distance, m.
    pub d0: f64,
    /// Shadowing standard deviation, dB.
    pub sigma: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::Domain(format!("reference distance d0 must be > 0, got {}", self.d0)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Domain(format!("shadowing sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Domain(format!("path loss exponent must be > 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Path loss evaluation; `clamped` flags a co-located device/AP whose
/// distance was clamped to d0/100.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub loss_db: f64,
    pub clamped: bool,
}

/// PL = PL0 + 10 beta log10(d / d0) + shadowing.
pub fn path_loss(channel: &ChannelParams, distance: f64, shadowing_db: f64) -> PathLoss {
    let (d, clamped) = if distance > 0.0 {
        (distance, false)
    } else {
        (channel.d0 / 100.0, true)
    };
    let loss_db = channel.pl0 + 10.0 * channel.beta * (d / channel.d0).log10() + shadowing_db;
    PathLoss { loss_db, clamped }
}

/// Received power: P_tx minus path loss.
pub fn rssi_at(channel: &ChannelParams, distance: f64, shadowing_db: f64) -> f64 {
    channel.p_tx - path_loss(channel, distance, shadowing_db).loss_db
}

/// Deterministic (zero-shadowing) RSSI prediction for a device/AP pair.
pub fn predicted_rssi(channel: &ChannelParams, device: Point, ap: Point) -> f64 {
    rssi_at(channel, device.dist(&ap), 0.0)
}

/// Gaussian density of observing `rssi` at `device` given the AP position
/// and channel; the shadowing sigma is the spread.
pub fn rssi_likelihood(channel: &ChannelParams, rssi: f64, device: Point, ap: Point) -> Result<f64> {
    Ok(log_rssi_likelihood(channel, rssi, device, ap)?.exp())
}

/// Log of [`rssi_likelihood`]; what the grid localizer sums.
pub fn log_rssi_likelihood(
    channel: &ChannelParams,
    rssi: f64,
    device: Point,
    ap: Point,
) -> Result<f64> {
    if channel.sigma <= 0.0 {
        return Err(Error::Domain("rssi likelihood needs sigma > 0".into()));
    }
    let mean = predicted_rssi(channel, device, ap);
    let z = (mean - rssi) / channel.sigma;
    Ok(-0.5 * z * z - (channel.sigma * (2.0 * std::f64::consts::PI).sqrt()).ln())
}
