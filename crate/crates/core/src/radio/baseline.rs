//! Model-based baseline: grid search over candidate positions maximizing the
//! summed RSSI log-likelihood across detected APs.

use crate::error::{Error, Result};
use crate::radio::channel::log_rssi_likelihood;
use crate::radio::dataset::Fingerprint;
use crate::radio::environment::RadioEnvironment;
use crate::radio::Point;

/// Arg-max of the joint likelihood over a grid with the given step. The grid
/// includes both extent borders, so positions lying exactly on grid nodes
/// are recoverable. Ties keep the first candidate in row-major scan order.
pub fn ml_baseline_locate(
    env: &RadioEnvironment,
    fingerprint: &Fingerprint,
    grid_step: f64,
) -> Result<Point> {
    if !(grid_step > 0.0) {
        return Err(Error::Domain("grid step must be > 0".into()));
    }
    if fingerprint.rssi.len() != env.n_aps() {
        return Err(Error::Dimension(format!(
            "fingerprint has {} APs, environment {}",
            fingerprint.rssi.len(),
            env.n_aps()
        )));
    }
    let detected: Vec<usize> =
        (0..env.n_aps()).filter(|&m| fingerprint.mask[m]).collect();
    if detected.is_empty() {
        return Err(Error::NoInformation("all APs masked in fingerprint".into()));
    }

    let (w, h) = env.extent;
    let nx = (w / grid_step).floor() as usize + 1;
    let ny = (h / grid_step).floor() as usize + 1;
    let mut best = Point { x: 0.0, y: 0.0 };
    let mut best_score = f64::NEG_INFINITY;
    for iy in 0..ny {
        for ix in 0..nx {
            let cand = Point { x: ix as f64 * grid_step, y: iy as f64 * grid_step };
            let mut score = 0.0;
            for &m in &detected {
                score += log_rssi_likelihood(
                    &env.channel,
                    fingerprint.rssi[m],
                    cand,
                    env.ap_positions[m],
                )?;
            }
            if score > best_score {
                best_score = score;
                best = cand;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::channel::{predicted_rssi, ChannelParams};

    fn env(sigma: f64, aps: Vec<Point>) -> RadioEnvironment {
        RadioEnvironment {
            ap_positions: aps,
            extent: (20.0, 10.0),
            channel: ChannelParams { p_tx: 20.0, pl0: 40.0, beta: 2.0, d0: 1.0, sigma },
            detection_range: 100.0,
            dropout: 0.0,
            rssi_floor: -110.0,
            seed: 0,
            floor: 0,
        }
    }

    fn noiseless_fingerprint(env: &RadioEnvironment, at: Point) -> Fingerprint {
        let rssi: Vec<f64> =
            env.ap_positions.iter().map(|&ap| predicted_rssi(&env.channel, at, ap)).collect();
        let mask = vec![true; rssi.len()];
        Fingerprint { position: at, z: 0.0, rssi, imu: Vec::new(), mask }
    }

    #[test]
    fn noiseless_fingerprint_at_grid_point_recovers_exactly() {
        let env = env(0.5, vec![
            Point { x: 2.0, y: 2.0 },
            Point { x: 18.0, y: 3.0 },
            Point { x: 10.0, y: 9.0 },
        ]);
        let truth = Point { x: 6.0, y: 4.0 }; // lies on the 0.5 m grid
        let fp = noiseless_fingerprint(&env, truth);
        let est = ml_baseline_locate(&env, &fp, 0.5).unwrap();
        assert_eq!((est.x, est.y), (truth.x, truth.y));
    }

    #[test]
    fn noiseless_off_grid_fingerprint_lands_within_half_diagonal() {
        let env = env(2.0, vec![
            Point { x: 2.0, y: 2.0 },
            Point { x: 18.0, y: 3.0 },
            Point { x: 10.0, y: 9.0 },
        ]);
        let truth = Point { x: 6.3, y: 4.2 };
        let fp = noiseless_fingerprint(&env, truth);
        let step = 0.5;
        let est = ml_baseline_locate(&env, &fp, step).unwrap();
        assert!(est.dist(&truth) <= step / std::f64::consts::SQRT_2 + 1e-9,
            "estimate ({}, {}) too far from truth", est.x, est.y);
    }

    #[test]
    fn single_ap_estimate_lies_on_distance_ring() {
        let env = env(2.0, vec![Point { x: 10.0, y: 5.0 }, Point { x: 0.0, y: 0.0 }]);
        let truth = Point { x: 13.0, y: 5.0 };
        let mut fp = noiseless_fingerprint(&env, truth);
        // Only AP 0 detected.
        fp.mask[1] = false;
        fp.rssi[1] = env.rssi_floor;
        let step = 0.25;
        let est = ml_baseline_locate(&env, &fp, step).unwrap();
        // Invert the deterministic LDPL to the implied ring radius.
        let ch = &env.channel;
        let radius = ch.d0 * 10f64.powf((ch.p_tx - ch.pl0 - fp.rssi[0]) / (10.0 * ch.beta));
        let ring_residual = (est.dist(&env.ap_positions[0]) - radius).abs();
        assert!(ring_residual < step, "residual {ring_residual}");
    }

    #[test]
    fn all_masked_is_no_information() {
        let env = env(2.0, vec![Point { x: 1.0, y: 1.0 }, Point { x: 2.0, y: 2.0 }]);
        let fp = Fingerprint {
            position: Point { x: 0.0, y: 0.0 },
            z: 0.0,
            rssi: vec![env.rssi_floor; 2],
            imu: Vec::new(),
            mask: vec![false, false],
        };
        assert!(matches!(
            ml_baseline_locate(&env, &fp, 0.5),
            Err(Error::NoInformation(_))
        ));
    }
}
