//! Synthetic indoor radio environments and fingerprint generation.
//!
//! An environment is a rectangular floor with M access points, an LDPL
//! channel, a hard detection range with optional per-AP dropout, and a
//! seeded smooth ambient magnetic field. The IMU synthesizer emits
//! d features per sample, canonically nine: heading unit vector (2),
//! step displacement from the previous trajectory point (2), magnetometer
//! reading of the ambient field at the position (3, world frame), and
//! gyro-like noise (2). The magnetometer channels are what ties IMU data to
//! absolute position; heading and displacement are motion context, and grid
//! layouts carry zero motion.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::radio::channel::{rssi_at, ChannelParams};
use crate::radio::dataset::{Fingerprint, FingerprintDataset};
use crate::radio::Point;
use crate::rng::{sample_stream, stream, tags};

#[derive(Debug, Clone, PartialEq)]
pub struct RadioEnvironment {
    pub ap_positions: Vec<Point>,
    /// Floor extent: width x height, metres.
    pub extent: (f64, f64),
    pub channel: ChannelParams,
    /// Hard detection cutoff, metres.
    pub detection_range: f64,
    /// Probability that an in-range AP is missed in a scan.
    pub dropout: f64,
    /// Placeholder stored for undetected APs, dBm.
    pub rssi_floor: f64,
    pub seed: u64,
    pub floor: i64,
}

impl RadioEnvironment {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.ap_positions.len() < 2 {
            return Err(Error::Domain(format!(
                "environment needs at least 2 APs, got {}",
                self.ap_positions.len()
            )));
        }
        if !(self.detection_range > 0.0) {
            return Err(Error::Domain("detection range must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::Domain(format!("dropout must be in [0,1], got {}", self.dropout)));
        }
        let (w, h) = self.extent;
        for (i, p) in self.ap_positions.iter().enumerate() {
            if !(0.0..=w).contains(&p.x) || !(0.0..=h).contains(&p.y) {
                return Err(Error::Domain(format!("AP {i} at ({},{}) outside extent {w}x{h}", p.x, p.y)));
            }
        }
        Ok(())
    }

    /// Environment with uniformly placed APs drawn from the seed.
    pub fn with_random_aps(
        n_aps: usize,
        extent: (f64, f64),
        channel: ChannelParams,
        detection_range: f64,
        dropout: f64,
        rssi_floor: f64,
        seed: u64,
        floor: i64,
    ) -> Result<Self> {
        let mut rng = stream(seed, tags::AP_PLACEMENT);
        let ap_positions = (0..n_aps)
            .map(|_| Point {
                x: rng.random::<f64>() * extent.0,
                y: rng.random::<f64>() * extent.1,
            })
            .collect();
        let env = Self {
            ap_positions,
            extent,
            channel,
            detection_range,
            dropout,
            rssi_floor,
            seed,
            floor,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn n_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub(crate) fn magnetic_field(&self) -> MagneticField {
        MagneticField::from_seed(self.seed, self.extent)
    }
}

/// Reference-point layout for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// Near-square grid of cell centres covering the extent.
    Grid,
    /// Random-waypoint walk with a fixed step length.
    Trajectory { step_length: f64 },
}

impl Layout {
    pub fn parse(s: &str, step_length: f64) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid),
            "trajectory" => Ok(Self::Trajectory { step_length }),
            other => Err(Error::Config(format!("unknown layout '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Trajectory { .. } => "trajectory",
        }
    }
}

/// Smooth position-dependent ambient field: a base vector plus a few
/// low-frequency sinusoidal anomalies per component, fixed by the
/// environment seed.
#[derive(Debug, Clone)]
pub(crate) struct MagneticField {
    components: [FieldComponent; 3],
}

#[derive(Debug, Clone)]
struct FieldComponent {
    base: f64,
    terms: Vec<(f64, f64, f64, f64)>, // amplitude, kx, ky, phase
}

impl MagneticField {
    fn from_seed(seed: u64, extent: (f64, f64)) -> Self {
        let mut rng = stream(seed, tags::MAG_FIELD);
        let span = extent.0.max(extent.1).max(1.0);
        let bases = [20.0, 5.0, 40.0];
        let components = bases.map(|base| {
            let terms = (0..4)
                .map(|_| {
                    let amp = 3.0 + 5.0 * rng.random::<f64>();
                    // wavelengths between span/4 and span/1.5
                    let freq = (1.5 + 2.5 * rng.random::<f64>()) / span;
                    let angle = rng.random::<f64>() * std::f64::consts::TAU;
                    let phase = rng.random::<f64>() * std::f64::consts::TAU;
                    (amp, freq * angle.cos(), freq * angle.sin(), phase)
                })
                .collect();
            FieldComponent { base, terms }
        });
        Self { components }
    }

    pub(crate) fn at(&self, p: Point) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, comp) in out.iter_mut().zip(&self.components) {
            let mut v = comp.base;
            for &(amp, kx, ky, phase) in &comp.terms {
                v += amp * (std::f64::consts::TAU * (kx * p.x + ky * p.y) + phase).sin();
            }
            *o = v;
        }
        out
    }
}

/// IMU feature synthesizer configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuModel {
    pub dims: usize,
    /// Magnetometer noise std, same units as the field.
    pub mag_noise: f64,
    /// Std of the pure-noise channels.
    pub gyro_noise: f64,
}

impl Default for ImuModel {
    fn default() -> Self {
        Self { dims: 9, mag_noise: 0.5, gyro_noise: 1.0 }
    }
}

impl ImuModel {
    fn synthesize(
        &self,
        rng: &mut ChaCha8Rng,
        field: &MagneticField,
        position: Point,
        heading: (f64, f64),
        displacement: (f64, f64),
    ) -> Vec<f64> {
        if self.dims == 0 {
            return Vec::new();
        }
        let mag = field.at(position);
        let mag_n = Normal::new(0.0, self.mag_noise.max(0.0)).ok();
        let gyro_n = Normal::new(0.0, self.gyro_noise.max(0.0)).ok();
        let mut draw = |n: &Option<Normal<f64>>| n.as_ref().map_or(0.0, |d| d.sample(rng));
        let canonical = [
            heading.0,
            heading.1,
            displacement.0,
            displacement.1,
            mag[0] + draw(&mag_n),
            mag[1] + draw(&mag_n),
            mag[2] + draw(&mag_n),
            draw(&gyro_n),
            draw(&gyro_n),
        ];
        let mut out: Vec<f64> = canonical.iter().copied().take(self.dims).collect();
        while out.len() < self.dims {
            out.push(draw(&gyro_n));
        }
        out
    }
}

/// Reference positions plus per-sample motion (heading, displacement).
fn layout_positions(
    env: &RadioEnvironment,
    n_points: usize,
    layout: Layout,
) -> Vec<(Point, (f64, f64), (f64, f64))> {
    let (w, h) = env.extent;
    match layout {
        Layout::Grid => {
            let nx = ((n_points as f64 * w / h).sqrt().ceil() as usize).max(1);
            let ny = n_points.div_ceil(nx);
            let mut pts = Vec::with_capacity(n_points);
            'outer: for j in 0..ny {
                for i in 0..nx {
                    if pts.len() == n_points {
                        break 'outer;
                    }
                    let p = Point {
                        x: (i as f64 + 0.5) * w / nx as f64,
                        y: (j as f64 + 0.5) * h / ny as f64,
                    };
                    pts.push((p, (0.0, 0.0), (0.0, 0.0)));
                }
            }
            pts
        }
        Layout::Trajectory { step_length } => {
            let step = step_length.max(1e-3);
            let mut rng = stream(env.seed, tags::TRAJECTORY);
            let mut pos = Point { x: rng.random::<f64>() * w, y: rng.random::<f64>() * h };
            let mut waypoint = Point { x: rng.random::<f64>() * w, y: rng.random::<f64>() * h };
            let mut pts = Vec::with_capacity(n_points);
            let mut prev = pos;
            for i in 0..n_points {
                if i > 0 {
                    while pos.dist(&waypoint) < step {
                        waypoint = Point { x: rng.random::<f64>() * w, y: rng.random::<f64>() * h };
                    }
                    let d = pos.dist(&waypoint);
                    prev = pos;
                    pos = Point {
                        x: pos.x + step * (waypoint.x - pos.x) / d,
                        y: pos.y + step * (waypoint.y - pos.y) / d,
                    };
                }
                let disp = (pos.x - prev.x, pos.y - prev.y);
                let heading = {
                    let to = if i == 0 { waypoint } else { pos };
                    let from = if i == 0 { pos } else { prev };
                    let d = from.dist(&to);
                    if d > 0.0 { ((to.x - from.x) / d, (to.y - from.y) / d) } else { (0.0, 0.0) }
                };
                pts.push((pos, heading, disp));
            }
            pts
        }
    }
}

/// Generate a labeled fingerprint dataset. Pure function of
/// (environment, seed, n_points, layout, imu model).
pub fn generate_dataset(
    env: &RadioEnvironment,
    n_points: usize,
    layout: Layout,
    imu_model: &ImuModel,
) -> Result<FingerprintDataset> {
    env.validate()?;
    if n_points == 0 {
        return Err(Error::Domain("n_points must be >= 1".into()));
    }
    let field = env.magnetic_field();
    let shadow = if env.channel.sigma > 0.0 {
        Some(Normal::new(0.0, env.channel.sigma).expect("validated sigma"))
    } else {
        None
    };

    let samples = layout_positions(env, n_points, layout)
        .into_iter()
        .enumerate()
        .map(|(i, (position, heading, displacement))| {
            let mut rng = sample_stream(env.seed, i);
            let m = env.n_aps();
            let mut rssi = Vec::with_capacity(m);
            let mut mask = Vec::with_capacity(m);
            for ap in &env.ap_positions {
                // Fixed two draws per AP keeps streams aligned across APs.
                let shadowing = shadow.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                let drop_draw: f64 = rng.random();
                let dist = position.dist(ap);
                let detected = dist <= env.detection_range && drop_draw >= env.dropout;
                if detected {
                    rssi.push(rssi_at(&env.channel, dist, shadowing));
                    mask.push(true);
                } else {
                    rssi.push(env.rssi_floor);
                    mask.push(false);
                }
            }
            let imu = imu_model.synthesize(&mut rng, &field, position, heading, displacement);
            Fingerprint { position, z: env.floor as f64, rssi, imu, mask }
        })
        .collect();

    let ds = FingerprintDataset {
        n_aps: env.n_aps(),
        imu_dims: imu_model.dims,
        floor: env.floor,
        extent: env.extent,
        rssi_floor: env.rssi_floor,
        samples,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_channel(sigma: f64) -> ChannelParams {
        ChannelParams { p_tx: 20.0, pl0: 40.0, beta: 2.0, d0: 1.0, sigma }
    }

    fn env_with_aps(aps: Vec<Point>, sigma: f64, seed: u64) -> RadioEnvironment {
        RadioEnvironment {
            ap_positions: aps,
            extent: (20.0, 10.0),
            channel: test_channel(sigma),
            detection_range: 50.0,
            dropout: 0.0,
            rssi_floor: -110.0,
            seed,
            floor: 0,
        }
    }

    #[test]
    fn equidistant_aps_give_identical_rssi_without_shadowing() {
        // Symmetric APs around the grid midline, sigma = 0.
        let env = env_with_aps(
            vec![Point { x: 5.0, y: 5.0 }, Point { x: 15.0, y: 5.0 }],
            0.0,
            7,
        );
        let ds = generate_dataset(&env, 9, Layout::Grid, &ImuModel { dims: 0, ..Default::default() })
            .unwrap();
        let mid = ds
            .samples
            .iter()
            .find(|s| (s.position.x - 10.0).abs() < 1e-9)
            .expect("grid midline point");
        assert_eq!(mid.rssi[0].to_bits(), mid.rssi[1].to_bits());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let env = env_with_aps(
            vec![Point { x: 1.0, y: 1.0 }, Point { x: 19.0, y: 9.0 }, Point { x: 10.0, y: 5.0 }],
            4.0,
            42,
        );
        let model = ImuModel::default();
        let a = generate_dataset(&env, 50, Layout::Trajectory { step_length: 1.0 }, &model).unwrap();
        let b = generate_dataset(&env, 50, Layout::Trajectory { step_length: 1.0 }, &model).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shadowing_std_matches_sigma() {
        // 10k samples of one AP at fixed distance; empirical std within 0.5 dB.
        let env = env_with_aps(
            vec![Point { x: 0.0, y: 0.0 }, Point { x: 20.0, y: 10.0 }],
            4.0,
            3,
        );
        let mut values = Vec::with_capacity(10_000);
        let field = env.magnetic_field();
        let _ = &field;
        let shadow = Normal::new(0.0, 4.0).unwrap();
        for i in 0..10_000 {
            let mut rng = sample_stream(env.seed, i);
            values.push(rssi_at(&env.channel, 10.0, shadow.sample(&mut rng)));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        let std = var.sqrt();
        assert!((std - 4.0).abs() < 0.5, "empirical std {std}");
    }

    #[test]
    fn out_of_range_aps_are_masked_to_floor() {
        let mut env = env_with_aps(
            vec![Point { x: 0.0, y: 0.0 }, Point { x: 20.0, y: 10.0 }],
            2.0,
            5,
        );
        env.detection_range = 4.0;
        let ds = generate_dataset(&env, 40, Layout::Grid, &ImuModel::default()).unwrap();
        let mut saw_masked = false;
        for s in &ds.samples {
            for (&r, &det) in s.rssi.iter().zip(&s.mask) {
                if !det {
                    saw_masked = true;
                    assert_eq!(r.to_bits(), (-110.0f64).to_bits());
                }
            }
        }
        assert!(saw_masked, "expected some masked entries with a 4 m range");
    }

    #[test]
    fn all_masked_sample_is_representable() {
        let mut env = env_with_aps(
            vec![Point { x: 0.0, y: 0.0 }, Point { x: 0.0, y: 10.0 }],
            2.0,
            5,
        );
        env.detection_range = 0.5;
        let ds = generate_dataset(&env, 16, Layout::Grid, &ImuModel::default()).unwrap();
        assert!(ds.samples.iter().any(|s| s.mask.iter().all(|&d| !d)));
        ds.validate().unwrap();
    }

    #[test]
    fn grid_layout_has_zero_motion_channels() {
        let env = env_with_aps(
            vec![Point { x: 5.0, y: 5.0 }, Point { x: 15.0, y: 5.0 }],
            1.0,
            9,
        );
        let ds = generate_dataset(&env, 10, Layout::Grid, &ImuModel::default()).unwrap();
        for s in &ds.samples {
            assert_eq!(&s.imu[0..4], &[0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn trajectory_steps_have_fixed_length() {
        let env = env_with_aps(
            vec![Point { x: 5.0, y: 5.0 }, Point { x: 15.0, y: 5.0 }],
            1.0,
            11,
        );
        let ds = generate_dataset(&env, 30, Layout::Trajectory { step_length: 1.5 }, &ImuModel::default())
            .unwrap();
        for pair in ds.samples.windows(2) {
            let d = pair[0].position.dist(&pair[1].position);
            assert!((d - 1.5).abs() < 1e-9, "step {d}");
        }
    }

    #[test]
    fn magnetometer_tracks_position_not_sample_index() {
        let env = env_with_aps(
            vec![Point { x: 5.0, y: 5.0 }, Point { x: 15.0, y: 5.0 }],
            0.0,
            13,
        );
        let field = env.magnetic_field();
        let a = field.at(Point { x: 1.0, y: 1.0 });
        let b = field.at(Point { x: 19.0, y: 9.0 });
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 0.1), "field should vary over the floor");
        // Same position, same field.
        let c = field.at(Point { x: 1.0, y: 1.0 });
        assert_eq!(a, c);
    }
}
