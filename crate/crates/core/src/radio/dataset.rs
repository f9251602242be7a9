//! Fingerprint datasets and their on-disk CSV format.
//!
//! Format (UTF-8 text):
//!   line 1:  `#metagraphloc-v1,M=<int>,D=<int>,FLOOR=<int>`
//!   data:    `x,y,z,rssi_1..rssi_M,imu_1..imu_D`
//! `#`-prefixed lines are comments. The writer records `# extent=` and
//! `# rssi_floor=` comments so a written file reads back field-by-field
//! identical; imported files without them fall back to a bounding-box extent
//! and the -110 dBm floor. Floats are printed at full round-trip precision.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::radio::Point;

pub const DATASET_MAGIC: &str = "#metagraphloc-v1";
pub const DEFAULT_RSSI_FLOOR: f64 = -110.0;

/// One labeled sample: RSSI across M APs, IMU features, reference position.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub position: Point,
    /// Floor coordinate; carried through files, ignored by 2D regression.
    pub z: f64,
    pub rssi: Vec<f64>,
    pub imu: Vec<f64>,
    /// true = AP detected; masked entries hold the dataset's rssi floor.
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDataset {
    pub n_aps: usize,
    pub imu_dims: usize,
    pub floor: i64,
    pub extent: (f64, f64),
    pub rssi_floor: f64,
    pub samples: Vec<Fingerprint>,
}

impl FingerprintDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks the per-sample invariants: vector arities and the
    /// mask/floor correspondence (bit-exact).
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if s.rssi.len() != self.n_aps || s.imu.len() != self.imu_dims || s.mask.len() != self.n_aps {
                return Err(Error::Dimension(format!(
                    "sample {i}: rssi {} / imu {} / mask {} vs M={} D={}",
                    s.rssi.len(),
                    s.imu.len(),
                    s.mask.len(),
                    self.n_aps,
                    self.imu_dims
                )));
            }
            for (m, (&r, &det)) in s.rssi.iter().zip(&s.mask).enumerate() {
                if !det && r.to_bits() != self.rssi_floor.to_bits() {
                    return Err(Error::Contract(format!(
                        "sample {i} AP {m}: masked entry {r} != rssi floor {}",
                        self.rssi_floor
                    )));
                }
            }
        }
        Ok(())
    }

    /// Labels as (x, y) pairs.
    pub fn positions(&self) -> Vec<Point> {
        self.samples.iter().map(|s| s.position).collect()
    }

    /// New dataset holding the selected sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            n_aps: self.n_aps,
            imu_dims: self.imu_dims,
            floor: self.floor,
            extent: self.extent,
            rssi_floor: self.rssi_floor,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

pub fn format_dataset(ds: &FingerprintDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_MAGIC},M={},D={},FLOOR={}", ds.n_aps, ds.imu_dims, ds.floor);
    let _ = writeln!(out, "# extent={}x{}", ds.extent.0, ds.extent.1);
    let _ = writeln!(out, "# rssi_floor={}", ds.rssi_floor);
    for s in &ds.samples {
        let _ = write!(out, "{},{},{}", s.position.x, s.position.y, s.z);
        for v in &s.rssi {
            let _ = write!(out, ",{v}");
        }
        for v in &s.imu {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(ds: &FingerprintDataset, path: &Path) -> Result<()> {
    std::fs::write(path, format_dataset(ds))?;
    Ok(())
}

fn parse_float(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{what}: cannot parse '{tok}' as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("{what}: non-finite value '{tok}'") });
    }
    Ok(v)
}

pub fn parse_dataset(text: &str) -> Result<FingerprintDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let mut parts = header.split(',');
    if parts.next() != Some(DATASET_MAGIC) {
        return Err(Error::Parse { line: 1, msg: format!("expected header magic '{DATASET_MAGIC}'") });
    }
    let mut n_aps: Option<usize> = None;
    let mut imu_dims: Option<usize> = None;
    let mut floor: Option<i64> = None;
    for field in parts {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("malformed header field '{field}'") })?;
        let bad = |_| Error::Parse { line: 1, msg: format!("bad header value '{value}' for {key}") };
        match key {
            "M" => n_aps = Some(value.parse().map_err(bad)?),
            "D" => imu_dims = Some(value.parse().map_err(bad)?),
            "FLOOR" => floor = Some(value.parse().map_err(bad)?),
            other => {
                return Err(Error::Parse { line: 1, msg: format!("unknown header field '{other}'") })
            }
        }
    }
    let n_aps = n_aps.ok_or(Error::Parse { line: 1, msg: "header missing M".into() })?;
    let imu_dims = imu_dims.ok_or(Error::Parse { line: 1, msg: "header missing D".into() })?;
    let floor = floor.ok_or(Error::Parse { line: 1, msg: "header missing FLOOR".into() })?;
    if n_aps == 0 {
        return Err(Error::Parse { line: 1, msg: "M must be >= 1".into() });
    }

    let mut extent: Option<(f64, f64)> = None;
    let mut rssi_floor = DEFAULT_RSSI_FLOOR;
    let mut samples = Vec::new();
    let expected = 3 + n_aps + imu_dims;

    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("extent=") {
                if let Some((w, h)) = v.split_once('x') {
                    let w = parse_float(w, line_no, "extent width")?;
                    let h = parse_float(h, line_no, "extent height")?;
                    extent = Some((w, h));
                }
            } else if let Some(v) = rest.strip_prefix("rssi_floor=") {
                rssi_floor = parse_float(v, line_no, "rssi_floor")?;
            }
            continue;
        }
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {expected} values (3 + M={n_aps} + D={imu_dims}), got {}", tokens.len()),
            });
        }
        let x = parse_float(tokens[0], line_no, "x")?;
        let y = parse_float(tokens[1], line_no, "y")?;
        let z = parse_float(tokens[2], line_no, "z")?;
        let mut rssi = Vec::with_capacity(n_aps);
        for t in &tokens[3..3 + n_aps] {
            rssi.push(parse_float(t, line_no, "rssi")?);
        }
        let mut imu = Vec::with_capacity(imu_dims);
        for t in &tokens[3 + n_aps..] {
            imu.push(parse_float(t, line_no, "imu")?);
        }
        let mask = rssi.iter().map(|&v| v.to_bits() != rssi_floor.to_bits()).collect();
        samples.push(Fingerprint { position: Point { x, y }, z, rssi, imu, mask });
    }

    let extent = extent.unwrap_or_else(|| {
        let w = samples.iter().map(|s| s.position.x).fold(0.0f64, f64::max);
        let h = samples.iter().map(|s| s.position.y).fold(0.0f64, f64::max);
        (w, h)
    });
    let ds = FingerprintDataset { n_aps, imu_dims, floor, extent, rssi_floor, samples };
    ds.validate()?;
    Ok(ds)
}

pub fn read_dataset(path: &Path) -> Result<FingerprintDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> FingerprintDataset {
        FingerprintDataset {
            n_aps: 2,
            imu_dims: 1,
            floor: 3,
            extent: (10.0, 5.0),
            rssi_floor: -110.0,
            samples: vec![
                Fingerprint {
                    position: Point { x: 1.25, y: 2.5 },
                    z: 3.0,
                    rssi: vec![-42.125, -110.0],
                    imu: vec![0.1234567890123456],
                    mask: vec![true, false],
                },
                Fingerprint {
                    position: Point { x: 0.1, y: 0.2 },
                    z: 3.0,
                    rssi: vec![-50.5, -60.25],
                    imu: vec![-1.5e-7],
                    mask: vec![true, true],
                },
            ],
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        let ds = tiny_dataset();
        let text = format_dataset(&ds);
        let back = parse_dataset(&text).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn arity_mismatch_reports_line() {
        // Header says M=2, D=1 but the row carries one extra number
        // (a 3D-label style row): 3+2+1+1 values.
        let text = "#metagraphloc-v1,M=2,D=1,FLOOR=0\n1,2,0,-40,-50,0.5,9.9\n";
        match parse_dataset(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_rejected_with_line() {
        let text = "#metagraphloc-v1,M=1,D=0,FLOOR=0\n1,2,0,-40\n3,4,0,NaN\n";
        match parse_dataset(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(
            parse_dataset("#wrong,M=1,D=0,FLOOR=0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("#metagraphloc-v1,M=1,D=zzz,FLOOR=0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn imports_wide_external_shape() {
        // 379 RSSI + 9 IMU per sample, like the preprocessed phone dataset.
        let m = 379;
        let d = 9;
        let mut text = format!("#metagraphloc-v1,M={m},D={d},FLOOR=1\n");
        for row in 0..2 {
            let mut line = format!("{row}.5,2.5,1");
            for i in 0..m {
                line.push_str(&format!(",-{}", 30 + (i + row) % 70));
            }
            for i in 0..d {
                line.push_str(&format!(",{}", i as f64 * 0.25));
            }
            text.push_str(&line);
            text.push('\n');
        }
        let ds = parse_dataset(&text).unwrap();
        assert_eq!((ds.n_aps, ds.imu_dims), (379, 9));
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn masked_entries_match_floor_bit_exactly() {
        let ds = tiny_dataset();
        ds.validate().unwrap();
        let mut broken = ds;
        broken.samples[0].rssi[1] = -109.999999;
        // mask still says "missing" -> invariant violation
        assert!(broken.validate().is_err());
    }
}
