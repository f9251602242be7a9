//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Deterministic and accurate to near machine precision for the matrix sizes
//! this crate works with (covariance and adjacency matrices up to a few
//! hundred rows).

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Eigenvalues (descending) and matching orthonormal eigenvectors (columns)
/// of a symmetric matrix.
///
/// Eigenvector signs are normalized so the entry of largest magnitude is
/// positive, which keeps results reproducible across runs.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "symmetric_eigen: {}x{} not square",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let sym_tol = 1e-8 * m.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > sym_tol {
                return Err(Error::Domain(format!(
                    "symmetric_eigen: asymmetric at ({i},{j}): {} vs {}",
                    m.get(i, j),
                    m.get(j, i)
                )));
            }
        }
    }

    let mut a: Vec<f64> = m.data().to_vec();
    let mut v = Matrix::identity(n);

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let target = 1e-14 * scale * (n as f64);
    for _sweep in 0..100 {
        if off(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigvals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    order.sort_by(|&i, &j| eigvals[j].partial_cmp(&eigvals[i]).unwrap().then(i.cmp(&j)));

    let sorted_vals: Vec<f64> = order.iter().map(|&i| eigvals[i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        // Sign convention: largest-magnitude component positive.
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for r in 0..n {
            let x = v.get(r, old_col).abs();
            if x > best_abs {
                best_abs = x;
                best = r;
            }
        }
        let sign = if v.get(best, old_col) < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vecs.set(r, new_col, sign * v.get(r, old_col));
        }
    }
    Ok((sorted_vals, vecs))
}
