//! AP-graph construction: Pearson-correlation and joint-appearance static
//! adjacencies, dynamic KNN edges over node features, and the symmetric
//! self-looped normalization used by graph convolution.

use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::radio::FingerprintDataset;

/// How a graph's edges were built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    /// Pearson correlation of RSSI columns, thresholded.
    Corr { threshold: f64 },
    /// Joint-appearance likelihood from detection masks, thresholded.
    Prob { threshold: f64 },
    /// Per-sample K-nearest-neighbor edges over current node features.
    DynamicKnn { k: usize },
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Corr { .. } => "corr",
            Self::Prob { .. } => "prob",
            Self::DynamicKnn { .. } => "dynamic_knn",
        }
    }
}

/// An adjacency matrix together with its construction recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub n_nodes: usize,
    pub adjacency: Matrix,
    pub kind: GraphKind,
}

/// D^{-1/2} (A + I) D^{-1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub matrix: Matrix,
}

/// Raw Pearson correlation matrix of RSSI columns. Diagonal is 1 by
/// definition; pairs involving a zero-variance column are 0 (no relation).
pub fn pearson_raw(dataset: &FingerprintDataset) -> Result<Matrix> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Domain(format!("pearson needs >= 2 samples, got {n}")));
    }
    let m = dataset.n_aps;
    let mut means = vec![0.0; m];
    for s in &dataset.samples {
        for (acc, &v) in means.iter_mut().zip(&s.rssi) {
            *acc += v;
        }
    }
    for v in &mut means {
        *v /= n as f64;
    }
    // Centered column dot products.
    let mut cov = vec![0.0; m * m];
    let mut var = vec![0.0; m];
    for s in &dataset.samples {
        let centered: Vec<f64> = s.rssi.iter().zip(&means).map(|(&v, &mu)| v - mu).collect();
        for i in 0..m {
            var[i] += centered[i] * centered[i];
            for j in (i + 1)..m {
                cov[i * m + j] += centered[i] * centered[j];
            }
        }
    }
    let mut out = Matrix::identity(m);
    for i in 0..m {
        for j in (i + 1)..m {
            let denom = (var[i] * var[j]).sqrt();
            let r = if denom > 0.0 { cov[i * m + j] / denom } else { 0.0 };
            out.set(i, j, r);
            out.set(j, i, r);
        }
    }
    Ok(out)
}

/// Raw joint-appearance likelihood: a_ij = P(both i and j detected) /
/// P(i detected), estimated from detection masks. Asymmetric; rows of
/// never-detected APs are zero.
pub fn joint_appearance_raw(dataset: &FingerprintDataset) -> Result<Matrix> {
    if dataset.is_empty() {
        return Err(Error::Domain("joint appearance needs >= 1 sample".into()));
    }
    let m = dataset.n_aps;
    let mut both = vec![0usize; m * m];
    let mut seen = vec![0usize; m];
    for s in &dataset.samples {
        for i in 0..m {
            if !s.mask[i] {
                continue;
            }
            seen[i] += 1;
            for j in 0..m {
                if s.mask[j] {
                    both[i * m + j] += 1;
                }
            }
        }
    }
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        if seen[i] == 0 {
            continue;
        }
        for j in 0..m {
            out.set(i, j, both[i * m + j] as f64 / seen[i] as f64);
        }
    }
    Ok(out)
}

fn binarize(raw: &Matrix, threshold: f64) -> Matrix {
    raw.map(|v| if v.abs() >= threshold { 1.0 } else { 0.0 })
}

/// Thresholded Pearson adjacency: |a_ij| >= threshold keeps an edge,
/// diagonal stays 1.
pub fn pearson_adjacency(dataset: &FingerprintDataset, threshold: f64) -> Result<GraphSpec> {
    let raw = pearson_raw(dataset)?;
    Ok(GraphSpec {
        n_nodes: dataset.n_aps,
        adjacency: binarize(&raw, threshold),
        kind: GraphKind::Corr { threshold },
    })
}

/// Raw-weight variant: entries below the threshold are zeroed, the rest keep
/// their correlation magnitude (absolute value, so normalization stays
/// defined).
pub fn pearson_adjacency_weighted(dataset: &FingerprintDataset, threshold: f64) -> Result<GraphSpec> {
    let raw = pearson_raw(dataset)?;
    Ok(GraphSpec {
        n_nodes: dataset.n_aps,
        adjacency: raw.map(|v| if v.abs() >= threshold { v.abs() } else { 0.0 }),
        kind: GraphKind::Corr { threshold },
    })
}

/// Thresholded joint-appearance adjacency. The raw matrix is symmetrized as
/// max(a_ij, a_ji) before thresholding so the undirected normalization
/// applies.
pub fn joint_appearance_adjacency(dataset: &FingerprintDataset, threshold: f64) -> Result<GraphSpec> {
    let raw = joint_appearance_raw(dataset)?;
    let m = dataset.n_aps;
    let sym = Matrix::from_fn(m, m, |i, j| raw.get(i, j).max(raw.get(j, i)));
    Ok(GraphSpec {
        n_nodes: m,
        adjacency: binarize(&sym, threshold),
        kind: GraphKind::Prob { threshold },
    })
}

/// Directed KNN edge list over node feature rows: (destination, source)
/// pairs where the source is among the k nearest neighbors of the
/// destination under Euclidean distance. Self is excluded, distance ties
/// break toward the lower node index, and the list comes back sorted by
/// (destination, source) so downstream aggregation order is fixed.
///
/// k is clamped to n_nodes - 1 with a warning.
pub fn knn_edge_list(features: &Matrix, k: usize) -> Vec<(usize, usize)> {
    let m = features.rows();
    let kk = if k >= m {
        log::warn!("k_neigh {k} >= {m} nodes; clamping to {}", m - 1);
        m - 1
    } else {
        k
    };
    let mut edges = Vec::with_capacity(m * kk);
    let mut dist_row: Vec<(f64, usize)> = Vec::with_capacity(m - 1);
    for i in 0..m {
        dist_row.clear();
        let fi = features.row(i);
        for j in 0..m {
            if j == i {
                continue;
            }
            let fj = features.row(j);
            let d2: f64 = fi.iter().zip(fj).map(|(a, b)| (a - b) * (a - b)).sum();
            dist_row.push((d2, j));
        }
        dist_row.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut picked: Vec<usize> = dist_row[..kk].iter().map(|&(_, j)| j).collect();
        picked.sort_unstable();
        for j in picked {
            edges.push((i, j));
        }
    }
    edges
}

/// Dynamic KNN adjacency as a matrix (row i marks the neighbors of node i).
pub fn dynamic_knn_edges(features: &Matrix, k: usize) -> Result<GraphSpec> {
    let m = features.rows();
    if m < 2 {
        return Err(Error::Domain(format!("dynamic KNN needs >= 2 nodes, got {m}")));
    }
    if k == 0 {
        return Err(Error::Domain("k_neigh must be >= 1".into()));
    }
    let mut adjacency = Matrix::zeros(m, m);
    for (dst, src) in knn_edge_list(features, k) {
        adjacency.set(dst, src, 1.0);
    }
    Ok(GraphSpec { n_nodes: m, adjacency, kind: GraphKind::DynamicKnn { k } })
}

/// D^{-1/2} (A + I) D^{-1/2} for a square, non-negative adjacency.
pub fn normalize_matrix(adjacency: &Matrix) -> Result<Matrix> {
    if !adjacency.is_square() {
        return Err(Error::Dimension(format!(
            "normalize: adjacency {}x{} not square",
            adjacency.rows(),
            adjacency.cols()
        )));
    }
    if adjacency.data().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("normalize: adjacency entries must be >= 0".into()));
    }
    let m = adjacency.rows();
    let mut degree = vec![0.0; m];
    for i in 0..m {
        let mut d = 0.0;
        for j in 0..m {
            d += adjacency.get(i, j) + if i == j { 1.0 } else { 0.0 };
        }
        degree[i] = d;
    }
    // Self-loops make every degree >= 1.
    assert!(degree.iter().all(|&d| d > 0.0), "zero degree after self-loops");
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / d.sqrt()).collect();
    Ok(Matrix::from_fn(m, m, |i, j| {
        let a_hat = adjacency.get(i, j) + if i == j { 1.0 } else { 0.0 };
        a_hat * inv_sqrt[i] * inv_sqrt[j]
    }))
}

pub fn normalize_adjacency(graph: &GraphSpec) -> Result<NormalizedAdjacency> {
    Ok(NormalizedAdjacency { matrix: normalize_matrix(&graph.adjacency)? })
}

/// Adjacency matrix as CSV rows (full precision), for the export command.
pub fn adjacency_csv(graph: &GraphSpec) -> String {
    let mut out = String::new();
    for i in 0..graph.n_nodes {
        let row: Vec<String> = graph.adjacency.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
