//! Client clustering by class-distribution similarity: Jensen–Shannon based
//! similarity, the symmetric normalized Laplacian and NJW spectral clustering.

mod eigen;
mod kmeans;

pub use eigen::{symmetric_eig, Eigen, Matrix, MAX_SWEEPS};
pub use kmeans::{kmeans, MAX_ITERATIONS, RESTARTS};

use serde::{Deserialize, Serialize};

use crate::data::ClassDistribution;
use crate::error::{param, Error, Result};

/// Off-diagonal convergence threshold used for Laplacian spectra.
pub const EIGEN_TOL: f64 = 1e-10;
/// Embedding rows shorter than this are left unnormalized (zero).
pub const ROW_NORM_FLOOR: f64 = 1e-12;

const SIMPLEX_TOL: f64 = 1e-9;

/// Client-to-cluster map with canonical labels: clusters are numbered by
/// ascending smallest member index, and every cluster is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    clusters: usize,
}

impl ClusterAssignment {
    pub fn from_labels(raw: &[usize]) -> Result<Self> {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let id = match map.iter().find(|(k, _)| *k == r) {
                Some(&(_, id)) => id,
                None => {
                    map.push((r, map.len()));
                    map.len() - 1
                }
            };
            labels.push(id);
        }
        if labels.is_empty() {
            return param("cluster assignment over zero clients");
        }
        Ok(Self { labels, clusters: map.len() })
    }

    /// Everyone in cluster 0.
    pub fn single(n: usize) -> Self {
        Self { labels: vec![0; n], clusters: 1 }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_of(&self, client: usize) -> usize {
        self.labels[client]
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter_map(|(i, &l)| (l == cluster).then_some(i)).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn check_simplex(p: &[f64], name: &str) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return param(format!("{name} has invalid entry {x}"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return param(format!("{name} sums to {s}, not 1"));
    }
    Ok(())
}

/// Jensen–Shannon divergence in nats, using `0 ln 0 = 0`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return param(format!("distribution lengths differ: {} vs {}", p.len(), q.len()));
    }
    check_simplex(p, "p")?;
    check_simplex(q, "q")?;
    let mut js = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let term = |x: f64| if x > 0.0 { x * (x / m).ln() } else { 0.0 };
        // commutative per-element sum keeps JS(p, q) == JS(q, p) exactly
        js += 0.5 * (term(a) + term(b));
    }
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

/// `S_ij = exp(-lambda1 JS(p_i, p_j) - lambda2 |n_i - n_j| / (n_i + n_j))`, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    /// Wraps a prebuilt matrix after checking symmetry, unit diagonal and `(0, 1]` entries.
    pub fn new(m: Matrix) -> Result<Self> {
        let n = m.size();
        if n == 0 {
            return param("similarity matrix over zero clients");
        }
        if m.asymmetry() > 1e-12 {
            return param("similarity matrix must be symmetric");
        }
        for i in 0..n {
            if m[(i, i)] != 1.0 {
                return param(format!("similarity diagonal entry {i} is {}", m[(i, i)]));
            }
            for j in 0..n {
                let s = m[(i, j)];
                if !(s > 0.0 && s <= 1.0) {
                    return param(format!("similarity entry ({i},{j}) = {s} outside (0, 1]"));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }
}

pub fn similarity_matrix(dists: &[ClassDistribution], lambda1: f64, lambda2: f64) -> Result<SimilarityMatrix> {
    if dists.is_empty() {
        return param("similarity matrix over zero clients");
    }
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return param("lambda1 and lambda2 must be non-negative");
    }
    let n = dists.len();
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&dists[i], &dists[j]);
            let js = js_divergence(&a.proportions, &b.proportions)?;
            let (ni, nj) = (a.count as f64, b.count as f64);
            let size = (ni - nj).abs() / (ni + nj);
            // exp underflow would leave the graph disconnected
            let s = (-lambda1 * js - lambda2 * size).exp().max(f64::MIN_POSITIVE);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    SimilarityMatrix::new(m)
}

/// `L_sym = I - D^{-1/2} S D^{-1/2}` with `D` the row sums of `S`.
pub fn normalized_laplacian(s: &SimilarityMatrix) -> Result<Matrix> {
    let m = s.matrix();
    let n = m.size();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = m.row(i).iter().sum();
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::Numeric(format!("row {i} of the similarity matrix sums to {d}")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_fn(n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * m[(i, j)] * inv_sqrt[j]
    }))
}

/// Laplacian spectrum (ascending) and the gaps between consecutive eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EigengapReport {
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl EigengapReport {
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Self {
        let gaps = eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
        Self { eigenvalues, gaps }
    }
}

pub fn eigengap_report(s: &SimilarityMatrix) -> Result<EigengapReport> {
    let eig = symmetric_eig(&normalized_laplacian(s)?, EIGEN_TOL)?;
    Ok(EigengapReport::from_eigenvalues(eig.values))
}

/// NJW spectral clustering into `m` clusters, also returning the Laplacian spectrum.
pub fn spectral_cluster_with_report(s: &SimilarityMatrix, m: usize, seed: u64) -> Result<(ClusterAssignment, EigengapReport)> {
    let n = s.size();
    if m == 0 || m > n {
        return param(format!("cluster count {m} must lie in 1..={n}"));
    }
    let eig = symmetric_eig(&normalized_laplacian(s)?, EIGEN_TOL)?;
    let embedding: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = eig.vectors[..m].iter().map(|v| v[i]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm >= ROW_NORM_FLOOR {
                row.iter_mut().for_each(|x| *x /= norm);
            } else {
                row.iter_mut().for_each(|x| *x = 0.0);
            }
            row
        })
        .collect();
    let assignment = kmeans(&embedding, m, seed)?;
    Ok((assignment, EigengapReport::from_eigenvalues(eig.values)))
}

pub fn spectral_cluster(s: &SimilarityMatrix, m: usize, seed: u64) -> Result<ClusterAssignment> {
    spectral_cluster_with_report(s, m, seed).map(|(a, _)| a)
}

/// Adjusted Rand index between two labelings of the same items.
///
/// When both labelings are trivial in the same way (the expected index equals
/// the maximum) the score is 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let pairs = |c: u64| (c * c.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { rows * cols / total } else { 0.0 };
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < 1e-12 {
        let same = ClusterAssignment::from_labels(a).ok() == ClusterAssignment::from_labels(b).ok();
        return if same { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}
