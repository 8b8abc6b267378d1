//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use crate::error::{param, Error, Result};

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return param("matrix rows must all have length equal to the row count");
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| crate::numeric::dot(self.row(i), v)).collect()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenpairs sorted by ascending eigenvalue. `vectors[k]` pairs with `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub const MAX_SWEEPS: usize = 100;
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Diagonalizes `a` with cyclic Jacobi rotations until the off-diagonal
/// Frobenius norm drops to `tol`.
///
/// Eigenvalues come back ascending (stable with respect to the diagonal order
/// on ties) and each eigenvector is signed so its first non-negligible component
/// is positive.
pub fn symmetric_eig(a: &Matrix, tol: f64) -> Result<Eigen> {
    if !(tol > 0.0) {
        return param("eigensolver tolerance must be positive");
    }
    if a.asymmetry() > SYMMETRY_TOL {
        return param(format!("matrix is not symmetric (asymmetry {:e})", a.asymmetry()));
    }
    let n = a.size();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);

    let mut converged = a.off_diagonal_norm() <= tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                a.off_diagonal_norm()
            )));
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = a.off_diagonal_norm() <= tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[(i, k)]).collect();
            if let Some(&lead) = col.iter().find(|x| x.abs() > 1e-12) {
                if lead < 0.0 {
                    col.iter_mut().for_each(|x| *x = -*x);
                }
            }
            col
        })
        .collect();
    Ok(Eigen { values, vectors })
}

/// Applies the rotation that zeroes `a[p][q]`, accumulating it into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = a.size();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let x = rng.random_range(-1.0..1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn identity_spectrum() {
        let e = symmetric_eig(&Matrix::identity(4), 1e-10).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
        for (k, v) in e.vectors.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                assert_eq!(x, if i == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn diagonal_is_sorted_with_permuted_basis() {
        let mut m = Matrix::zeros(3);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = 1.0;
        m[(2, 2)] = 2.0;
        let e = symmetric_eig(&m, 1e-10).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vectors[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vectors[2], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn reconstruction_of_random_matrix() {
        let a = random_symmetric(10, 11);
        let e = symmetric_eig(&a, 1e-10).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let r: f64 = (0..10).map(|k| e.vectors[k][i] * e.values[k] * e.vectors[k][j]).sum();
                worst = worst.max((r - a[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-8, "reconstruction error {worst}");
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eig(&a, 1e-12).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[1][0] - h).abs() < 1e-14 && (e.vectors[1][1] - h).abs() < 1e-14);
        assert!((e.vectors[0][0] - h).abs() < 1e-14 && (e.vectors[0][1] + h).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eig(&a, 1e-10), Err(Error::Parameter(_))));
        assert!(symmetric_eig(&Matrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn empty_matrix() {
        let e = symmetric_eig(&Matrix::zeros(0), 1e-10).unwrap();
        assert!(e.values.is_empty());
    }
}
