//! Dense linear algebra and seeded random streams shared by the other modules.
//!
//! The matrices here are small (at most about 30x30, typically the Gram
//! matrices of stacked gradient samples), so everything is plain row-major
//! `Vec<f64>` with an O(n^3)-per-sweep cyclic Jacobi eigensolver.

mod rng;

pub use rng::RngStream;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric within tolerance {tol}")]
    NotSymmetric { tol: f64 },
    #[error("matrix has non-finite entries")]
    NotFinite,
    #[error("jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("degenerate input: matrix is identically zero")]
    DegenerateInput,
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Gram matrix `A^T A` (cols x cols).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for row in 0..self.rows {
            let r = self.row(row);
            for i in 0..n {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                for (j, rj) in r.iter().enumerate().skip(i) {
                    g.data[i * n + j] += ri * rj;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }
}

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations
/// (Numerical Recipes sec. 11.1 style), returning eigenvalues sorted in
/// descending order and the matching orthonormal eigenvectors as columns.
///
/// `tol` gates the symmetry precondition and the reconstruction guarantee
/// `||m - V L V^T||_F <= tol * ||m||_F`; the iteration itself always runs to
/// machine-level convergence.
pub fn symmetric_eigh(m: &Matrix, tol: f64) -> Result<(Vec<f64>, Matrix), NumericsError> {
    if m.rows != m.cols {
        return Err(NumericsError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if !m.is_finite() {
        return Err(NumericsError::NotFinite);
    }
    let n = m.rows;
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    for p in 0..n {
        for q in (p + 1)..n {
            if (m.get(p, q) - m.get(q, p)).abs() > tol * scale {
                return Err(NumericsError::NotSymmetric { tol });
            }
        }
    }

    let mut a = m.clone();
    // Work on the symmetrized copy so roundoff asymmetry cannot bias rotations.
    for p in 0..n {
        for q in (p + 1)..n {
            let s = 0.5 * (a.get(p, q) + a.get(q, p));
            a.set(p, q, s);
            a.set(q, p, s);
        }
    }
    let mut v = Matrix::identity(n);

    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a.get(p, q) * a.get(p, q);
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off(&a) <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..(n.saturating_sub(1)) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a.get(q, q) - a.get(p, p)) / apq;
                let t = if theta.abs() > 1e150 {
                    // Degenerate rotation angle; tan collapses to 1/(2 theta).
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a.get(p, p) - t * apq;
                let aqq = a.get(q, q) + t * apq;
                a.set(p, p, app);
                a.set(q, q, aqq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, arp - s * (arq + tau * arp));
                    a.set(p, r, a.get(r, p));
                    a.set(r, q, arq + s * (arp - tau * arq));
                    a.set(q, r, a.get(r, q));
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, vrp - s * (vrq + tau * vrp));
                    v.set(r, q, vrq + s * (vrp - tau * vrq));
                }
            }
        }
    }
    if !converged && off(&a) > 1e-12 * scale {
        return Err(NumericsError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    Ok((eigenvalues, vectors))
}

/// Unit vector maximizing `||a z||` over unit `z`: the top eigenvector of
/// `a^T a`, with the sign fixed so the first non-negligible entry is positive.
pub fn top_principal_direction(a: &Matrix) -> Result<Vec<f64>, NumericsError> {
    if a.rows == 0 || a.cols == 0 {
        return Err(NumericsError::Dimension("empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(NumericsError::NotFinite);
    }
    if a.data.iter().all(|&v| v == 0.0) {
        return Err(NumericsError::DegenerateInput);
    }
    let gram = a.gram();
    let (_, vectors) = symmetric_eigh(&gram, 1e-9)?;
    let mut z: Vec<f64> = (0..a.cols).map(|r| vectors.get(r, 0)).collect();
    canonicalize_sign(&mut z);
    Ok(z)
}

/// Flips `z` in place so its first entry above noise level is positive.
pub(crate) fn canonicalize_sign(z: &mut [f64]) {
    let max_abs = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return;
    }
    for &v in z.iter() {
        if v.abs() > 1e-12 * max_abs {
            if v < 0.0 {
                for w in z.iter_mut() {
                    *w = -*w;
                }
            }
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn eigh_diagonal() {
        let m = mat(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = symmetric_eigh(&m, 1e-12).unwrap();
        assert_eq!(vals, vec![4.0, 1.0]);
        assert!((vecs.get(0, 0).abs() - 1.0).abs() < 1e-14);
        assert!(vecs.get(1, 0).abs() < 1e-14);
        assert!((vecs.get(1, 1).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_identity() {
        let (vals, _) = symmetric_eigh(&Matrix::identity(3), 1e-12).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigh_2x2_closed_form() {
        // [[2,1],[1,2]]: eigenvalues 3 and 1, top eigenvector (1,1)/sqrt(2).
        let m = mat(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_eigh(&m, 1e-12).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let (v0, v1) = (vecs.get(0, 0), vecs.get(1, 0));
        assert!((v0.abs() - inv_sqrt2).abs() < 1e-12);
        assert!((v0 - v1).abs() < 1e-12, "components share one sign");
    }

    #[test]
    fn eigh_rejects_bad_input() {
        let m = mat(1, 2, &[1.0, 2.0]);
        assert!(matches!(
            symmetric_eigh(&m, 1e-12),
            Err(NumericsError::NotSquare { .. })
        ));
        let m = mat(2, 2, &[1.0, 5.0, 0.0, 1.0]);
        assert!(matches!(
            symmetric_eigh(&m, 1e-9),
            Err(NumericsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn eigh_reconstructs_random_symmetric() {
        let mut rng = RngStream::new(42);
        for trial in 0..40 {
            let n = 2 + (trial % 19);
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.next_f64() * 4.0 - 2.0;
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let (vals, vecs) = symmetric_eigh(&m, 1e-12).unwrap();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]), "sorted descending");
            // Reconstruction residual and eigenpair residual.
            let lam_max = vals[0].abs().max(vals[n - 1].abs());
            let mut recon_err = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += vecs.get(i, k) * vals[k] * vecs.get(j, k);
                    }
                    recon_err += (s - m.get(i, j)).powi(2);
                }
            }
            assert!(
                recon_err.sqrt() <= 1e-12 * m.frobenius_norm().max(1.0),
                "reconstruction residual too large: {recon_err}"
            );
            for k in 0..n {
                let mut resid = 0.0f64;
                let mut norm = 0.0f64;
                for i in 0..n {
                    let mut mv = 0.0;
                    for j in 0..n {
                        mv += m.get(i, j) * vecs.get(j, k);
                    }
                    resid += (mv - vals[k] * vecs.get(i, k)).powi(2);
                    norm += vecs.get(i, k).powi(2);
                }
                assert!(resid.sqrt() <= 1e-8 * lam_max.max(1e-30));
                assert!((norm.sqrt() - 1.0).abs() < 1e-12, "unit-norm eigenvector");
            }
        }
    }

    #[test]
    fn top_direction_rank_one() {
        // Every row a multiple of (3,4): direction must be (0.6, 0.8).
        let m = mat(3, 2, &[3.0, 4.0, -6.0, -8.0, 1.5, 2.0]);
        let z = top_principal_direction(&m).unwrap();
        assert!((z[0] - 0.6).abs() < 1e-12);
        assert!((z[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn top_direction_single_row() {
        let m = mat(1, 3, &[1.0, 0.0, 0.0]);
        let z = top_principal_direction(&m).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12 && z[2].abs() < 1e-12);
    }

    #[test]
    fn top_direction_axis_dominant() {
        // Rows {(2,0),(0,1)}: Gram = diag(4,1), top direction (1,0).
        let m = mat(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let z = top_principal_direction(&m).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12);
    }

    #[test]
    fn top_direction_rejects_zero_matrix() {
        let m = Matrix::zeros(4, 3);
        assert!(matches!(
            top_principal_direction(&m),
            Err(NumericsError::DegenerateInput)
        ));
    }

    #[test]
    fn top_direction_row_permutation_stable() {
        let mut rng = RngStream::new(7);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..5).map(|_| rng.next_f64() * 2.0 - 1.0).collect())
            .collect();
        let z0 = top_principal_direction(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let mut permuted = rows.clone();
        permuted.reverse();
        permuted.swap(2, 7);
        let z1 = top_principal_direction(&Matrix::from_rows(&permuted).unwrap()).unwrap();
        for (a, b) in z0.iter().zip(&z1) {
            assert!((a - b).abs() < 1e-12, "{z0:?} vs {z1:?}");
        }
    }
}
