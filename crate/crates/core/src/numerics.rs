//! Dense matrix primitives: the Moore-Penrose pseudo-inverse and the
//! spectral radius, plus the small amount of matrix plumbing the networks
//! need.
//!
//! Storage is row-major and owned. SVD and eigenvalue decompositions are
//! delegated to `faer`.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense, finite, row-major real matrix with at least one row and column.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_row_major(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
                context: "matrix entry count",
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry {} at ({}, {})",
                data[pos],
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                    context: "row length",
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    /// Panics if either dimension is zero or `f` yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_row_major(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                values[i]
            } else {
                0.0
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// Keeps the rows listed in `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::invalid(format!(
                    "row index {i} out of bounds for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::from_row_major(indices.len(), self.cols, data)
    }

    /// Applies `f` entrywise. Panics if `f` produces a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| f(self.get(i, j)))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
                context: "matmul inner dimension",
            });
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Self::from_row_major(self.rows, rhs.cols, out)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::invalid(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Self::from_row_major(self.rows, self.cols, data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub fn from_faer(m: &Mat<f64>) -> Result<Self> {
        Self::from_fn_checked(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    fn from_fn_checked(
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::from_row_major(rows, cols, data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.iter_rows() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Moore-Penrose pseudo-inverse via SVD.
///
/// Singular values at or below `max(m, n) * eps * sigma_max` are treated as
/// zero, so rank-deficient inputs (e.g. a hidden matrix with dead columns)
/// get the minimum-norm inverse rather than blowing up.
pub fn pseudo_inverse(a: &Matrix) -> Result<Matrix> {
    #[cfg(test)]
    counters::PINV.with(|c| c.set(c.get() + 1));

    let (m, n) = a.shape();
    let svd = a
        .to_faer()
        .thin_svd()
        .map_err(|e| Error::DegenerateMatrix(format!("SVD failed: {e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let sigma = svd.S().column_vector();
    let sigma_max = (0..sigma.nrows()).fold(0.0_f64, |acc, k| acc.max(sigma[k]));
    let cutoff = m.max(n) as f64 * f64::EPSILON * sigma_max;

    // A+ = V * diag(1/s) * U^T over the retained singular triplets.
    let mut pinv = Mat::<f64>::zeros(n, m);
    for k in 0..sigma.nrows() {
        let s = sigma[k];
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = v[(i, k)] / s;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m {
                pinv[(i, j)] += vik * u[(j, k)];
            }
        }
    }
    Matrix::from_faer(&pinv)
}

/// Largest eigenvalue modulus of a square matrix.
///
/// Complex conjugate eigenvalue pairs contribute their modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "spectral radius needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let eigenvalues = a
        .to_faer()
        .eigenvalues()
        .map_err(|e| Error::DegenerateMatrix(format!("eigenvalue iteration failed: {e:?}")))?;
    let radius = eigenvalues
        .iter()
        .map(|z| z.re.hypot(z.im))
        .fold(0.0_f64, f64::max);
    Ok(radius)
}

/// Rescales `a` so that its spectral radius equals `target`.
///
/// The zero pattern of `a` is preserved exactly.
pub fn scale_to_spectral_radius(a: &Matrix, target: f64) -> Result<Matrix> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid(format!(
            "target spectral radius must lie in (0, 1), got {target}"
        )));
    }
    let radius = spectral_radius(a)?;
    let floor = a.rows() as f64 * f64::EPSILON * a.frobenius_norm();
    if radius <= floor {
        return Err(Error::DegenerateMatrix(format!(
            "spectral radius {radius:e} is zero to working precision"
        )));
    }
    Ok(a.scale(target / radius))
}


#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        let diff = a.sub(b).unwrap().max_abs();
        assert!(diff <= tol, "max diff {diff:e} > {tol:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn pinv_identity_is_identity() {
        let eye = Matrix::identity(3);
        assert_close(&pseudo_inverse(&eye).unwrap(), &eye, 1e-15);
    }

    #[test]
    fn pinv_of_zero_is_zero_transposed_shape() {
        let p = pseudo_inverse(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(p.shape(), (3, 2));
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn pinv_rejects_non_finite_at_construction() {
        assert!(Matrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_row_major(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Matrix::from_row_major(0, 1, vec![]).is_err());
    }

    #[test]
    fn spectral_radius_diagonal_and_swap() {
        let d = Matrix::diagonal(&[0.5, -0.9]);
        assert!((spectral_radius(&d).unwrap() - 0.9).abs() < 1e-14);
        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((spectral_radius(&swap).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_uses_complex_modulus() {
        // rotation by 90 degrees scaled by 0.7: eigenvalues +-0.7i
        let r = Matrix::from_rows(&[[0.0, -0.7], [0.7, 0.0]]).unwrap();
        assert!((spectral_radius(&r).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_rejects_non_square() {
        assert!(matches!(
            spectral_radius(&Matrix::zeros(2, 3)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn scale_diagonal_example() {
        let d = Matrix::diagonal(&[2.0, 1.0]);
        let s = scale_to_spectral_radius(&d, 0.5).unwrap();
        assert_close(&s, &Matrix::diagonal(&[0.5, 0.25]), 1e-15);
    }

    #[test]
    fn scale_at_target_is_identity() {
        let a = Matrix::from_rows(&[[0.0, 0.9], [0.9, 0.0]]).unwrap();
        let s = scale_to_spectral_radius(&a, 0.9).unwrap();
        assert_close(&s, &a, 1e-12);
    }

    #[test]
    fn scale_rejects_nilpotent_and_zero() {
        let nil = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            scale_to_spectral_radius(&nil, 0.5),
            Err(Error::DegenerateMatrix(_))
        ));
        assert!(matches!(
            scale_to_spectral_radius(&Matrix::zeros(3, 3), 0.5),
            Err(Error::DegenerateMatrix(_))
        ));
        assert!(scale_to_spectral_radius(&Matrix::identity(2), 1.0).is_err());
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let b = a.transpose();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[14.0, 32.0], [32.0, 77.0]]).unwrap());
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn serde_round_trip_rejects_bad_shape() {
        let json = r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<Matrix>(json).is_err());
    }
}
