//! Small dense real-matrix kernel.
//!
//! Sized for design problems with a handful of basis functions: everything is
//! row-major `Vec<f64>` storage with O(n³) algorithms. Inversion and the
//! determinant share one Gaussian elimination with partial pivoting; symmetric
//! eigenvalues come from cyclic Jacobi rotations.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// Largest row or column count accepted by [`Matrix`] constructors.
pub const MAX_DIM: usize = 64;

/// Pivots smaller than this fraction of the largest absolute entry are treated
/// as zero by [`Matrix::invert`].
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Elementwise tolerance for [`Matrix::max_eigenvalue`]'s symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;

const JACOBI_REL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(format!(
            "matrix must be non-empty, got {rows}x{cols}"
        )));
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::DimensionTooLarge(rows.max(cols)));
    }
    Ok(())
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(n, m, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0 && rows <= MAX_DIM && cols <= MAX_DIM);
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Column vector (n×1).
    pub fn column(values: &[f64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Largest |m[i][j] − m[j][i]|; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Quadratic form vᵀ m v.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let mv = self.mul_vec(v)?;
        Ok(v.iter().zip(&mv).map(|(a, b)| a * b).sum())
    }

    pub fn invert(&self) -> Result<Matrix> {
        self.invert_with_tolerance(SINGULARITY_TOL)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting. A pivot whose
    /// magnitude is at most `rel_tol` times the largest absolute entry of the
    /// input is reported as [`Error::SingularMatrix`].
    pub fn invert_with_tolerance(&self, rel_tol: f64) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(Error::SingularMatrix);
        }
        let threshold = rel_tol * scale;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .expect("non-empty range");
            if a[(pivot_row, col)].abs() <= threshold {
                return Err(Error::SingularMatrix);
            }
            a.swap_rows(col, pivot_row);
            inv.swap_rows(col, pivot_row);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let factor = a[(i, col)];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] -= factor * a[(col, j)];
                    inv[(i, j)] -= factor * inv[(col, j)];
                }
            }
        }
        if inv.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix);
        }
        Ok(inv)
    }

    /// Determinant from the LU factorization (partial pivoting, sign tracked
    /// through row swaps). Exactly singular input returns 0.
    pub fn determinant(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "determinant of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .expect("non-empty range");
            let p = a[(pivot_row, col)];
            if p == 0.0 {
                return Ok(0.0);
            }
            if pivot_row != col {
                a.swap_rows(col, pivot_row);
                det = -det;
            }
            det *= p;
            for i in col + 1..n {
                let factor = a[(i, col)] / p;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[(i, j)] -= factor * a[(col, j)];
                }
            }
        }
        Ok(det)
    }

    /// All eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigenvalues of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let mut values = jacobi_eigenvalues(self);
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*self.symmetric_eigenvalues()?.last().expect("non-empty"))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.symmetric_eigenvalues()?[0])
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

/// Cyclic Jacobi rotations on a symmetrized copy. Sweeps stop once the
/// off-diagonal Frobenius norm drops below `JACOBI_REL_TOL` times the diagonal
/// norm.
fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows;
    let mut a = m.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[(i, i)] * a[(i, i)];
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off.sqrt() <= JACOBI_REL_TOL * diag.sqrt() || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
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
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    /// Panics on a shape mismatch; use [`Matrix::matmul`] for the fallible form.
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_identity_and_diagonal() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.invert().unwrap(), i2);
        let d = Matrix::diag(&[1.0, 0.5]);
        assert!(d.invert().unwrap().max_abs_diff(&Matrix::diag(&[1.0, 2.0])) < 1e-15);
    }

    #[test]
    fn invert_equilibrium_m11_matches_adjugate() {
        let m = Matrix::from_rows(&[vec![1.0, -0.3242], vec![-0.3242, 0.42234]]).unwrap();
        let det = 1.0 * 0.42234 - 0.3242 * 0.3242;
        let expected = Matrix::from_rows(&[vec![0.42234, 0.3242], vec![0.3242, 1.0]])
            .unwrap()
            .scale(1.0 / det);
        let inv = m.invert().unwrap();
        assert!(inv.max_abs_diff(&expected) < 1e-12);
        assert!((&m * &inv).max_abs_diff(&Matrix::identity(2)) < 1e-9);
    }

    #[test]
    fn invert_rejects_singular_and_rectangular() {
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(s.invert(), Err(Error::SingularMatrix));
        let r = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(r.invert(), Err(Error::DimensionMismatch(_))));
        assert!(matches!(r.determinant(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(Matrix::identity(5).determinant().unwrap(), 1.0);
        assert_eq!(Matrix::diag(&[1.0, 0.5]).determinant().unwrap(), 0.5);
        let m = Matrix::from_rows(&[vec![1.0, -0.3242], vec![-0.3242, 0.42234]]).unwrap();
        assert!((m.determinant().unwrap() - 0.317234).abs() < 1e-6);
        let swapped = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(swapped.determinant().unwrap(), -1.0);
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(Matrix::diag(&[3.0, 1.0]).max_eigenvalue().unwrap(), 3.0);
        let flip = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((flip.max_eigenvalue().unwrap() - 1.0).abs() < 1e-14);
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((m.max_eigenvalue().unwrap() - 3.0).abs() < 1e-10);
        assert!((m.min_eigenvalue().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_reject_asymmetric_input() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(m.max_eigenvalue(), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn constructors_enforce_limits() {
        assert!(matches!(Matrix::from_vec(65, 1, vec![0.0; 65]), Err(Error::DimensionTooLarge(65))));
        assert!(matches!(Matrix::from_vec(1, 1, vec![f64::NAN]), Err(Error::NonFinite(_))));
        assert!(matches!(Matrix::from_vec(2, 2, vec![0.0; 3]), Err(Error::DimensionMismatch(_))));
    }
}
