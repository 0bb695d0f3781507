//! Just enough 2x2 linear algebra for the information matrices; the
//! four-dimensional objects in this crate are all block diagonal with
//! 2x2 blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 2x2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, c: f64) -> Mat2 {
        Mat2::new(
            c * self.0[0][0],
            c * self.0[0][1],
            c * self.0[1][0],
            c * self.0[1][1],
        )
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.0[0][0] + other.0[0][0],
            self.0[0][1] + other.0[0][1],
            self.0[1][0] + other.0[1][0],
            self.0[1][1] + other.0[1][1],
        )
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1])
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Inverse; errors when the determinant vanishes.
    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularMatrix);
        }
        Ok(Mat2::new(
            self.0[1][1] / d,
            -self.0[0][1] / d,
            -self.0[1][0] / d,
            self.0[0][0] / d,
        ))
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite
    /// matrix.
    pub fn cholesky(&self) -> Result<Mat2> {
        let a11 = self.0[0][0];
        if a11 <= 0.0 {
            return Err(Error::SingularMatrix);
        }
        let l11 = a11.sqrt();
        let l21 = self.0[1][0] / l11;
        let rest = self.0[1][1] - l21 * l21;
        if rest <= 0.0 {
            return Err(Error::SingularMatrix);
        }
        Ok(Mat2::new(l11, 0.0, l21, rest.sqrt()))
    }

    /// Solve self * x = rhs.
    pub fn solve(&self, rhs: [f64; 2]) -> Result<[f64; 2]> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularMatrix);
        }
        Ok([
            (rhs[0] * self.0[1][1] - rhs[1] * self.0[0][1]) / d,
            (rhs[1] * self.0[0][0] - rhs[0] * self.0[1][0]) / d,
        ])
    }

    /// Solve L x = rhs for lower-triangular L (forward substitution).
    pub fn solve_lower(&self, rhs: [f64; 2]) -> Result<[f64; 2]> {
        let l11 = self.0[0][0];
        let l22 = self.0[1][1];
        if l11 == 0.0 || l22 == 0.0 {
            return Err(Error::SingularMatrix);
        }
        let x0 = rhs[0] / l11;
        Ok([x0, (rhs[1] - self.0[1][0] * x0) / l22])
    }

    /// Quadratic form v' * self * v.
    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        let w = self.mul_vec(v);
        v[0] * w[0] + v[1] * w[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 0.3, 0.3, 1.5);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!((id.0[0][0] - 1.0).abs() < 1e-14);
        assert!(id.0[0][1].abs() < 1e-14);
        assert!((id.0[1][1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = Mat2::new(4.0, 1.0, 1.0, 3.0);
        let l = m.cholesky().unwrap();
        let back = l.mul(&l.transpose());
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.0[i][j] - m.0[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(Mat2::new(1.0, 2.0, 2.0, 1.0).cholesky().is_err());
        assert!(Mat2::new(-1.0, 0.0, 0.0, 1.0).cholesky().is_err());
    }

    #[test]
    fn solve_agrees_with_inverse() {
        let m = Mat2::new(3.0, -1.0, 2.0, 5.0);
        let rhs = [1.0, 4.0];
        let x = m.solve(rhs).unwrap();
        let y = m.inverse().unwrap().mul_vec(rhs);
        assert!((x[0] - y[0]).abs() < 1e-14);
        assert!((x[1] - y[1]).abs() < 1e-14);
    }

    #[test]
    fn lower_solve() {
        let l = Mat2::new(2.0, 0.0, 1.0, 3.0);
        let x = l.solve_lower([4.0, 7.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert!((x[1] - 5.0 / 3.0).abs() < 1e-15);
    }
}
