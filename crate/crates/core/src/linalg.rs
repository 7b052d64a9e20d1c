//! Small dense square matrices.
//!
//! Dimensions in this crate are tiny (d <= 16), so matrices are stored as a
//! flat row-major `Vec<f64>` and every routine is written for in-place use in
//! hot Monte-Carlo loops.

use std::fmt;

use crate::error::{config, Result};

/// Square `n x n` matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_struct("Mat").field("n", &self.n).field("rows", &rows).finish()
    }
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    /// Builds a matrix from a list of rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return config("matrix must have at least one row");
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return config(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { n, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn copy_from(&mut self, other: &Mat) {
        debug_assert_eq!(self.n, other.n);
        self.data.copy_from_slice(&other.data);
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut t = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    /// Exact symmetry: `m[i][j] == m[j][i]` bitwise.
    pub fn is_symmetric(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (i + 1..n).all(|j| self.data[i * n + j] == self.data[j * n + i]))
    }

    /// True when the matrix equals `c * I` for some scalar `c`.
    pub fn is_scalar_multiple_of_identity(&self) -> bool {
        let n = self.n;
        let c = self.data[0];
        (0..n).all(|i| (0..n).all(|j| self.data[i * n + j] == if i == j { c } else { 0.0 }))
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: f64, other: &Mat) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += c * y;
        }
    }

    /// `out = self * rhs`
    pub fn mul_into(&self, rhs: &Mat, out: &mut Mat) {
        let n = self.n;
        debug_assert!(rhs.n == n && out.n == n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let o = &mut out.data[i * n..(i + 1) * n];
            o.iter_mut().for_each(|x| *x = 0.0);
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let r = &rhs.data[k * n..(k + 1) * n];
                for (x, &b) in o.iter_mut().zip(r) {
                    *x += a * b;
                }
            }
        }
    }

    pub fn mul(&self, rhs: &Mat) -> Mat {
        let mut out = Mat::zeros(self.n);
        self.mul_into(rhs, &mut out);
        out
    }

    /// `out = self * v`
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = self.data[i * n..(i + 1) * n]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// `out = self^T * v`
    pub fn tr_mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in v.iter().enumerate().take(n) {
            for (o, &a) in out.iter_mut().zip(&self.data[i * n..(i + 1) * n]) {
                *o += a * vi;
            }
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest singular value.
    ///
    /// Closed forms for `n <= 2`; cyclic Jacobi on `A^T A` otherwise.
    pub fn operator_norm(&self) -> f64 {
        match self.n {
            0 => 0.0,
            1 => self.data[0].abs(),
            2 => singular_values_2x2(&self.data).0,
            _ => {
                let gram = self.transpose().mul(self);
                let top = symmetric_eigenvalues(&gram)
                    .into_iter()
                    .fold(0.0_f64, f64::max);
                top.max(0.0).sqrt()
            }
        }
    }

    /// Smallest singular value.
    ///
    /// For symmetric input this uses the eigenvalues of the matrix itself,
    /// which keeps full absolute accuracy for nearly singular matrices.
    pub fn min_singular_value(&self) -> f64 {
        match self.n {
            0 => 0.0,
            1 => self.data[0].abs(),
            2 => singular_values_2x2(&self.data).1,
            _ if self.is_symmetric() => symmetric_eigenvalues(self)
                .into_iter()
                .fold(f64::INFINITY, |m, x| m.min(x.abs())),
            _ => {
                let gram = self.transpose().mul(self);
                symmetric_eigenvalues(&gram)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0)
                    .sqrt()
            }
        }
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        match n {
            0 => 1.0,
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {
                let mut a = self.data.clone();
                let mut det = 1.0;
                for col in 0..n {
                    let pivot = (col..n)
                        .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                        .unwrap_or(col);
                    if a[pivot * n + col] == 0.0 {
                        return 0.0;
                    }
                    if pivot != col {
                        for j in 0..n {
                            a.swap(col * n + j, pivot * n + j);
                        }
                        det = -det;
                    }
                    let p = a[col * n + col];
                    det *= p;
                    for r in col + 1..n {
                        let f = a[r * n + col] / p;
                        for j in col..n {
                            a[r * n + j] -= f * a[col * n + j];
                        }
                    }
                }
                det
            }
        }
    }

    /// Solves `self * x = rhs`; `None` when the matrix is numerically singular.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = self.max_abs();
        if scale == 0.0 {
            return None;
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .unwrap_or(col);
            if a[pivot * n + col].abs() <= scale * 1e-14 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                b.swap(col, pivot);
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i * n + i];
        }
        Some(x)
    }
}

/// Singular values `(max, min)` of a 2x2 matrix stored row-major.
///
/// Uses `sigma = (p +- q) / 2` with `p = |(a+d, c-b)|` and `q = |(a-d, c+b)|`,
/// which is free of the cancellation in the characteristic polynomial.
pub fn singular_values_2x2(m: &[f64]) -> (f64, f64) {
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(c + b);
    ((p + q) * 0.5, (p - q).abs() * 0.5)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
///
/// Only the upper triangle is trusted; the result is unsorted.
pub fn symmetric_eigenvalues(m: &Mat) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
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
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let m = mat(&[&[3.0, 0.0, 0.0], &[0.0, -5.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!((m.operator_norm() - 5.0).abs() < 1e-14);
        assert!((m.min_singular_value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_singular_values_match_jacobi() {
        let m = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let (hi, lo) = singular_values_2x2(m.as_slice());
        let gram = m.transpose().mul(&m);
        let mut ev = symmetric_eigenvalues(&gram);
        ev.sort_by(f64::total_cmp);
        assert!((hi - ev[1].sqrt()).abs() < 1e-13 * hi);
        assert!((lo - ev[0].sqrt()).abs() < 1e-12);
        assert!((hi * lo - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rank_one_norm() {
        // a a^T has norm |a|^2
        let m = mat(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]);
        assert!((m.operator_norm() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn solve_and_determinant() {
        let m = mat(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let x = m.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = m.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-13);
        }
        assert!((m.determinant() - 18.0).abs() < 1e-12);
        assert!(Mat::zeros(3).solve(&[1.0, 0.0, 0.0]).is_none());
    }

    proptest! {
        #[test]
        fn operator_norm_is_largest_singular_value(entries in proptest::collection::vec(-10.0f64..10.0, 9)) {
            let m = Mat { n: 3, data: entries };
            let s = m.operator_norm();
            // |Mx| <= s for unit x, with equality approached on a grid search
            let mut best: f64 = 0.0;
            for i in 0..40 {
                for j in 0..40 {
                    let th = std::f64::consts::PI * i as f64 / 40.0;
                    let ph = 2.0 * std::f64::consts::PI * j as f64 / 40.0;
                    let x = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                    let y = norm(&m.mul_vec(&x));
                    prop_assert!(y <= s * (1.0 + 1e-12) + 1e-12);
                    best = best.max(y);
                }
            }
            prop_assert!(best >= 0.95 * s);
            prop_assert!(s <= m.frobenius() * (1.0 + 1e-12));
        }

        #[test]
        fn submultiplicative(a in proptest::collection::vec(-3.0f64..3.0, 4), b in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let a = Mat { n: 2, data: a };
            let b = Mat { n: 2, data: b };
            prop_assert!(a.mul(&b).operator_norm() <= a.operator_norm() * b.operator_norm() * (1.0 + 1e-12) + 1e-14);
        }
    }
}
