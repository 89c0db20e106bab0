//! Small dense square matrices.
//!
//! Dimensions in this crate are tiny (usually 2), so everything is a flat
//! row-major `Vec<f64>` with O(d³) routines. The 2×2 case has closed forms for
//! singular values and singular directions, which keep full relative accuracy
//! for the smallest singular value (it is computed as `|det| / σ₁`).

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Which matrix norm to use for products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    /// Operator 2-norm, the largest singular value.
    #[default]
    Spectral,
    /// Sum of the absolute values of all entries.
    Entrywise1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a `dim × dim` matrix from row-major entries.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Shape(alloc::format!(
                "matrix of dimension {dim} needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_rows<const D: usize>(rows: [[f64; D]; D]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix { dim: D, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = c;
        }
        Matrix { dim, data }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = Self::scalar(dim, 0.0);
        for (k, e) in entries.iter().enumerate() {
            m.data[k * dim + k] = *e;
        }
        m
    }

    /// Rotation of the plane by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = (math::sin(angle), math::cos(angle));
        Matrix::from_rows([[c, -s], [s, c]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch in product");
        let mut out = vec![0.0; self.data.len()];
        mul_into(self.dim, &self.data, &other.data, &mut out);
        Matrix {
            dim: self.dim,
            data: out,
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sum");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|r| (0..d).map(|c| self.data[r * d + c] * v[c]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c];
            }
        }
        Matrix { dim: d, data }
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn det(&self) -> f64 {
        if self.dim == 2 {
            let m = &self.data;
            return m[0] * m[3] - m[1] * m[2];
        }
        match lu(self.dim, &self.data) {
            Some((lu, _, sign)) => {
                let d = self.dim;
                (0..d).map(|k| lu[k * d + k]).product::<f64>() * sign
            }
            None => 0.0,
        }
    }

    /// Solves `self · x = b`; `None` when the matrix is numerically singular.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let d = self.dim;
        let (lu, perm, _) = lu(d, &self.data)?;
        let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        for r in 0..d {
            for c in 0..r {
                y[r] -= lu[r * d + c] * y[c];
            }
        }
        for r in (0..d).rev() {
            for c in r + 1..d {
                y[r] -= lu[r * d + c] * y[c];
            }
            y[r] /= lu[r * d + r];
        }
        Some(y)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for c in 0..d {
            let mut e = vec![0.0; d];
            e[c] = 1.0;
            let col = self.solve(&e)?;
            for r in 0..d {
                data[r * d + c] = col[r];
            }
        }
        Some(Matrix { dim: d, data })
    }

    /// `D⁻¹ · self · D`.
    pub fn conjugate(&self, transform: &Matrix) -> Result<Matrix> {
        let inv = transform
            .inverse()
            .ok_or_else(|| Error::Singular("coordinate transform".into()))?;
        Ok(inv.mul(self).mul(transform))
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        norm_of(self.dim, &self.data, kind)
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        singular_values_of(self.dim, &self.data)
    }

    /// Unit right-singular vector of the smallest singular value together with
    /// the relative singular gap `(σ₁ - σ_d) / σ₁`.
    pub fn least_right_singular_vector(&self) -> (Vec<f64>, f64) {
        let d = self.dim;
        let m = &self.data;
        if d == 2 {
            let (s1, s2) = sv2(m);
            let gap = if s1 > 0.0 { (s1 - s2) / s1 } else { 0.0 };
            let theta = least_direction_2x2(m);
            return (vec![math::cos(theta), math::sin(theta)], gap);
        }
        let gram = self.transpose().mul(self);
        let (values, vectors) = symmetric_eigen(d, gram.data);
        // values ascending
        let v: Vec<f64> = (0..d).map(|r| vectors[r * d]).collect();
        let s_max = math::sqrt(values[d - 1].max(0.0));
        let s_min = math::sqrt(values[0].max(0.0));
        let gap = if s_max > 0.0 { (s_max - s_min) / s_max } else { 0.0 };
        (v, gap)
    }
}

/// Angle in `[0, π)` of the least-expanded right-singular direction of a 2×2
/// row-major matrix.
pub(crate) fn least_direction_2x2(m: &[f64]) -> f64 {
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    let p = a * a + c * c;
    let q = a * b + c * d;
    let r = b * b + d * d;
    let principal = 0.5 * math::atan2(2.0 * q, p - r);
    math::proj_angle(principal + core::f64::consts::FRAC_PI_2)
}

/// `out = a · b` for row-major `dim × dim` slices.
#[inline]
pub(crate) fn mul_into(dim: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    if dim == 2 {
        out[0] = a[0] * b[0] + a[1] * b[2];
        out[1] = a[0] * b[1] + a[1] * b[3];
        out[2] = a[2] * b[0] + a[3] * b[2];
        out[3] = a[2] * b[1] + a[3] * b[3];
        return;
    }
    for r in 0..dim {
        for c in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += a[r * dim + k] * b[k * dim + c];
            }
            out[r * dim + c] = s;
        }
    }
}

#[inline]
pub(crate) fn norm_of(dim: usize, m: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::Entrywise1 => m.iter().map(|x| math::abs(*x)).sum(),
        NormKind::Spectral if dim == 2 => sv2(m).0,
        NormKind::Spectral => singular_values_of(dim, m)[0],
    }
}

/// Singular values of a 2×2 row-major matrix, `(σ₁, σ₂)`.
#[inline]
pub(crate) fn sv2(m: &[f64]) -> (f64, f64) {
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    let h1 = math::hypot(a + d, c - b);
    let h2 = math::hypot(a - d, b + c);
    let s1 = 0.5 * (h1 + h2);
    let s2 = if s1 > 0.0 { math::abs(a * d - b * c) / s1 } else { 0.0 };
    (s1, s2)
}

pub(crate) fn singular_values_of(dim: usize, m: &[f64]) -> Vec<f64> {
    if dim == 1 {
        return vec![math::abs(m[0])];
    }
    if dim == 2 {
        let (s1, s2) = sv2(m);
        return vec![s1, s2];
    }
    let mat = Matrix {
        dim,
        data: m.to_vec(),
    };
    let gram = mat.transpose().mul(&mat);
    let (values, _) = symmetric_eigen(dim, gram.data);
    values
        .iter()
        .rev()
        .map(|v| math::sqrt(v.max(0.0)))
        .collect()
}

/// Ratio `σ₂ / σ₁` of a product, the quantity bounded by dominated splitting.
pub(crate) fn second_singular_ratio(dim: usize, m: &[f64]) -> f64 {
    let sv = singular_values_of(dim, m);
    if sv[0] > 0.0 {
        sv[1] / sv[0]
    } else {
        1.0
    }
}

/// LU with partial pivoting. Returns packed factors, the row permutation and
/// the permutation sign, or `None` for a singular matrix.
fn lu(dim: usize, m: &[f64]) -> Option<(Vec<f64>, Vec<usize>, f64)> {
    let mut a = m.to_vec();
    let mut perm: Vec<usize> = (0..dim).collect();
    let mut sign = 1.0;
    let scale = m.iter().fold(0.0f64, |s, x| s.max(math::abs(*x)));
    if scale == 0.0 {
        return None;
    }
    for k in 0..dim {
        let mut p = k;
        for r in k + 1..dim {
            if math::abs(a[r * dim + k]) > math::abs(a[p * dim + k]) {
                p = r;
            }
        }
        if math::abs(a[p * dim + k]) <= 1e-300 {
            return None;
        }
        if p != k {
            for c in 0..dim {
                a.swap(k * dim + c, p * dim + c);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = a[k * dim + k];
        for r in k + 1..dim {
            let f = a[r * dim + k] / pivot;
            a[r * dim + k] = f;
            for c in k + 1..dim {
                a[r * dim + c] -= f * a[k * dim + c];
            }
        }
    }
    Some((a, perm, sign))
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Eigenvalues are
/// returned ascending; eigenvectors are the matching columns of the second
/// (row-major) output.
pub(crate) fn symmetric_eigen(dim: usize, mut a: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut v = Matrix::identity(dim).data;
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|r| (0..dim).filter(move |c| *c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * dim + c] * a[r * dim + c])
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (math::abs(theta) + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[i * dim + i].total_cmp(&a[j * dim + j]));
    let values = order.iter().map(|&i| a[i * dim + i]).collect();
    let mut vectors = vec![0.0; dim * dim];
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..dim {
            vectors[r * dim + new_c] = v[r * dim + old_c];
        }
    }
    (values, vectors)
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    math::sqrt(dot(v, v))
}
