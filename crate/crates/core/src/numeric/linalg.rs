//! Dense complex matrices: products, LU solves, norms and spectra.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: alloc::vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ A` (no conjugation).
    pub fn vecmat(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows, "vecmat dimension mismatch");
        let mut out = alloc::vec![C64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn powi(&self, p: usize) -> CMatrix {
        let mut out = CMatrix::identity(self.rows);
        for _ in 0..p {
            out = out.matmul(self);
        }
        out
    }

    /// Induced ℓ¹ norm: maximal column sum of moduli.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.data[i * self.cols + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Every eigenvalue, via a complex Schur decomposition.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        assert_eq!(self.rows, self.cols, "eigenvalues need a square matrix");
        let m = nalgebra::DMatrix::<C64>::from_row_slice(self.rows, self.cols, &self.data);
        let schur = m.try_schur(1e-14, 100_000).ok_or(Error::NoConvergence { what: "schur" })?;
        Ok(schur.eigenvalues().ok_or(Error::NoConvergence { what: "schur" })?.iter().copied().collect())
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        Ok(self.lu()?.solve(b))
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Lu> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pv <= 1e-300 * scale {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != C64::new(0.0, 0.0) {
                    for j in (k + 1)..n {
                        let t = lu[k * n + j];
                        lu[i * n + j] -= f * t;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// ℓ¹ norm of a complex vector.
pub fn norm1(x: &[C64]) -> f64 {
    x.iter().map(|a| a.norm()).sum()
}

/// Unconjugated bilinear pairing `Σ aᵢ bᵢ`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn real_vec(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&a| C64::new(a, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let s = (i * 7 + j * 3) as f64;
            C64::new(libm::sin(s) + if i == j { 3.0 } else { 0.0 }, libm::cos(1.3 * s))
        })
    }

    #[test]
    fn lu_solves() {
        let a = sample(9);
        let b: Vec<C64> = (0..9).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = a.solve(&b).unwrap();
        let r = a.matvec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let mut a = CMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in i..4 {
                a[(i, j)] = C64::new((i + 1) as f64, j as f64 * 0.1);
            }
        }
        let mut ev: Vec<f64> = a.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (k, e) in ev.iter().enumerate() {
            assert!((e - (k + 1) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let a = sample(12);
        let tr: C64 = (0..12).map(|i| a[(i, i)]).sum();
        let s: C64 = a.eigenvalues().unwrap().iter().sum();
        assert!((tr - s).norm() < 1e-9);
    }
}
