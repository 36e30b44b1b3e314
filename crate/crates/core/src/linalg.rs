//! Dense Hermitian linear algebra at desk scale (≤ 128 × 128): Cholesky
//! factorisation and cyclic Jacobi eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    /// `max |A − Aᴴ|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).modulus());
            }
        }
        worst
    }

    /// Leading principal `k × k` block.
    pub fn leading(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self.get(i, j))
    }

    /// Principal submatrix on `rows`.
    pub fn principal(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), |i, j| self.get(rows[i], rows[j]))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                let mut acc = T::zero();
                for (j, &xj) in x.iter().enumerate() {
                    acc += self.get(i, j) * xj;
                }
                acc
            })
            .collect()
    }
}

/// Lower-triangular factor `L` with `A = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut l: Matrix<T> = Matrix::zeros(n);
        for j in 0..n {
            let mut diag = a.get(j, j).real();
            for k in 0..j {
                diag -= l.get(j, k).modulus().powi(2);
            }
            if diag.is_nan() || diag <= 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
            }
            let d = diag.sqrt();
            l.set(j, j, T::from_real(d));
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s = s - l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / d);
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let l = &self.lower;
        let n = l.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i).real();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l.get(k, i).conj() * y[k];
            }
            y[i] = s / l.get(i, i).real();
        }
        y
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations, ascending.
///
/// Each pivot `a_pq = r e^{iφ}` is first made real by the phase change
/// `col_q ← e^{−iφ} col_q`, `row_q ← e^{iφ} row_q`; a real plane rotation
/// then annihilates it.
pub fn hermitian_eigenvalues(a: &Matrix<Complex64>) -> Vec<f64> {
    let n = a.dim();
    let mut m = a.clone();
    let scale = (0..n).map(|i| m.get(i, i).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                for k in 0..n {
                    m.set(k, q, m.get(k, q) * phase.conj());
                }
                for k in 0..n {
                    m.set(q, k, m.get(q, k) * phase);
                }
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let kp = m.get(k, p);
                    let kq = m.get(k, q);
                    m.set(k, p, kp * c - kq * s);
                    m.set(k, q, kp * s + kq * c);
                }
                for k in 0..n {
                    let pk = m.get(p, k);
                    let qk = m.get(q, k);
                    m.set(p, k, pk * c - qk * s);
                    m.set(q, k, pk * s + qk * c);
                }
                m.set(p, q, Complex64::new(0.0, 0.0));
                m.set(q, p, Complex64::new(0.0, 0.0));
                m.set(p, p, Complex64::new(app - t * r, 0.0));
                m.set(q, q, Complex64::new(aqq + t * r, 0.0));
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn real_to_complex(a: &Matrix<f64>) -> Matrix<Complex64> {
    Matrix::from_fn(a.dim(), |i, j| Complex64::new(a.get(i, j), 0.0))
}
