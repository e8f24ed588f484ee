//! Packed complex symmetric matrices and their `L D Lᵀ` factorization.
//!
//! Only the upper triangle is stored, so `A = Aᵀ` holds by construction.
//! The factorization is non-pivoting and uses the plain transpose (not the
//! conjugate transpose). When `Re(A)` is positive definite every pivot has a
//! positive real part, which fixes a continuous branch for `det(A)^{1/2}`:
//! the product of the principal square roots of the pivots.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold on the smallest pivot real part.
pub const PIVOT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    // row-major upper triangle: (0,0) (0,1) .. (0,n-1) (1,1) ..
    data: Vec<Complex64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from a function evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    /// Takes the upper triangle of a square dense matrix.
    pub fn from_upper(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square dense matrix.
    pub fn from_symmetrized(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                (m[(i, j)] + m[(j, i)]) * 0.5
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[packed_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = packed_index(self.n, i, j);
        self.data[k] = v;
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Packed upper triangle, row-major.
    pub fn packed(&self) -> &[Complex64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn conj(&self) -> SymMatrix {
        self.map(|v| v.conj())
    }

    pub fn re(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).re)
    }

    /// Congruence `Tᵀ A T` with a real (possibly rectangular) `T`.
    pub fn congruence(&self, t: &DMatrix<f64>) -> SymMatrix {
        assert_eq!(t.nrows(), self.n);
        let m = t.ncols();
        // AT, column by column
        let mut at = vec![Complex64::new(0.0, 0.0); self.n * m];
        for k in 0..m {
            for i in 0..self.n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..self.n {
                    acc += self.get(i, j) * t[(j, k)];
                }
                at[k * self.n + i] = acc;
            }
        }
        SymMatrix::from_fn(m, |p, q| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..self.n {
                acc += at[q * self.n + i] * t[(i, p)];
            }
            acc
        })
    }

    /// Sub-matrix on the given index set (in the given order).
    pub fn select(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `A = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct SymFactor {
    n: usize,
    l: Vec<Complex64>, // dense row-major n × n, strictly lower part used
    d: Vec<Complex64>,
}

impl SymFactor {
    /// Factors `a`, requiring every pivot real part to exceed
    /// `PIVOT_REL_TOL · max_i |A_ii|`.
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let n = a.n();
        let scale = (0..n).map(|i| a.get(i, i).norm()).fold(0.0, f64::max);
        let threshold = PIVOT_REL_TOL * scale;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut dj = a.get(j, j);
            for k in 0..j {
                dj -= l[j * n + k] * l[j * n + k] * d[k];
            }
            if !dj.re.is_finite() || !dj.im.is_finite() {
                return Err(Error::SingularBlock(j));
            }
            if !(dj.re > threshold) {
                return Err(Error::NotNormalizable(format!(
                    "pivot {j} has real part {:e} (threshold {:e})",
                    dj.re, threshold
                )));
            }
            d[j] = dj;
            l[j * n + j] = Complex64::new(1.0, 0.0);
            for i in (j + 1)..n {
                let mut v = a.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k] * d[k];
                }
                l[i * n + j] = v / dj;
            }
        }
        Ok(SymFactor { n, l, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[Complex64] {
        &self.d
    }

    /// `ln det A` on the branch where each pivot contributes its principal log.
    pub fn log_det(&self) -> Complex64 {
        self.d.iter().map(|p| p.ln()).sum()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                let yk = y[k];
                y[i] -= lik * yk;
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[k * n + i];
                let yk = y[k];
                y[i] -= lki * yk;
            }
        }
        y
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        let mut inv = DMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        SymMatrix::from_symmetrized(&inv)
    }
}
