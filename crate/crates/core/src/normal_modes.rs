//! Change of variables to decoupled normal modes.
//!
//! With `M` the diagonal mass matrix and `V` the potential matrix, the
//! mass-weighted matrix `W = M^{-1/2} V M^{-1/2}` is diagonalized as
//! `Oᵀ W O = diag(ω²)`. Mode coordinates are `q = Oᵀ M^{1/2} x`; in them the
//! Hamiltonian is a sum of independent unit-mass oscillators.

use std::ops::{AddAssign, Mul};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Orthogonal mode basis with squared mode frequencies in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeBasis {
    pub masses: Vec<f64>,
    /// Columns are the eigenvectors of the mass-weighted potential matrix.
    pub o: DMatrix<f64>,
    pub omega2: Vec<f64>,
    pub free_mode: Vec<bool>,
}

impl NormalModeBasis {
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// Angular frequency of mode `alpha`; zero for free modes and for tiny
    /// negative eigenvalues tolerated by the classifier.
    pub fn omega(&self, alpha: usize) -> f64 {
        if self.free_mode[alpha] {
            0.0
        } else {
            self.omega2[alpha].max(0.0).sqrt()
        }
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n()).map(|a| self.omega(a)).collect()
    }

    /// `T = Oᵀ M^{1/2}`, so that `q = T x`.
    pub fn to_mode_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |a, i| self.o[(i, a)] * self.masses[i].sqrt())
    }

    /// `S = M^{-1/2} O`, so that `x = S q`.
    pub fn from_mode_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, a| self.o[(i, a)] / self.masses[i].sqrt())
    }

    /// Particle coordinates to mode coordinates.
    pub fn to_modes<T>(&self, x: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        let n = self.n();
        check_len(n, x.len())?;
        Ok((0..n)
            .map(|a| {
                let mut acc = T::default();
                for i in 0..n {
                    acc += x[i] * (self.o[(i, a)] * self.masses[i].sqrt());
                }
                acc
            })
            .collect())
    }

    /// Mode coordinates back to particle coordinates.
    pub fn from_modes<T>(&self, q: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        let n = self.n();
        check_len(n, q.len())?;
        Ok((0..n)
            .map(|i| {
                let inv_sqrt_m = 1.0 / self.masses[i].sqrt();
                let mut acc = T::default();
                for a in 0..n {
                    acc += q[a] * (self.o[(i, a)] * inv_sqrt_m);
                }
                acc
            })
            .collect())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// `W = M^{-1/2} V M^{-1/2}`.
pub fn mass_weighted(v: &DMatrix<f64>, masses: &[f64]) -> Result<DMatrix<f64>> {
    let n = masses.len();
    if v.nrows() != n || v.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.nrows().max(v.ncols()),
        });
    }
    if let Some((i, &m)) = masses.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
        return Err(Error::NegativeMass { index: i, value: m });
    }
    let s: Vec<f64> = masses.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut w = DMatrix::from_fn(n, n, |i, j| s[i] * v[(i, j)] * s[j]);
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            w[(j, i)] = w[(i, j)];
        }
    }
    Ok(w)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted ascending and each eigenvector is signed so that its
/// largest-magnitude component (first one on ties) is positive. Eigenvalues in
/// `[−tol, tol]` are flagged as free modes; anything below `−tol` is an error.
pub fn eigendecompose(w: &DMatrix<f64>, masses: &[f64], tol: f64) -> Result<NormalModeBasis> {
    let n = w.nrows();
    check_len(n, w.ncols())?;
    check_len(n, masses.len())?;
    let (values, vectors) = jacobi_eigen(w)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut o = DMatrix::zeros(n, n);
    let mut omega2 = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for i in 1..n {
            if vectors[(i, src)].abs() > vectors[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if vectors[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            o[(i, col)] = sign * vectors[(i, src)];
        }
        omega2.push(values[src]);
    }

    if let Some(&neg) = omega2.iter().find(|&&e| e < -tol) {
        return Err(Error::NegativeEigenvalue(neg));
    }
    let free_mode = omega2.iter().map(|e| e.abs() <= tol).collect();
    Ok(NormalModeBasis {
        masses: masses.to_vec(),
        o,
        omega2,
        free_mode,
    })
}

/// Raw cyclic Jacobi: returns unsorted eigenvalues and eigenvector columns.
pub fn jacobi_eigen(w: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = w.nrows();
    let mut a = w.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().map(|x| x * x).sum::<f64>();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off == 0.0 || off <= 1e-34 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A ← Jᵀ A J with J the (p, q) plane rotation
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
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }
    Ok(((0..n).map(|i| a[(i, i)]).collect(), v))
}
