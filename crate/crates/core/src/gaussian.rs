//! Closed-form algebra of complex Gaussian terms
//! `g(x) = exp(c + bᵀx − ½ xᵀ A x)` over `N` real variables.
//!
//! Wavefunctions and densities are finite sums of such terms. Products,
//! conjugates and partial integrals of Gaussians are again Gaussians, so the
//! whole reduced-density computation runs on these parameters and only touches
//! a grid at the very end.
//!
//! `c` is a log-amplitude: products and integrals add to it and never
//! overflow. Branches of `det(A)^{-1/2}` follow [`SymFactor`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PacketLabel;
use crate::symmetric::{SymFactor, SymMatrix};

/// Real part of the exponent is clamped to this magnitude in [`ComplexGaussianTerm::evaluate`].
pub const EXPONENT_CLAMP: f64 = 700.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGaussianTerm {
    pub c: Complex64,
    pub b: Vec<Complex64>,
    pub a: SymMatrix,
}

impl ComplexGaussianTerm {
    pub fn new(c: Complex64, b: Vec<Complex64>, a: SymMatrix) -> Result<Self> {
        if b.len() != a.n() {
            return Err(Error::DimensionMismatch {
                expected: a.n(),
                got: b.len(),
            });
        }
        Ok(ComplexGaussianTerm { c, b, a })
    }

    /// The constant function 1 over `n` variables.
    pub fn unit(n: usize) -> Self {
        ComplexGaussianTerm {
            c: Complex64::new(0.0, 0.0),
            b: vec![Complex64::new(0.0, 0.0); n],
            a: SymMatrix::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// The exponent `c + bᵀx − ½ xᵀAx`.
    pub fn exponent(&self, x: &[f64]) -> Result<Complex64> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut e = self.c;
        for i in 0..n {
            e += self.b[i] * x[i];
            let mut row = self.a.get(i, i) * (0.5 * x[i]);
            for j in (i + 1)..n {
                row += self.a.get(i, j) * x[j];
            }
            e -= row * x[i];
        }
        Ok(e)
    }

    /// Value at `x`, with the real part of the exponent clamped to ±700.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        let mut e = self.exponent(x)?;
        e.re = e.re.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP);
        Ok(e.exp())
    }

    pub fn multiply(&self, other: &ComplexGaussianTerm) -> Result<ComplexGaussianTerm> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(ComplexGaussianTerm {
            c: self.c + other.c,
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect(),
            a: self.a.add(&other.a),
        })
    }

    pub fn conjugate(&self) -> ComplexGaussianTerm {
        ComplexGaussianTerm {
            c: self.c.conj(),
            b: self.b.iter().map(|v| v.conj()).collect(),
            a: self.a.conj(),
        }
    }

    /// Integrates out the variables in `drop`; the result lives on the
    /// remaining variables in ascending index order.
    ///
    /// With `A = [[A_dd, A_dk], [A_kd, A_kk]]` and `b = (b_d, b_k)`:
    ///
    /// ```text
    /// A' = A_kk − A_kd A_dd⁻¹ A_dk
    /// b' = b_k − A_kd A_dd⁻¹ b_d
    /// c' = c + ½ b_dᵀ A_dd⁻¹ b_d + (|d|/2) ln 2π − ½ ln det A_dd
    /// ```
    pub fn marginalize(&self, drop: &[usize]) -> Result<ComplexGaussianTerm> {
        let n = self.dim();
        let mut dropped = vec![false; n];
        for &i in drop {
            if i >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: i + 1,
                });
            }
            if dropped[i] {
                return Err(Error::NotNormalizable(format!(
                    "variable {i} listed twice for marginalization"
                )));
            }
            dropped[i] = true;
        }
        if drop.is_empty() {
            return Ok(self.clone());
        }
        let d_idx: Vec<usize> = (0..n).filter(|&i| dropped[i]).collect();
        let k_idx: Vec<usize> = (0..n).filter(|&i| !dropped[i]).collect();

        let factor = SymFactor::new(&self.a.select(&d_idx))?;
        let b_d: Vec<Complex64> = d_idx.iter().map(|&i| self.b[i]).collect();
        let y = factor.solve(&b_d);

        // columns of A_dd⁻¹ A_dk, one per kept variable
        let x_cols: Vec<Vec<Complex64>> = k_idx
            .iter()
            .map(|&k| {
                let col: Vec<Complex64> = d_idx.iter().map(|&d| self.a.get(d, k)).collect();
                factor.solve(&col)
            })
            .collect();

        let a_new = SymMatrix::from_fn(k_idx.len(), |p, q| {
            let mut v = self.a.get(k_idx[p], k_idx[q]);
            for (r, &d) in d_idx.iter().enumerate() {
                v -= self.a.get(k_idx[p], d) * x_cols[q][r];
            }
            v
        });
        let b_new = k_idx
            .iter()
            .map(|&k| {
                let mut v = self.b[k];
                for (r, &d) in d_idx.iter().enumerate() {
                    v -= self.a.get(k, d) * y[r];
                }
                v
            })
            .collect();
        let quad: Complex64 = b_d.iter().zip(&y).map(|(u, v)| u * v).sum();
        let c_new = self.c + 0.5 * quad + 0.5 * d_idx.len() as f64 * LN_2PI
            - 0.5 * factor.log_det();
        Ok(ComplexGaussianTerm {
            c: c_new,
            b: b_new,
            a: a_new,
        })
    }

    /// `ln ∫ g(x) dx = c + ½ bᵀA⁻¹b + (N/2) ln 2π − ½ ln det A`.
    pub fn log_integral(&self) -> Result<Complex64> {
        let all: Vec<usize> = (0..self.dim()).collect();
        Ok(self.marginalize(&all)?.c)
    }

    pub fn integrate_all(&self) -> Result<Complex64> {
        Ok(self.log_integral()?.exp())
    }

    /// Substitutes `x = S y`: returns `h(y) = g(S y)`, so `A' = SᵀAS`, `b' = Sᵀb`.
    pub fn substitute(&self, s: &nalgebra::DMatrix<f64>) -> Result<ComplexGaussianTerm> {
        if s.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.nrows(),
            });
        }
        let b = (0..s.ncols())
            .map(|k| (0..s.nrows()).map(|i| self.b[i] * s[(i, k)]).sum())
            .collect();
        Ok(ComplexGaussianTerm {
            c: self.c,
            b,
            a: self.a.congruence(s),
        })
    }

    /// Mean of the real Gaussian `|g|`-shape: `Re(A)⁻¹ Re(b)`.
    ///
    /// For a term with real parameters this is the centroid of `g` itself.
    pub fn centroid(&self) -> Result<Vec<f64>> {
        let re_a = SymMatrix::from_fn(self.dim(), |i, j| Complex64::new(self.a.get(i, j).re, 0.0));
        let f = SymFactor::new(&re_a)?;
        let rhs: Vec<Complex64> = self.b.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
        Ok(f.solve(&rhs).into_iter().map(|v| v.re).collect())
    }

    /// Largest absolute parameter difference, over `c`, `b` and `A`.
    pub fn max_param_diff(&self, other: &ComplexGaussianTerm) -> f64 {
        let db = self
            .b
            .iter()
            .zip(&other.b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        (self.c - other.c).norm().max(db).max(self.a.max_abs_diff(&other.a))
    }
}

/// A term tagged with the packet labels it came from.
///
/// Wavefunction terms carry their label in `ket` (and the same label in
/// `bra`); density terms `conj(G_bra)·G_ket` carry both.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTerm {
    pub term: ComplexGaussianTerm,
    pub bra: PacketLabel,
    pub ket: PacketLabel,
}

impl LabeledTerm {
    pub fn wavefunction(term: ComplexGaussianTerm, label: PacketLabel) -> Self {
        LabeledTerm {
            term,
            bra: label,
            ket: label,
        }
    }
}

/// Sum of term values at `x`, in slice order.
pub fn evaluate_sum(terms: &[LabeledTerm], x: &[f64]) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        acc += t.term.evaluate(x)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_dim(a: Complex64, b: Complex64, c0: Complex64) -> ComplexGaussianTerm {
        ComplexGaussianTerm::new(c0, vec![b], SymMatrix::diagonal(&[a])).unwrap()
    }

    #[test]
    fn evaluate_basics() {
        let t = one_dim(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(t.evaluate(&[0.0]).unwrap(), c(1.0, 0.0));
        assert!((t.evaluate(&[1.0]).unwrap() - c((-0.5f64).exp(), 0.0)).norm() < 1e-16);
        assert!(matches!(
            t.evaluate(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        // clamped instead of overflowing
        let big = one_dim(c(1.0, 0.0), c(0.0, 0.0), c(1e4, 0.0));
        assert!(big.evaluate(&[0.0]).unwrap().re.is_finite());
    }

    #[test]
    fn multiply_identity_and_modulus() {
        let t = ComplexGaussianTerm::new(
            c(0.1, -0.4),
            vec![c(0.2, 1.0), c(-0.3, 0.5)],
            SymMatrix::from_fn(2, |i, j| c(1.0 + (i + j) as f64, 0.3 * (i as f64 - j as f64 + 1.0))),
        )
        .unwrap();
        assert_eq!(t.multiply(&ComplexGaussianTerm::unit(2)).unwrap(), t);
        let m = t.conjugate().multiply(&t).unwrap();
        assert_eq!(m.c.im, 0.0);
        assert!(m.b.iter().all(|v| v.im == 0.0));
        assert!(m.a.packed().iter().all(|v| v.im == 0.0));
        let x = [0.4, -0.9];
        let lhs = m.evaluate(&x).unwrap();
        let rhs = t.evaluate(&x).unwrap().norm_sqr();
        assert!((lhs.re - rhs).abs() < 1e-14 * rhs);
    }

    #[test]
    fn integrate_simple() {
        let t = one_dim(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!((t.integrate_all().unwrap() - c((2.0 * PI).sqrt(), 0.0)).norm() < 1e-14);
        let t = one_dim(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let expect = (2.0 * PI).sqrt() * 0.5f64.exp();
        assert!((t.integrate_all().unwrap() - c(expect, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn marginalize_standard_normal() {
        let c0 = c(-LN_2PI, 0.0); // unit mass over the plane
        let t = ComplexGaussianTerm::new(c0, vec![c(0.0, 0.0); 2], SymMatrix::identity(2)).unwrap();
        let m = t.marginalize(&[1]).unwrap();
        assert_eq!(m.dim(), 1);
        assert!((m.a.get(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((m.c - c(-0.5 * LN_2PI, 0.0)).norm() < 1e-15);
        assert!((m.integrate_all().unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn marginalize_correlated_closed_form() {
        let a = SymMatrix::from_fn(2, |i, j| if i == j { c(2.0, 0.0) } else { c(1.0, 0.0) });
        let t = ComplexGaussianTerm::new(c(0.0, 0.0), vec![c(0.0, 0.0); 2], a).unwrap();
        let m = t.marginalize(&[1]).unwrap();
        assert!((m.a.get(0, 0) - c(1.5, 0.0)).norm() < 1e-15);
        assert!((m.c - c(0.5 * LN_2PI - 0.5 * 2f64.ln(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn marginalize_rejects_bad_blocks() {
        let a = SymMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let t = ComplexGaussianTerm::new(c(0.0, 0.0), vec![c(0.0, 0.0); 2], a).unwrap();
        assert!(t.marginalize(&[0]).is_ok());
        assert!(matches!(t.marginalize(&[1]), Err(Error::NotNormalizable(_))));
        assert!(t.marginalize(&[2]).is_err());
    }

    #[test]
    fn substitute_matches_direct_evaluation() {
        let t = ComplexGaussianTerm::new(
            c(0.2, 0.1),
            vec![c(0.5, -0.2), c(0.1, 0.3)],
            SymMatrix::from_fn(2, |i, j| if i == j { c(1.0, 0.2) } else { c(0.3, -0.1) }),
        )
        .unwrap();
        let s = nalgebra::DMatrix::from_row_slice(2, 2, &[0.8, -0.6, 0.3, 1.1]);
        let h = t.substitute(&s).unwrap();
        let y = [0.7, -0.4];
        let x = [s[(0, 0)] * y[0] + s[(0, 1)] * y[1], s[(1, 0)] * y[0] + s[(1, 1)] * y[1]];
        assert!((h.evaluate(&y).unwrap() - t.evaluate(&x).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn centroid_of_shifted_gaussian() {
        // exp(−(x − 2)²/2) = exp(−2 + 2x − x²/2)
        let t = one_dim(c(1.0, 0.0), c(2.0, 0.0), c(-2.0, 0.0));
        assert!((t.centroid().unwrap()[0] - 2.0).abs() < 1e-15);
    }
}
