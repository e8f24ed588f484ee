use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::ComplexGaussianTerm;

/// Boundary values must be below this fraction of the maximum.
const BOUNDARY_TOL: f64 = 1e-12;

/// Per-axis `(min, max, points)` for composite Simpson; point counts are odd.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub axes: Vec<(f64, f64, usize)>,
}

impl QuadratureSpec {
    pub fn new(axes: Vec<(f64, f64, usize)>) -> Result<Self> {
        for &(lo, hi, n) in &axes {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Validation(format!("bad interval [{lo}, {hi}]")));
            }
            if n < 3 || n % 2 == 0 {
                return Err(Error::Validation(format!(
                    "Simpson needs an odd point count of at least 3, got {n}"
                )));
            }
        }
        Ok(QuadratureSpec { axes })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![(lo, hi, points); dim])
    }

    fn weights(&self, axis: usize) -> Vec<f64> {
        let (lo, hi, n) = self.axes[axis];
        let h = (hi - lo) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect()
    }

    fn point(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi, n) = self.axes[axis];
        let f = i as f64 / (n - 1) as f64;
        lo * (1.0 - f) + hi * f
    }
}

/// Tensor-product Simpson integral of an arbitrary function.
///
/// Fails with `BoundaryMassTooLarge` if `|f|` on any face of the box exceeds
/// `1e-12` of its maximum over the box.
pub fn quad_integrate_fn(f: impl Fn(&[f64]) -> Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
    let dim = spec.axes.len();
    let weights: Vec<Vec<f64>> = (0..dim).map(|a| spec.weights(a)).collect();
    let counts: Vec<usize> = spec.axes.iter().map(|a| a.2).collect();
    let total: usize = counts.iter().product();

    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut peak = 0.0f64;
    let mut face = vec![0.0f64; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for a in 0..dim {
            x[a] = spec.point(a, idx[a]);
            w *= weights[a][idx[a]];
        }
        let v = f(&x);
        let mag = v.norm();
        peak = peak.max(mag);
        for a in 0..dim {
            if idx[a] == 0 || idx[a] == counts[a] - 1 {
                face[a] = face[a].max(mag);
            }
        }
        sum += v * w;
        // odometer
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    for (axis, &m) in face.iter().enumerate() {
        if m > BOUNDARY_TOL * peak {
            return Err(Error::BoundaryMassTooLarge {
                axis,
                ratio: m / peak,
            });
        }
    }
    Ok(sum)
}

pub fn quad_integrate(term: &ComplexGaussianTerm, spec: &QuadratureSpec) -> Result<Complex64> {
    if spec.axes.len() != term.dim() {
        return Err(Error::DimensionMismatch {
            expected: term.dim(),
            got: spec.axes.len(),
        });
    }
    // evaluate the exponent directly so the oracle does not share the clamp
    quad_integrate_fn(|x| term.exponent(x).expect("dimension checked").exp(), spec)
}
