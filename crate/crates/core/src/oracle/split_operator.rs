use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Spectrum magnitude (relative to its peak) regarded as negligible.
const SPECTRAL_FLOOR: f64 = 1e-12;

/// Periodic axis with points `min + i·h`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub spacing: f64,
    pub count: usize,
    /// Mass attached to this coordinate.
    pub mass: f64,
}

impl Axis {
    /// `count` points covering `[min, max)`.
    pub fn covering(min: f64, max: f64, count: usize, mass: f64) -> Self {
        Axis {
            min,
            spacing: (max - min) / count as f64,
            count,
            mass,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing
    }

    /// Angular wavenumber of FFT bin `i`.
    fn wavenumber(&self, i: usize) -> f64 {
        let n = self.count as i64;
        let i = i as i64;
        let m = if i < (n + 1) / 2 { i } else { i - n };
        2.0 * PI * m as f64 / (n as f64 * self.spacing)
    }
}

/// Row-major wavefunction samples on a tensor grid (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub axes: Vec<Axis>,
    pub values: Vec<Complex64>,
}

impl GridState {
    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let total: usize = axes.iter().map(|a| a.count).product();
        let dim = axes.len();
        let mut x = vec![0.0; dim];
        let values = (0..total)
            .map(|flat| {
                let mut rem = flat;
                for a in (0..dim).rev() {
                    x[a] = axes[a].point(rem % axes[a].count);
                    rem /= axes[a].count;
                }
                f(&x)
            })
            .collect();
        GridState { axes, values }
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    /// `Σ |ψ|² h` over every axis except `keep`, as a function of that axis.
    pub fn marginal_density(&self, keep: usize) -> Vec<f64> {
        let dim = self.axes.len();
        let counts: Vec<usize> = self.axes.iter().map(|a| a.count).collect();
        let stride: usize = counts[keep + 1..].iter().product();
        let mut out = vec![0.0; counts[keep]];
        for (flat, v) in self.values.iter().enumerate() {
            out[(flat / stride) % counts[keep]] += v.norm_sqr();
        }
        let w: f64 = (0..dim).filter(|&a| a != keep).map(|a| self.axes[a].spacing).product();
        out.iter_mut().for_each(|v| *v *= w);
        out
    }
}

/// `½ xᵀ V x` sampled on the grid of `axes`.
pub fn network_potential(axes: &[Axis], v: &DMatrix<f64>) -> Vec<f64> {
    let state = GridState::from_fn(axes.to_vec(), |x| {
        let n = x.len();
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                e += 0.5 * x[i] * v[(i, j)] * x[j];
            }
        }
        Complex64::new(e, 0.0)
    });
    state.values.into_iter().map(|c| c.re).collect()
}

struct AxisFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn fft_all(values: &mut [Complex64], counts: &[usize], ffts: &[AxisFft], forward: bool) {
    let dim = counts.len();
    let total = values.len();
    for a in 0..dim {
        let n = counts[a];
        let stride: usize = counts[a + 1..].iter().product();
        let fft = if forward { &ffts[a].forward } else { &ffts[a].inverse };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let block = n * stride;
        for outer in 0..total / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    values[base + i * stride] = *v;
                }
            }
        }
    }
    if !forward {
        let scale = 1.0 / total as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }
}

fn kinetic_energies(axes: &[Axis], hbar: f64) -> Vec<f64> {
    let dim = axes.len();
    let total: usize = axes.iter().map(|a| a.count).product();
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut e = 0.0;
            for a in (0..dim).rev() {
                let k = axes[a].wavenumber(rem % axes[a].count);
                rem /= axes[a].count;
                e += hbar * hbar * k * k / (2.0 * axes[a].mass);
            }
            e
        })
        .collect()
}

/// Strang-split evolution `e^{−iVΔt/2ħ} e^{−iTΔt/ħ} e^{−iVΔt/2ħ}` repeated
/// `steps` times, with the kinetic factor applied exactly in Fourier space.
///
/// Fails with `ResolutionTooCoarse` if the initial spectrum is not negligible
/// near the Nyquist edge, or if the kinetic phase per step at the highest
/// momentum the state actually carries exceeds π/4.
pub fn grid_evolve(
    initial: &GridState,
    potential: &[f64],
    hbar: f64,
    t: f64,
    steps: usize,
) -> Result<GridState> {
    let dim = initial.axes.len();
    if dim == 0 || dim > 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: dim,
        });
    }
    if potential.len() != initial.values.len() {
        return Err(Error::DimensionMismatch {
            expected: initial.values.len(),
            got: potential.len(),
        });
    }
    if steps == 0 || !(t >= 0.0) {
        return Err(Error::InvalidTime(format!("t = {t} with {steps} steps")));
    }
    let counts: Vec<usize> = initial.axes.iter().map(|a| a.count).collect();
    let mut planner = FftPlanner::<f64>::new();
    let ffts: Vec<AxisFft> = counts
        .iter()
        .map(|&n| AxisFft {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
        .collect();
    let dt = t / steps as f64;
    let kinetic = kinetic_energies(&initial.axes, hbar);

    // resolution checks on the initial spectrum
    let mut spec = initial.values.clone();
    fft_all(&mut spec, &counts, &ffts, true);
    let peak = spec.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut edge = 0.0f64;
    let mut e_eff = 0.0f64;
    for (flat, v) in spec.iter().enumerate() {
        let mag = v.norm();
        if mag > SPECTRAL_FLOOR * peak {
            e_eff = e_eff.max(kinetic[flat]);
        }
        let mut rem = flat;
        for a in (0..dim).rev() {
            let i = rem % counts[a];
            rem /= counts[a];
            let frac = (initial.axes[a].wavenumber(i) * initial.axes[a].spacing / PI).abs();
            if frac > 0.9 {
                edge = edge.max(mag);
            }
        }
    }
    if edge > 1e-10 * peak {
        return Err(Error::ResolutionTooCoarse(format!(
            "spectrum at the Nyquist edge is {:e} of peak",
            edge / peak
        )));
    }
    if e_eff * dt / hbar > PI / 4.0 {
        return Err(Error::ResolutionTooCoarse(format!(
            "kinetic phase per step {:.3} exceeds π/4",
            e_eff * dt / hbar
        )));
    }

    let half_v: Vec<Complex64> = potential
        .iter()
        .map(|&v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar)))
        .collect();
    let kin: Vec<Complex64> = kinetic
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -e * dt / hbar))
        .collect();

    let mut psi = initial.values.clone();
    for step in 0..steps {
        if step == 0 {
            psi.iter_mut().zip(&half_v).for_each(|(p, h)| *p *= h);
        }
        fft_all(&mut psi, &counts, &ffts, true);
        psi.iter_mut().zip(&kin).for_each(|(p, k)| *p *= k);
        fft_all(&mut psi, &counts, &ffts, false);
        if step + 1 == steps {
            psi.iter_mut().zip(&half_v).for_each(|(p, h)| *p *= h);
        } else {
            // two adjacent half steps merge into one full step
            psi.iter_mut().zip(&half_v).for_each(|(p, h)| *p *= h * h);
        }
    }
    Ok(GridState {
        axes: initial.axes.clone(),
        values: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_1d(points: usize, mass: f64, k: f64) -> (Vec<Axis>, Vec<f64>) {
        let axes = vec![Axis::covering(-12.0, 12.0, points, mass)];
        let v = DMatrix::from_element(1, 1, k);
        let pot = network_potential(&axes, &v);
        (axes, pot)
    }

    #[test]
    fn ground_state_is_stationary() {
        let (m, k): (f64, f64) = (1.5, 2.5);
        let omega = (k / m).sqrt();
        let (axes, pot) = harmonic_1d(4096, m, k);
        let a = m * omega;
        let psi = GridState::from_fn(axes, |x| Complex64::new((-0.5 * a * x[0] * x[0]).exp(), 0.0));
        let out = grid_evolve(&psi, &pot, 1.0, 2.0 * PI / omega, 10_000).unwrap();
        let drift = psi
            .values
            .iter()
            .zip(&out.values)
            .map(|(p, q)| (p.norm_sqr() - q.norm_sqr()).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-8, "drift {drift:e}");
        assert!((out.norm() - psi.norm()).abs() <= 1e-10 * psi.norm());
    }

    #[test]
    fn coarse_grid_rejected() {
        let (axes, pot) = harmonic_1d(64, 1.0, 1.0);
        // packet far narrower than the grid spacing
        let psi = GridState::from_fn(axes, |x| Complex64::new((-200.0 * x[0] * x[0]).exp(), 0.0));
        assert!(matches!(
            grid_evolve(&psi, &pot, 1.0, 1.0, 10),
            Err(Error::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn marginal_of_product_state() {
        let axes = vec![Axis::covering(-6.0, 6.0, 32, 1.0), Axis::covering(-6.0, 6.0, 16, 1.0)];
        let psi = GridState::from_fn(axes, |x| Complex64::new((-x[0] * x[0] - 0.5 * x[1] * x[1]).exp(), 0.0));
        let m0 = psi.marginal_density(0);
        assert_eq!(m0.len(), 32);
        let total: f64 = m0.iter().sum::<f64>() * psi.axes[0].spacing;
        assert!((total - psi.norm()).abs() < 1e-12);
    }
}
