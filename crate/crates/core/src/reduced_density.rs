//! Reduced probability density of the system particle.
//!
//! The full density `|Ψ|²` of a `2^n`-term wavefunction expands into `4^n`
//! pair terms `conj(G_j)·G_k`. Each is integrated over all environment
//! coordinates in closed form, leaving one-variable Gaussians. Pair terms
//! whose bra and ket disagree on the system particle's packet make up the
//! interference part; everything else is the diagonal part.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::LabeledTerm;
use crate::model::ValidatedConfig;
use crate::propagation::{build_initial_terms, evolve_state};

/// Boundary density must be below this fraction of the maximum.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Uniform grid `min, min + h, …, max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            min: -12.0,
            max: 12.0,
            count: 1201,
        }
    }
}

impl Grid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min < max) || count < 2 || !min.is_finite() || !max.is_finite() {
            return Err(Error::Validation(format!(
                "grid [{min}, {max}] with {count} points is not valid"
            )));
        }
        Ok(Grid { min, max, count })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        // symmetric grids map exactly onto themselves under x → −x
        let f = i as f64 / (self.count - 1) as f64;
        self.min * (1.0 - f) + self.max * f
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Composite trapezoidal rule.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let inner: f64 = values[1..n - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[n - 1]))
    }
}

/// Reduced density and its interference part on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSnapshot {
    pub t: f64,
    pub grid: Grid,
    /// Normalized reduced density.
    pub rho: Vec<f64>,
    /// Signed interference part, normalized by the same factor as `rho`.
    pub interference: Vec<f64>,
    /// `max |interference|` over the grid.
    pub i_max: f64,
    /// Trapezoidal integral of the unnormalized density (the divisor).
    pub grid_norm: f64,
    /// Closed-form integral of the unnormalized density.
    pub analytic_norm: f64,
}

/// All `conj(G_j)·G_k` for `j` (bra) outer, `k` (ket) inner.
pub fn density_pair_terms(wave: &[LabeledTerm]) -> Result<Vec<LabeledTerm>> {
    let mut out = Vec::with_capacity(wave.len() * wave.len());
    for bra in wave {
        let conj = bra.term.conjugate();
        for ket in wave {
            out.push(LabeledTerm {
                term: conj.multiply(&ket.term)?,
                bra: bra.ket,
                ket: ket.ket,
            });
        }
    }
    Ok(out)
}

/// Integrates every pair term over all coordinates except `system_index`.
pub fn reduce(pairs: &[LabeledTerm], system_index: usize) -> Result<Vec<LabeledTerm>> {
    pairs
        .par_iter()
        .map(|p| {
            let n = p.term.dim();
            if system_index >= n {
                return Err(Error::InvalidSystemIndex {
                    index: system_index,
                    n,
                });
            }
            let drop: Vec<usize> = (0..n).filter(|&i| i != system_index).collect();
            let term = p.term.marginalize(&drop).map_err(|e| match e {
                Error::NotNormalizable(msg) => Error::NotNormalizable(format!(
                    "pair term <{}|{}>: {msg}",
                    p.bra, p.ket
                )),
                other => other,
            })?;
            Ok(LabeledTerm {
                term,
                bra: p.bra,
                ket: p.ket,
            })
        })
        .collect()
}

/// Splits into `(diagonal, interference)` by the system particle's bra/ket bits.
pub fn split_interference(
    reduced: &[LabeledTerm],
    system_index: usize,
) -> (Vec<LabeledTerm>, Vec<LabeledTerm>) {
    reduced
        .iter()
        .cloned()
        .partition(|t| t.bra.bit(system_index) == t.ket.bit(system_index))
}

/// Wavefunction terms at time `t`.
pub fn wave_terms_at(cfg: &ValidatedConfig, t: f64) -> Result<Vec<LabeledTerm>> {
    evolve_state(&build_initial_terms(cfg), cfg.basis(), cfg.hbar(), t)
}

/// The `4^n` one-variable reduced terms at time `t`.
pub fn reduced_terms_at(cfg: &ValidatedConfig, t: f64) -> Result<Vec<LabeledTerm>> {
    let wave = wave_terms_at(cfg, t)?;
    reduce(&density_pair_terms(&wave)?, cfg.system_index())
}

/// Sum of the terms on each grid point, accumulated in slice order.
pub fn evaluate_on_grid(terms: &[LabeledTerm], grid: &Grid) -> Result<Vec<Complex64>> {
    (0..grid.count)
        .into_par_iter()
        .map(|i| {
            let x = [grid.point(i)];
            let mut acc = Complex64::new(0.0, 0.0);
            for t in terms {
                acc += t.term.evaluate(&x)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Closed-form integral of a sum of terms.
pub fn analytic_norm(terms: &[LabeledTerm]) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        acc += t.term.integrate_all()?;
    }
    Ok(acc)
}

pub fn snapshot(cfg: &ValidatedConfig, t: f64, grid: &Grid) -> Result<ReducedSnapshot> {
    let reduced = reduced_terms_at(cfg, t)?;
    snapshot_from_reduced(&reduced, cfg.system_index(), t, grid)
}

/// Grid evaluation, boundary check and normalization of already reduced terms.
pub fn snapshot_from_reduced(
    reduced: &[LabeledTerm],
    system_index: usize,
    t: f64,
    grid: &Grid,
) -> Result<ReducedSnapshot> {
    let (diag, interf) = split_interference(reduced, system_index);
    let diag_v = evaluate_on_grid(&diag, grid)?;
    let interf_v = evaluate_on_grid(&interf, grid)?;
    let total: Vec<f64> = diag_v.iter().zip(&interf_v).map(|(d, i)| d.re + i.re).collect();

    let peak = total.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let boundary = total[0].abs().max(total[grid.count - 1].abs());
    if !(peak > 0.0) || boundary >= BOUNDARY_TOL * peak {
        return Err(Error::GridTooNarrow {
            t,
            boundary: if peak > 0.0 { boundary / peak } else { f64::INFINITY },
            limit: BOUNDARY_TOL,
        });
    }
    let z = grid.trapezoid(&total);
    let rho: Vec<f64> = total.iter().map(|v| v / z).collect();
    let interference: Vec<f64> = interf_v.iter().map(|v| v.re / z).collect();
    let i_max = interference.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(ReducedSnapshot {
        t,
        grid: *grid,
        rho,
        interference,
        i_max,
        grid_norm: z,
        analytic_norm: analytic_norm(reduced)?.re,
    })
}

/// `(t, i_max)` at each requested time, in ascending time order.
pub fn interference_series(
    cfg: &ValidatedConfig,
    times: &[f64],
    grid: &Grid,
) -> Result<Vec<(f64, f64)>> {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .par_iter()
        .map(|&t| snapshot(cfg, t, grid).map(|s| (t, s.i_max)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, CatSpec, OscillatorNetwork};
    use crate::presets;

    fn single_cat(d: f64, sigma: f64) -> ValidatedConfig {
        let net = OscillatorNetwork::unconnected(vec![1.0]).with_external(0, 1.0);
        validate(
            net,
            CatSpec {
                d: vec![d],
                sigma: vec![sigma],
                hbar: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn pair_counts_and_hermiticity() {
        let cfg = single_cat(3.0, 0.5);
        let pairs = density_pair_terms(&wave_terms_at(&cfg, 0.7).unwrap()).unwrap();
        assert_eq!(pairs.len(), 4);
        let (d, i) = split_interference(&pairs, 0);
        assert_eq!((d.len(), i.len()), (2, 2));
        assert!(i.iter().all(|t| t.bra != t.ket));

        let cfg = validate(presets::weak().0, presets::weak().1).unwrap();
        let pairs = density_pair_terms(&wave_terms_at(&cfg, 1.0).unwrap()).unwrap();
        assert_eq!(pairs.len(), 64);
        for j in 0..8 {
            for k in 0..8 {
                let jk = &pairs[j * 8 + k].term;
                let kj = pairs[k * 8 + j].term.conjugate();
                assert!(jk.max_param_diff(&kj) < 1e-12);
            }
        }
        let x = [0.3, 2.0, -1.0];
        let total: Complex64 = pairs.iter().map(|p| p.term.evaluate(&x).unwrap()).sum();
        assert!(total.im.abs() < 1e-12 * total.re.abs().max(1e-300));
        assert!(total.re >= 0.0);

        let reduced = reduce(&pairs, 0).unwrap();
        let (d, i) = split_interference(&reduced, 0);
        assert_eq!((d.len(), i.len()), (32, 32));
    }

    #[test]
    fn initial_overlap_peak() {
        // at t = 0 the cross term 2·exp(−d²/(8σ²)) peaks at x = d/2
        let sigma = 0.5;
        let d = 5.0 * sigma * 2f64.sqrt();
        let cfg = single_cat(d, sigma);
        let reduced = reduced_terms_at(&cfg, 0.0).unwrap();
        let (_, interf) = split_interference(&reduced, 0);
        let at_mid: f64 = interf
            .iter()
            .map(|t| t.term.evaluate(&[d / 2.0]).unwrap().re)
            .sum();
        let expect = 2.0 * (-d * d / (8.0 * sigma * sigma)).exp();
        assert!((at_mid - expect).abs() < 1e-14);
        let grid = Grid::new(-6.0, 6.0 + d, 2001).unwrap();
        let snap = snapshot(&cfg, 0.0, &grid).unwrap();
        let peak_idx = snap
            .interference
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert!((grid.point(peak_idx) - d / 2.0).abs() <= grid.spacing());
        assert!((snap.i_max * snap.grid_norm - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn normalized_and_partitioned() {
        let cfg = validate(presets::strong().0, presets::strong().1).unwrap();
        let grid = Grid::default();
        let snap = snapshot(&cfg, 2.505, &grid).unwrap();
        assert!((grid.trapezoid(&snap.rho) - 1.0).abs() < 1e-9);
        assert!(snap.rho.iter().all(|&r| r >= -1e-10));

        let reduced = reduced_terms_at(&cfg, 2.505).unwrap();
        let all = evaluate_on_grid(&reduced, &grid).unwrap();
        let scale = all.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
        let (diag, interf) = split_interference(&reduced, 0);
        let d = evaluate_on_grid(&diag, &grid).unwrap();
        let i = evaluate_on_grid(&interf, &grid).unwrap();
        for (k, v) in all.iter().enumerate() {
            assert!(v.im.abs() <= 1e-10 * scale);
            assert!((d[k] + i[k] - v).norm() <= 1e-12 * scale);
            assert!((snap.rho[k] * snap.grid_norm - v.re).abs() <= 1e-12 * scale);
            assert!((snap.interference[k] * snap.grid_norm - i[k].re).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn narrow_grid_rejected() {
        let cfg = single_cat(3.0, 0.5);
        let grid = Grid::new(-1.0, 1.0, 101).unwrap();
        assert!(matches!(
            snapshot(&cfg, 0.0, &grid),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn empty_series() {
        let cfg = single_cat(3.0, 0.5);
        assert!(interference_series(&cfg, &[], &Grid::default()).unwrap().is_empty());
    }

    #[test]
    fn series_is_time_ordered() {
        let cfg = single_cat(3.0, 0.5);
        let s = interference_series(&cfg, &[1.0, 0.5, 0.0], &Grid::default()).unwrap();
        assert_eq!(s.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    }
}
