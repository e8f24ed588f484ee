//! Exact time evolution of Gaussian terms under a quadratic Hamiltonian.
//!
//! In mode coordinates the Hamiltonian is `Σ_α ½p_α² + ½ω_α² q_α²`. Its
//! classical flow over time `t` is the block-diagonal symplectic map
//!
//! ```text
//! [q]    [ cos ωt      sin ωt / ω ] [q]
//! [p] ←  [ −ω sin ωt   cos ωt     ] [p]
//! ```
//!
//! and a Gaussian `exp(c + bᵀq − ½qᵀAq)` stays Gaussian. With `Z₀ = iħA₀`,
//! `Q = C + S Z₀` and `P = D + C Z₀` (`C`, `S`, `D` the diagonal blocks
//! above), the evolved parameters are
//!
//! ```text
//! A = −(i/ħ) P Q⁻¹
//! b = Q⁻ᵀ b₀
//! c = c₀ + (iħ/2) b₀ᵀ Q⁻¹ S b₀ − ½ ln det Q
//! ```
//!
//! `Q` is invertible for every `t` when `Re(A₀)` is positive definite, so
//! nothing blows up at `sin ωt = 0`. The branch of `ln det Q` is the one
//! continuous in `t` starting from `ln det Q(0) = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{ComplexGaussianTerm, LabeledTerm};
use crate::model::{PacketLabel, ValidatedConfig};
use crate::normal_modes::NormalModeBasis;
use crate::symmetric::{SymFactor, SymMatrix};

/// Below this `|ωt|` the trigonometric blocks switch to Taylor series.
pub const SMALL_PHASE: f64 = 1e-6;

/// Informational `|sin ωt|` threshold for [`Regime::NearCaustic`].
pub const CAUSTIC_TOL: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Oscillator,
    Free,
    /// `sin ωt ≈ 0`; the update formulas are unchanged there.
    NearCaustic,
}

/// Per-mode propagator for a unit-mass oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKernel {
    pub omega: f64,
    pub hbar: f64,
    pub t: f64,
    pub regime: Regime,
}

impl ModeKernel {
    pub fn new(omega: f64, hbar: f64, t: f64) -> Result<Self> {
        check_time(t)?;
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidTime(format!("mode frequency {omega} is not valid")));
        }
        let regime = if omega == 0.0 {
            Regime::Free
        } else if (omega * t).sin().abs() < CAUSTIC_TOL && t > 0.0 {
            Regime::NearCaustic
        } else {
            Regime::Oscillator
        };
        Ok(ModeKernel {
            omega,
            hbar,
            t,
            regime,
        })
    }

    /// `(cos ωt, sin ωt / ω, −ω sin ωt)` evaluated at time `t`.
    pub fn blocks_at(&self, t: f64) -> (f64, f64, f64) {
        let w = self.omega;
        let x = w * t;
        if x.abs() < SMALL_PHASE {
            let x2 = x * x;
            let sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
            (1.0 - x2 / 2.0 + x2 * x2 / 24.0, t * sinc, -w * w * t * sinc)
        } else {
            let (s, c) = x.sin_cos();
            (c, s / w, -w * s)
        }
    }

    pub fn blocks(&self) -> (f64, f64, f64) {
        self.blocks_at(self.t)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTime(format!("t = {t} must be finite and non-negative")))
    }
}

/// Kernels for every mode of `basis` at time `t`.
pub fn mode_kernels(basis: &NormalModeBasis, hbar: f64, t: f64) -> Result<Vec<ModeKernel>> {
    (0..basis.n())
        .map(|a| ModeKernel::new(basis.omega(a), hbar, t))
        .collect()
}

/// Everything in the update that depends only on `A₀`, shared by all terms
/// with the same quadratic part.
#[derive(Debug, Clone)]
pub struct PropagationPlan {
    hbar: f64,
    a0: SymMatrix,
    a_t: SymMatrix,
    q_inv: DMatrix<Complex64>,
    s_diag: Vec<f64>,
    log_det_q: Complex64,
}

impl PropagationPlan {
    pub fn new(a0: &SymMatrix, kernels: &[ModeKernel]) -> Result<Self> {
        let n = a0.n();
        if kernels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: kernels.len(),
            });
        }
        SymFactor::new(a0)?;
        let hbar = kernels.first().map_or(1.0, |k| k.hbar);
        let t = kernels.first().map_or(0.0, |k| k.t);

        let z0 = a0.to_dense() * (I * hbar);
        let blocks: Vec<(f64, f64, f64)> = kernels.iter().map(|k| k.blocks()).collect();
        let q = q_matrix(&z0, &blocks);
        let p = DMatrix::from_fn(n, n, |i, j| {
            let (c, _, d) = blocks[i];
            let diag = if i == j { Complex64::new(d, 0.0) } else { Complex64::new(0.0, 0.0) };
            diag + z0[(i, j)] * c
        });
        let lu = q.clone().lu();
        let q_inv = lu
            .try_inverse()
            .ok_or_else(|| Error::NotNormalizable("propagation matrix Q is singular".into()))?;
        let a_t = SymMatrix::from_symmetrized(&(p * &q_inv * (-I / hbar)));
        let log_det_q = continuous_log_det(&z0, kernels, t, q.lu().determinant())?;
        Ok(PropagationPlan {
            hbar,
            a0: a0.clone(),
            a_t,
            q_inv,
            s_diag: blocks.iter().map(|b| b.1).collect(),
            log_det_q,
        })
    }

    pub fn a0(&self) -> &SymMatrix {
        &self.a0
    }

    /// `ln det Q(t)` on the continuous branch.
    pub fn log_det_q(&self) -> Complex64 {
        self.log_det_q
    }

    pub fn apply(&self, term: &ComplexGaussianTerm) -> Result<ComplexGaussianTerm> {
        let n = self.a0.n();
        if term.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: term.dim(),
            });
        }
        if term.a != self.a0 {
            return Err(Error::NotNormalizable(
                "term quadratic part does not match the propagation plan".into(),
            ));
        }
        let b0 = &term.b;
        // b = Q⁻ᵀ b₀
        let b: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|k| self.q_inv[(k, i)] * b0[k]).sum())
            .collect();
        // b₀ᵀ Q⁻¹ S b₀
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for k in 0..n {
                row += self.q_inv[(i, k)] * (self.s_diag[k] * b0[k]);
            }
            quad += b0[i] * row;
        }
        let c = term.c + I * (0.5 * self.hbar) * quad - 0.5 * self.log_det_q;
        Ok(ComplexGaussianTerm {
            c,
            b,
            a: self.a_t.clone(),
        })
    }
}

fn q_matrix(z0: &DMatrix<Complex64>, blocks: &[(f64, f64, f64)]) -> DMatrix<Complex64> {
    let n = z0.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let (c, s, _) = blocks[i];
        let diag = if i == j { Complex64::new(c, 0.0) } else { Complex64::new(0.0, 0.0) };
        diag + z0[(i, j)] * s
    })
}

/// `ln det Q(t)`, with the imaginary part followed continuously from `0` at
/// `t = 0` by sub-sampling `[0, t]` until no step turns the phase by more
/// than π/4, then snapped to the exact principal value of `det Q(t)` plus
/// the tracked multiple of 2π.
fn continuous_log_det(
    z0: &DMatrix<Complex64>,
    kernels: &[ModeKernel],
    t: f64,
    det_final: Complex64,
) -> Result<Complex64> {
    if det_final == Complex64::new(0.0, 0.0) || !det_final.re.is_finite() {
        return Err(Error::NotNormalizable("det Q vanished".into()));
    }
    if t == 0.0 {
        return Ok(det_final.ln());
    }
    let omega_max = kernels.iter().map(|k| k.omega).fold(0.0, f64::max);
    let z_max = z0.iter().map(|z| z.norm()).fold(0.0, f64::max) * z0.nrows() as f64;
    let rate = omega_max.max(z_max);
    let mut steps = ((t * rate / 0.25).ceil() as usize).max(1);
    const MAX_STEPS: usize = 1 << 24;

    loop {
        let mut prev = Complex64::new(1.0, 0.0);
        let mut phase = 0.0;
        let mut ok = true;
        for k in 1..=steps {
            let tau = t * k as f64 / steps as f64;
            let blocks: Vec<(f64, f64, f64)> = kernels.iter().map(|m| m.blocks_at(tau)).collect();
            let det = q_matrix(z0, &blocks).lu().determinant();
            let turn = (det / prev).arg();
            if !(turn.abs() <= PI / 4.0) {
                ok = false;
                break;
            }
            phase += turn;
            prev = det;
        }
        if ok {
            let principal = det_final.arg();
            let wraps = ((phase - principal) / (2.0 * PI)).round();
            return Ok(Complex64::new(det_final.norm().ln(), principal + 2.0 * PI * wraps));
        }
        steps *= 2;
        if steps > MAX_STEPS {
            return Err(Error::NotNormalizable(
                "could not track the phase of det Q".into(),
            ));
        }
    }
}

/// Evolves a term given in mode coordinates.
pub fn propagate_term(term: &ComplexGaussianTerm, kernels: &[ModeKernel]) -> Result<ComplexGaussianTerm> {
    PropagationPlan::new(&term.a, kernels)?.apply(term)
}

/// The `2^n` product terms of the initial cat state, in label order.
///
/// Particle `i` contributes `exp(−(x_i − μ_i)²/(4σ_i²))` with `μ_i = 0` or `d_i`
/// depending on the label bit; amplitudes are left unnormalized.
pub fn build_initial_terms(cfg: &ValidatedConfig) -> Vec<LabeledTerm> {
    let cat = cfg.cat();
    let n = cfg.n();
    PacketLabel::all(n)
        .into_iter()
        .map(|label| {
            let mut c = 0.0;
            let mut b = Vec::with_capacity(n);
            let mut diag = Vec::with_capacity(n);
            for i in 0..n {
                let mu = cat.center(&label, i);
                let s2 = cat.sigma[i] * cat.sigma[i];
                diag.push(Complex64::new(1.0 / (2.0 * s2), 0.0));
                b.push(Complex64::new(mu / (2.0 * s2), 0.0));
                c -= mu * mu / (4.0 * s2);
            }
            let term = ComplexGaussianTerm {
                c: Complex64::new(c, 0.0),
                b,
                a: SymMatrix::diagonal(&diag),
            };
            LabeledTerm::wavefunction(term, label)
        })
        .collect()
}

/// Evolves wavefunction terms (particle coordinates) from `0` to `t` in one
/// shot: change to modes, apply the exact per-mode update, change back.
pub fn evolve_state(
    terms: &[LabeledTerm],
    basis: &NormalModeBasis,
    hbar: f64,
    t: f64,
) -> Result<Vec<LabeledTerm>> {
    check_time(t)?;
    let kernels = mode_kernels(basis, hbar, t)?;
    let to_x = basis.from_mode_matrix();
    let to_q = basis.to_mode_matrix();
    let mut plans: Vec<PropagationPlan> = Vec::new();
    terms
        .iter()
        .map(|lt| {
            let in_modes = lt.term.substitute(&to_x)?;
            let plan = match plans.iter().position(|p| *p.a0() == in_modes.a) {
                Some(i) => &plans[i],
                None => {
                    plans.push(PropagationPlan::new(&in_modes.a, &kernels)?);
                    plans.last().unwrap()
                }
            };
            let evolved = plan.apply(&in_modes)?.substitute(&to_q)?;
            Ok(LabeledTerm {
                term: evolved,
                bra: lt.bra,
                ket: lt.ket,
            })
        })
        .collect()
}
