//! Physical configuration: a network of point masses joined by springs, with
//! optional springs tying individual particles to the origin, and the
//! two-packet ("cat") initial state of every particle.
//!
//! The potential energy of a configuration `x` is `½ xᵀ V x` where
//!
//! ```text
//! V_ii = K_i + Σ_j K_ij
//! V_ij = −K_ij            (i ≠ j)
//! ```
//!
//! with `K_i` the external spring on particle `i` and `K_ij` the spring
//! joining particles `i` and `j`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::normal_modes::{self, NormalModeBasis};

/// Default upper bound on the particle count. Term counts grow as `4^n`.
pub const DEFAULT_MAX_PARTICLES: usize = 8;

/// Default threshold on mode eigenvalues below which a mode is treated as free.
pub const DEFAULT_FREE_MODE_TOL: f64 = 1e-9;

/// Masses and springs of a linear oscillator network.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorNetwork {
    pub masses: Vec<f64>,
    /// Spring constant of the external harmonic potential acting on each particle.
    pub external_k: Vec<f64>,
    /// Symmetric pairwise spring constants with zero diagonal, row-major `n × n`.
    pub coupling_k: Vec<Vec<f64>>,
    /// Index of the observed particle; all others are traced out.
    pub system_index: usize,
}

impl OscillatorNetwork {
    /// A network with the given masses and no springs at all.
    pub fn unconnected(masses: Vec<f64>) -> Self {
        let n = masses.len();
        OscillatorNetwork {
            masses,
            external_k: vec![0.0; n],
            coupling_k: vec![vec![0.0; n]; n],
            system_index: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// Sets the symmetric spring between particles `i` and `j`.
    pub fn with_spring(mut self, i: usize, j: usize, k: f64) -> Self {
        self.coupling_k[i][j] = k;
        self.coupling_k[j][i] = k;
        self
    }

    pub fn with_external(mut self, i: usize, k: f64) -> Self {
        self.external_k[i] = k;
        self
    }

    /// Potential energy `Σ_i ½K_i x_i² + Σ_{i<j} ½K_ij (x_i − x_j)²`,
    /// summed term by term without going through the matrix.
    pub fn potential_energy(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut e = 0.0;
        for i in 0..n {
            e += 0.5 * self.external_k[i] * x[i] * x[i];
            for j in (i + 1)..n {
                let dx = x[i] - x[j];
                e += 0.5 * self.coupling_k[i][j] * dx * dx;
            }
        }
        e
    }

    pub fn kinetic_energy(&self, v: &[f64]) -> f64 {
        self.masses.iter().zip(v).map(|(m, v)| 0.5 * m * v * v).sum()
    }
}

/// Parameters of the initial two-packet state of every particle.
///
/// Particle `i` starts in `exp(−x²/(4σ_i²)) + exp(−(x − d_i)²/(4σ_i²))`
/// (unnormalized). The initial time is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CatSpec {
    /// Center of the second packet of each particle.
    pub d: Vec<f64>,
    /// Gaussian half-width of each packet.
    pub sigma: Vec<f64>,
    pub hbar: f64,
}

impl CatSpec {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Packet center of particle `i` under `label`.
    pub fn center(&self, label: &PacketLabel, i: usize) -> f64 {
        if label.bit(i) {
            self.d[i]
        } else {
            0.0
        }
    }

    /// All packet centers under `label`.
    pub fn centers(&self, label: &PacketLabel) -> Vec<f64> {
        (0..self.n()).map(|i| self.center(label, i)).collect()
    }
}

/// Chooses, for every particle, which of its two packets a product term uses.
///
/// Bit `i` clear means particle `i` sits in the packet at the origin, set means
/// the packet at `d_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketLabel {
    n: u8,
    // bit (n − 1 − i) holds particle i so that integer order is lexicographic
    code: u16,
}

impl PacketLabel {
    pub fn new(bits: &[bool]) -> Self {
        assert!(bits.len() <= 16, "at most 16 particles per label");
        let n = bits.len();
        let code = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u16, |acc, (i, _)| acc | 1 << (n - 1 - i));
        PacketLabel { n: n as u8, code }
    }

    /// The `index`-th label in lexicographic order, with particle 0 as the
    /// most significant digit.
    pub fn from_index(n: usize, index: usize) -> Self {
        assert!(n <= 16 && index < 1 << n);
        PacketLabel {
            n: n as u8,
            code: index as u16,
        }
    }

    /// All `2^n` labels in lexicographic order.
    pub fn all(n: usize) -> Vec<PacketLabel> {
        (0..1usize << n).map(|j| PacketLabel::from_index(n, j)).collect()
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn index(&self) -> usize {
        self.code as usize
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.n());
        (self.code >> (self.n() - 1 - i)) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n()).map(|i| self.bit(i)).collect()
    }
}

impl fmt::Display for PacketLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Knobs for [`validate_with`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub max_particles: usize,
    pub free_mode_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            max_particles: DEFAULT_MAX_PARTICLES,
            free_mode_tol: DEFAULT_FREE_MODE_TOL,
        }
    }
}

/// A network and initial state that passed [`validate`], together with the
/// normal-mode basis computed while checking stability.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    network: OscillatorNetwork,
    cat: CatSpec,
    basis: NormalModeBasis,
}

impl ValidatedConfig {
    pub fn network(&self) -> &OscillatorNetwork {
        &self.network
    }

    pub fn cat(&self) -> &CatSpec {
        &self.cat
    }

    pub fn basis(&self) -> &NormalModeBasis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.network.n()
    }

    pub fn system_index(&self) -> usize {
        self.network.system_index
    }

    pub fn hbar(&self) -> f64 {
        self.cat.hbar
    }
}

pub fn validate(network: OscillatorNetwork, cat: CatSpec) -> Result<ValidatedConfig> {
    validate_with(network, cat, ValidationOptions::default())
}

pub fn validate_with(
    network: OscillatorNetwork,
    cat: CatSpec,
    opts: ValidationOptions,
) -> Result<ValidatedConfig> {
    let n = network.n();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if n > opts.max_particles {
        return Err(Error::TooManyParticles {
            n,
            cap: opts.max_particles,
        });
    }
    for (len, _what) in [
        (network.external_k.len(), "external_k"),
        (network.coupling_k.len(), "coupling_k"),
        (cat.d.len(), "d"),
        (cat.sigma.len(), "sigma"),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    if let Some(row) = network.coupling_k.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: row.len(),
        });
    }
    if network.system_index >= n {
        return Err(Error::InvalidSystemIndex {
            index: network.system_index,
            n,
        });
    }
    for (i, &m) in network.masses.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::NegativeMass { index: i, value: m });
        }
    }
    for (i, &k) in network.external_k.iter().enumerate() {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::NegativeSpring {
                what: format!("external_k[{i}]"),
                value: k,
            });
        }
    }
    for i in 0..n {
        for j in 0..n {
            let kij = network.coupling_k[i][j];
            if i == j {
                if kij != 0.0 {
                    return Err(Error::NegativeSpring {
                        what: format!("coupling_k[{i}][{i}] (diagonal must be zero)"),
                        value: kij,
                    });
                }
                continue;
            }
            if !(kij >= 0.0 && kij.is_finite()) {
                return Err(Error::NegativeSpring {
                    what: format!("coupling_k[{i}][{j}]"),
                    value: kij,
                });
            }
            let kji = network.coupling_k[j][i];
            if kij != kji {
                return Err(Error::AsymmetricCoupling { i, j, kij, kji });
            }
        }
    }
    for (i, &s) in cat.sigma.iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::NonPositiveWidth { index: i, value: s });
        }
    }
    if !(cat.hbar > 0.0 && cat.hbar.is_finite()) {
        return Err(Error::NonPositiveHbar(cat.hbar));
    }
    if cat.d.iter().any(|d| !d.is_finite()) {
        return Err(Error::Validation("packet offsets must be finite".into()));
    }

    let v = potential_matrix(&network);
    let w = normal_modes::mass_weighted(&v, &network.masses)?;
    let basis = match normal_modes::eigendecompose(&w, &network.masses, opts.free_mode_tol) {
        Ok(b) => b,
        Err(Error::NegativeEigenvalue(e)) => {
            return Err(Error::IndefinitePotential { eigenvalue: e })
        }
        Err(e) => return Err(e),
    };
    Ok(ValidatedConfig {
        network,
        cat,
        basis,
    })
}

/// The symmetric matrix `V` with potential energy `½ xᵀ V x`.
pub fn potential_matrix(network: &OscillatorNetwork) -> DMatrix<f64> {
    let n = network.n();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            network.external_k[i] + network.coupling_k[i].iter().sum::<f64>()
        } else {
            -network.coupling_k[i][j]
        }
    })
}
