//! Exact simulation of two-packet ("cat") states in networks of coupled
//! harmonic oscillators, the reduced density of one observed particle, and the
//! classical trajectory ensemble that goes with it.
//!
//! The pipeline, bottom up:
//!
//! - [`model`]: masses, springs, initial packets; the potential matrix.
//! - [`normal_modes`]: mass-weighted Jacobi diagonalization.
//! - [`gaussian`]: closed-form algebra of complex Gaussian terms.
//! - [`propagation`]: exact evolution of Gaussian terms in time.
//! - [`reduced_density`]: tracing out the environment, interference metric.
//! - [`classical`]: trajectory ensemble, branching and crossings.
//! - [`oracle`]: brute-force cross-checks (quadrature, split-operator, RK4).
//! - [`config`], [`run`], [`verify`]: configuration files, CSV output and the
//!   checks behind the `catbranch` command-line tool.
//!
//! ```
//! use catbranch::{model, presets, reduced_density::{snapshot, Grid}};
//!
//! let (network, cat) = presets::weak();
//! let cfg = model::validate(network, cat)?;
//! let snap = snapshot(&cfg, 1.005, &Grid::default())?;
//! assert!(snap.i_max > 0.0);
//! # Ok::<(), catbranch::Error>(())
//! ```

pub mod classical;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod model;
pub mod normal_modes;
pub mod oracle;
pub mod presets;
pub mod propagation;
pub mod reduced_density;
pub mod run;
pub mod symmetric;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/normal-modes.md")]
    mod normal_modes {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/reduced-density.md")]
    mod reduced_density {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
