//! Slow, independent cross-checks for the closed-form paths.
//!
//! Nothing in here is used by the simulation itself. Each routine solves the
//! same problem by brute force: tensor-product Simpson quadrature for Gaussian
//! integrals, Strang-split Fourier stepping for the Schrödinger equation, and
//! classical Runge-Kutta for the trajectories.

mod quadrature;
mod rk4;
mod split_operator;

pub use quadrature::{quad_integrate, quad_integrate_fn, QuadratureSpec};
pub use rk4::{rk4_trajectories, Rk4Output};
pub use split_operator::{grid_evolve, network_potential, Axis, GridState};
