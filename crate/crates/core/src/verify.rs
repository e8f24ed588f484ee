//! Named cross-checks of the closed-form pipeline against independent
//! brute-force oracles.

use std::fmt;

use num_complex::Complex64;

use crate::classical::{evolve_ensemble, time_grid};
use crate::config::RunConfig;
use crate::error::Result;
use crate::gaussian::{evaluate_sum, LabeledTerm};
use crate::model::{potential_matrix, validate, CatSpec, OscillatorNetwork, PacketLabel, ValidatedConfig};
use crate::normal_modes::mass_weighted;
use crate::oracle::{grid_evolve, network_potential, quad_integrate_fn, rk4_trajectories, Axis, GridState, QuadratureSpec};
use crate::propagation::{build_initial_terms, evolve_state};
use crate::reduced_density::{
    density_pair_terms, evaluate_on_grid, reduce, reduced_terms_at, snapshot, split_interference, wave_terms_at,
    Grid,
};
use crate::run::norm_drift;

pub const EIGEN_TOL: f64 = 1e-12;
pub const GROUP_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-8;
pub const EHRENFEST_TOL: f64 = 1e-8;
pub const PARTITION_TOL: f64 = 1e-12;
pub const QUADRATURE_TOL: f64 = 1e-6;
pub const RK4_TOL: f64 = 1e-6;
pub const SPLIT_1D_TOL: f64 = 1e-6;
pub const SPLIT_3D_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn measure(name: &'static str, value: Result<f64>, tolerance: f64) -> Check {
        match value {
            Ok(v) => Check {
                name,
                value: v,
                tolerance,
                passed: v <= tolerance,
                detail: String::new(),
            },
            Err(e) => Check {
                name,
                value: f64::NAN,
                tolerance,
                passed: false,
                detail: e.to_string(),
            },
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {:<24} {:.3e} (tol {:.0e})", self.name, self.value, self.tolerance)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Also run the (slow) three-dimensional split-operator comparison.
    pub grid3d: bool,
}

/// `max ‖W o_α − ω²_α o_α‖∞`.
pub fn eigen_residual(cfg: &ValidatedConfig) -> Result<f64> {
    let net = cfg.network();
    let w = mass_weighted(&potential_matrix(net), &net.masses)?;
    let basis = cfg.basis();
    let mut worst = 0.0f64;
    for a in 0..basis.n() {
        let col = basis.o.column(a);
        let r = &w * col - col * basis.omega2[a];
        worst = worst.max(r.amax());
    }
    Ok(worst)
}

/// Largest parameter difference between evolving `0 → t1 → t2` and `0 → t2`.
pub fn group_property_error(cfg: &ValidatedConfig, t1: f64, t2: f64) -> Result<f64> {
    let init = build_initial_terms(cfg);
    let basis = cfg.basis();
    let direct = evolve_state(&init, basis, cfg.hbar(), t2)?;
    let mid = evolve_state(&init, basis, cfg.hbar(), t1)?;
    let two = evolve_state(&mid, basis, cfg.hbar(), t2 - t1)?;
    Ok(direct
        .iter()
        .zip(&two)
        .map(|(a, b)| a.term.max_param_diff(&b.term))
        .fold(0.0, f64::max))
}

/// Relative spread of the closed-form reduced-density norm over `times`.
pub fn norm_drift_at(cfg: &ValidatedConfig, times: &[f64], grid: &Grid) -> Result<f64> {
    let snaps = times
        .iter()
        .map(|&t| snapshot(cfg, t, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(norm_drift(&snaps))
}

/// Largest distance between the centroid of each `|G_j|²` reduced term and
/// the classical system trajectory of label `j`.
pub fn ehrenfest_error(cfg: &ValidatedConfig, times: &[f64]) -> Result<f64> {
    let ens = evolve_ensemble(cfg, times)?;
    let mut worst = 0.0f64;
    for (s, &t) in times.iter().enumerate() {
        let reduced = reduced_terms_at(cfg, t)?;
        for term in reduced.iter().filter(|r| r.bra == r.ket) {
            let centroid = term.term.centroid()?[0];
            let classical = ens.x_sys[term.ket.index()][s];
            worst = worst.max((centroid - classical).abs());
        }
    }
    Ok(worst)
}

/// `max |diag + interference − total| / max |total|` on the grid, with the
/// total evaluated from the unsplit term list.
pub fn partition_error(cfg: &ValidatedConfig, t: f64, grid: &Grid) -> Result<f64> {
    let reduced = reduced_terms_at(cfg, t)?;
    let total = evaluate_on_grid(&reduced, grid)?;
    let (diag, interf) = split_interference(&reduced, cfg.system_index());
    let d = evaluate_on_grid(&diag, grid)?;
    let i = evaluate_on_grid(&interf, grid)?;
    let peak = total.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let worst = (0..grid.count)
        .map(|k| (d[k] + i[k] - total[k]).norm())
        .fold(0.0, f64::max);
    Ok(worst / peak)
}

/// Closed-form marginals of a few density pair terms against tensor Simpson
/// over the environment coordinates, at several system positions. Returns
/// the largest error relative to `∫|g|` over the same box. Needs at least
/// two particles.
pub fn marginal_quadrature_error(cfg: &ValidatedConfig, t: f64, points: usize) -> Result<f64> {
    let n = cfg.n();
    let sys = cfg.system_index();
    let wave = wave_terms_at(cfg, t)?;
    let pairs = density_pair_terms(&wave)?;
    let reduced = reduce(&pairs, sys)?;
    // a diagonal term, a system-interference term and one mixing everything
    let last = pairs.len() - 1;
    let picks = [0, 1usize << (n - 1 - sys), last / 3, last];
    let env: Vec<usize> = (0..n).filter(|&i| i != sys).collect();
    let mut worst = 0.0f64;
    for &p in &picks {
        let full = &pairs[p].term;
        let closed = &reduced[p].term;
        let centre = full.centroid()?[sys];
        for dx in [-1.5, -0.5, 0.0, 0.4, 1.2] {
            let x_sys = centre + dx;
            let exact = closed.exponent(&[x_sys])?.exp();
            // box around the peak of |g| in the environment variables
            let re_a = full.a.re();
            let sub: Vec<Vec<f64>> = env.iter().map(|&i| env.iter().map(|&j| re_a[(i, j)]).collect()).collect();
            let rhs: Vec<f64> = env.iter().map(|&e| full.b[e].re - re_a[(e, sys)] * x_sys).collect();
            let centre_env = solve_small(&sub, &rhs);
            let half = (2.0 * 40.0 / min_eigen(&sub)).sqrt();
            let spec = QuadratureSpec::new(
                centre_env.iter().map(|&c| (c - half, c + half, points)).collect(),
            )?;
            let point = |y: &[f64]| {
                let mut x = vec![0.0; n];
                x[sys] = x_sys;
                for (k, &e) in env.iter().enumerate() {
                    x[e] = y[k];
                }
                full.exponent(&x).map(|v| v.exp()).unwrap_or(Complex64::new(f64::NAN, 0.0))
            };
            let value = quad_integrate_fn(point, &spec)?;
            // interference terms can cancel to 1e-12 of ∫|g|, below what any
            // double-precision quadrature resolves, so scale by ∫|g|
            let scale = quad_integrate_fn(|y| Complex64::new(point(y).norm(), 0.0), &spec)?.re;
            worst = worst.max((value - exact).norm() / scale);
        }
    }
    Ok(worst)
}

fn solve_small(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let v = nalgebra::DVector::from_column_slice(b);
    m.lu().solve(&v).map(|x| x.iter().copied().collect()).unwrap_or_else(|| vec![0.0; n])
}

fn min_eigen(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest `|x_RK4 − x_exact|` over every particle, label and recorded time.
pub fn rk4_error(cfg: &ValidatedConfig, dt: f64, t_end: f64) -> Result<f64> {
    let labels = PacketLabel::all(cfg.n());
    let record = ((0.05 / dt).round() as usize).max(1);
    let out = rk4_trajectories(cfg, &labels, dt, t_end, record)?;
    let ens = evolve_ensemble(cfg, &[])?;
    let mut worst = 0.0f64;
    for (j, _) in labels.iter().enumerate() {
        for (s, &t) in out.times.iter().enumerate() {
            let (x, _) = ens.state(j, t);
            for i in 0..cfg.n() {
                worst = worst.max((out.x[j][s][i] - x[i]).abs());
            }
        }
    }
    Ok(worst)
}

/// Periodic box per particle covering every classical path over `[0, t]`
/// with a margin of `10σ + 1`.
fn oracle_axes(cfg: &ValidatedConfig, t_max: f64, points: usize) -> Result<Vec<Axis>> {
    let n = cfg.n();
    let times = time_grid((t_max / 400.0).max(1e-3), t_max);
    let ens = evolve_ensemble(cfg, &times)?;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for j in 0..ens.labels.len() {
        for &t in &times {
            let (x, _) = ens.state(j, t);
            for i in 0..n {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
    }
    let net = cfg.network();
    Ok((0..n)
        .map(|i| {
            let margin = 10.0 * cfg.cat().sigma[i] + 1.0;
            Axis::covering(lo[i] - margin, hi[i] + margin, points, net.masses[i])
        })
        .collect())
}

/// Split-operator evolution of the full cat state on a `points^n` grid,
/// compared with the closed-form reduced density of the system particle at
/// each of `times` (ascending). Returns the largest relative L∞ error.
pub fn split_operator_error(cfg: &ValidatedConfig, times: &[f64], points: usize, dt_max: f64) -> Result<f64> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let axes = oracle_axes(cfg, t_max, points)?;
    let init = build_initial_terms(cfg);
    let mut state = GridState::from_fn(axes.clone(), |x| {
        evaluate_sum(&init, x).unwrap_or(Complex64::new(f64::NAN, 0.0))
    });
    let potential = network_potential(&axes, &potential_matrix(cfg.network()));
    let sys = cfg.system_index();
    let xs: Vec<f64> = (0..axes[sys].count).map(|i| axes[sys].point(i)).collect();
    let mut now = 0.0;
    let mut worst = 0.0f64;
    for &t in times {
        let leg = t - now;
        if leg > 0.0 {
            let steps = (leg / dt_max).ceil() as usize;
            state = grid_evolve(&state, &potential, cfg.hbar(), leg, steps)?;
            now = t;
        }
        let grid_rho = state.marginal_density(sys);
        let reduced = reduced_terms_at(cfg, t)?;
        let exact: Vec<f64> = xs
            .iter()
            .map(|&x| sum_real(&reduced, x))
            .collect::<Result<_>>()?;
        let peak = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = grid_rho
            .iter()
            .zip(&exact)
            .map(|(g, e)| (g - e).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err / peak);
    }
    Ok(worst)
}

fn sum_real(terms: &[LabeledTerm], x: f64) -> Result<f64> {
    Ok(evaluate_sum(terms, &[x])?.re)
}

/// The system particle alone in its external well, as a one-particle cat.
pub fn isolated_system(cfg: &ValidatedConfig) -> Result<ValidatedConfig> {
    let net = cfg.network();
    let s = cfg.system_index();
    let k = net.external_k[s];
    let single = OscillatorNetwork::unconnected(vec![net.masses[s]]).with_external(0, k);
    let cat = CatSpec {
        d: vec![cfg.cat().d[s]],
        sigma: vec![cfg.cat().sigma[s]],
        hbar: cfg.hbar(),
    };
    validate(single, cat)
}

/// One oscillation period of the isolated system particle (1 if it is free).
pub fn system_period(cfg: &ValidatedConfig) -> f64 {
    let net = cfg.network();
    let s = cfg.system_index();
    let omega = (net.external_k[s] / net.masses[s]).sqrt();
    if omega > 0.0 {
        2.0 * std::f64::consts::PI / omega
    } else {
        1.0
    }
}

/// The 1-D cat in the system's own well, over one period at quarter steps.
pub fn split_operator_1d_error(cfg: &ValidatedConfig) -> Result<f64> {
    let single = isolated_system(cfg)?;
    let period = system_period(cfg);
    let times: Vec<f64> = (1..=4).map(|k| period * k as f64 / 4.0).collect();
    split_operator_error(&single, &times, 4096, period / 40_000.0)
}

/// Runs every check for `config`.
pub fn verify(config: &RunConfig, options: VerifyOptions) -> Result<VerifyReport> {
    let cfg = config.validated()?;
    let grid = &config.grid;
    let times = &config.snapshot_times;
    let first = times.first().copied().unwrap_or(0.5);
    let last = times.last().copied().unwrap_or(1.0);
    let mut checks = vec![
        Check::measure("eigen_residual", eigen_residual(&cfg), EIGEN_TOL),
        Check::measure("group_property", group_property_error(&cfg, first, last.max(first + 0.5)), GROUP_TOL),
        Check::measure("norm_conservation", norm_drift_at(&cfg, times, grid), NORM_TOL),
        Check::measure("ehrenfest_centroids", ehrenfest_error(&cfg, times), EHRENFEST_TOL),
        Check::measure("density_partition", partition_error(&cfg, first, grid), PARTITION_TOL),
    ];
    if cfg.n() >= 2 && cfg.n() <= 4 {
        let points = if cfg.n() == 2 { 2001 } else if cfg.n() == 3 { 801 } else { 101 };
        checks.push(Check::measure(
            "marginal_vs_quadrature",
            marginal_quadrature_error(&cfg, first, points),
            QUADRATURE_TOL,
        ));
    }
    checks.push(Check::measure("rk4_vs_analytic", rk4_error(&cfg, 1e-4, config.t_end), RK4_TOL));
    checks.push(Check::measure("split_operator_1d", split_operator_1d_error(&cfg), SPLIT_1D_TOL));
    if options.grid3d && cfg.n() <= 3 {
        checks.push(Check::measure(
            "split_operator_full",
            split_operator_error(&cfg, &[1.005f64.min(config.t_end.max(0.1))], 128, 1.005 / 256.0),
            SPLIT_3D_TOL,
        ));
    }
    Ok(VerifyReport { checks })
}
