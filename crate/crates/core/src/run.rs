//! The simulation pipeline and its CSV/summary artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classical::{
    branch_report, correlate, evolve_ensemble, time_grid, BranchReport, CorrelationSummary,
    TrajectoryEnsemble,
};
use crate::config::{RunConfig, ECHO_MARKER};
use crate::error::{Error, Result};
use crate::model::{validate, OscillatorNetwork, PacketLabel, ValidatedConfig};
use crate::reduced_density::{snapshot, Grid, ReducedSnapshot};

pub const SUMMARY_FORMAT: &str = "v1";

/// Everything a full run computes, before it is written out.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub snapshots: Vec<ReducedSnapshot>,
    /// `(t, i_max)` on the fine grid merged with every crossing time.
    pub series: Vec<(f64, f64)>,
    /// Same times for the network with the system particle detached.
    pub baseline_series: Vec<(f64, f64)>,
    pub ensemble: TrajectoryEnsemble,
    pub branches: BranchReport,
    pub correlation: CorrelationSummary,
    pub baseline_correlation: CorrelationSummary,
}

impl RunResult {
    /// Time-averaged `i_max` relative to the detached baseline.
    pub fn interference_retention(&self) -> f64 {
        self.correlation.mean_i_max / self.baseline_correlation.mean_i_max
    }

    /// Mean over crossings of `i_max / i_max_baseline` at the same time.
    pub fn crossing_retention(&self) -> f64 {
        let c = &self.correlation.at_crossings;
        let b = &self.baseline_correlation.at_crossings;
        if c.is_empty() {
            return f64::NAN;
        }
        c.iter().zip(b).map(|(c, b)| c.i_max / b.i_max).sum::<f64>() / c.len() as f64
    }

    /// Relative spread of the closed-form norm across snapshot times.
    pub fn norm_drift(&self) -> f64 {
        norm_drift(&self.snapshots)
    }
}

/// `(max − min) / max` of the closed-form reduced-density norm.
pub fn norm_drift(snapshots: &[ReducedSnapshot]) -> f64 {
    let norms: Vec<f64> = snapshots.iter().map(|s| s.analytic_norm).collect();
    let hi = norms.iter().copied().fold(f64::MIN, f64::max);
    let lo = norms.iter().copied().fold(f64::MAX, f64::min);
    if norms.is_empty() {
        0.0
    } else {
        (hi - lo) / hi.abs()
    }
}

/// The same network with every spring to the system particle removed.
pub fn detached(network: &OscillatorNetwork) -> OscillatorNetwork {
    let mut net = network.clone();
    let s = net.system_index;
    for j in 0..net.n() {
        net.coupling_k[s][j] = 0.0;
        net.coupling_k[j][s] = 0.0;
    }
    net
}

/// Caps the global rayon pool from `CATBRANCH_THREADS`, if set. Only the
/// first call has any effect.
pub fn init_threads_from_env() {
    if let Some(n) = std::env::var("CATBRANCH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn with_time(t: f64, e: Error) -> Error {
    match e {
        Error::NotNormalizable(msg) => Error::NotNormalizable(format!("t = {t}: {msg}")),
        Error::SingularBlock(p) => Error::NotNormalizable(format!("t = {t}: singular block at pivot {p}")),
        other => other,
    }
}

fn snapshots_at(cfg: &ValidatedConfig, times: &[f64], grid: &Grid) -> Result<Vec<ReducedSnapshot>> {
    times
        .par_iter()
        .map(|&t| snapshot(cfg, t, grid).map_err(|e| with_time(t, e)))
        .collect()
}

fn series_at(cfg: &ValidatedConfig, times: &[f64], grid: &Grid) -> Result<Vec<(f64, f64)>> {
    Ok(snapshots_at(cfg, times, grid)?.into_iter().map(|s| (s.t, s.i_max)).collect())
}

/// Classical ensemble and branching report on the configured time grid.
pub fn classical_only(config: &RunConfig) -> Result<(TrajectoryEnsemble, BranchReport)> {
    let cfg = config.validated()?;
    let ens = evolve_ensemble(&cfg, &time_grid(config.classical_dt, config.t_end))?;
    let report = branch_report(&ens);
    Ok((ens, report))
}

/// Runs the full pipeline without touching the filesystem.
pub fn compute(config: &RunConfig) -> Result<RunResult> {
    let cfg = config.validated()?;
    let base = validate(detached(&config.network), config.cat.clone())?;
    let grid = &config.grid;

    let snapshots = snapshots_at(&cfg, &config.snapshot_times, grid)?;
    let (ensemble, branches) = classical_only(config)?;

    let mut times = time_grid(config.series_dt, config.t_end);
    times.extend(branches.crossings.iter().map(|c| c.t));
    times.sort_by(f64::total_cmp);
    times.dedup();

    let series = series_at(&cfg, &times, grid)?;
    let baseline_series = series_at(&base, &times, grid)?;
    let correlation = correlate(&branches, &series)?;
    let baseline_correlation = correlate(&branches, &baseline_series)?;
    Ok(RunResult {
        snapshots,
        series,
        baseline_series,
        ensemble,
        branches,
        correlation,
        baseline_correlation,
    })
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn label_header(system_index: usize, labels: &[PacketLabel]) -> String {
    labels
        .iter()
        .map(|l| format!(",x{}_{l}", system_index + 1))
        .collect()
}

pub fn snapshots_csv(system_index: usize, snaps: &[ReducedSnapshot]) -> String {
    let mut s = format!("t,x{},rho,interference,interference_abs\n", system_index + 1);
    for snap in snaps {
        let t = f(snap.t);
        for (i, x) in snap.grid.points().into_iter().enumerate() {
            let _ = writeln!(
                s,
                "{t},{},{},{},{}",
                f(x),
                f(snap.rho[i]),
                f(snap.interference[i]),
                f(snap.interference[i].abs())
            );
        }
    }
    s
}

pub fn imax_csv(series: &[(f64, f64)]) -> String {
    let mut s = String::from("t,i_max\n");
    for &(t, v) in series {
        let _ = writeln!(s, "{},{}", f(t), f(v));
    }
    s
}

pub fn classical_csv(ens: &TrajectoryEnsemble) -> String {
    let mut s = format!("t{}\n", label_header(ens.system_index, &ens.labels));
    for (k, &t) in ens.times.iter().enumerate() {
        s.push_str(&f(t));
        for row in &ens.x_sys {
            s.push(',');
            s.push_str(&f(row[k]));
        }
        s.push('\n');
    }
    s
}

pub fn branching_csv(report: &BranchReport) -> String {
    let mut s = String::from("t,B,diameter_g0,diameter_g1,rms,min_diameter\n");
    for b in &report.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            f(b.t),
            f(b.b),
            f(b.diameters[0]),
            f(b.diameters[1]),
            f(b.rms),
            f(b.min_diameter)
        );
    }
    s
}

/// Crossings with interference, or without it for classical-only runs.
pub fn crossings_csv(report: &BranchReport, correlation: Option<&CorrelationSummary>) -> String {
    let mut s = match correlation {
        Some(_) => String::from("t_star,label_j,label_k,i_max_at_t,B_at_t\n"),
        None => String::from("t_star,label_j,label_k,B_at_t\n"),
    };
    for (i, c) in report.crossings.iter().enumerate() {
        match correlation {
            Some(corr) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    f(c.t),
                    c.j,
                    c.k,
                    f(corr.at_crossings[i].i_max),
                    f(c.b)
                );
            }
            None => {
                let _ = writeln!(s, "{},{},{},{}", f(c.t), c.j, c.k, f(c.b));
            }
        }
    }
    s
}

pub fn summary_txt(config: &RunConfig, result: &RunResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "catbranch summary");
    let _ = writeln!(s, "format = {SUMMARY_FORMAT}");
    let _ = writeln!(s, "preset = {}", config.preset.as_deref().unwrap_or("none"));
    let _ = writeln!(s, "particles = {}", config.network.n());
    let _ = writeln!(s, "system_particle = {}", config.network.system_index + 1);
    let cfg = config.validated().expect("validated before the run");
    let omegas: Vec<String> = cfg.basis().omegas().into_iter().map(f).collect();
    let _ = writeln!(s, "mode_frequencies = {}", omegas.join(", "));
    let _ = writeln!(s, "snapshot_count = {}", result.snapshots.len());
    let _ = writeln!(s, "norm_drift = {}", f(result.norm_drift()));
    let _ = writeln!(s, "series_points = {}", result.series.len());
    let _ = writeln!(s, "mean_i_max = {}", f(result.correlation.mean_i_max));
    let _ = writeln!(s, "baseline_mean_i_max = {}", f(result.baseline_correlation.mean_i_max));
    let _ = writeln!(s, "interference_retention = {}", f(result.interference_retention()));
    let _ = writeln!(s, "mean_B = {}", f(result.branches.mean_b));
    let _ = writeln!(s, "crossings = {}", result.branches.crossing_count());
    let _ = writeln!(s, "mean_i_max_at_crossings = {}", f(result.correlation.mean_i_max_at_crossings()));
    let _ = writeln!(
        s,
        "baseline_mean_i_max_at_crossings = {}",
        f(result.baseline_correlation.mean_i_max_at_crossings())
    );
    let _ = writeln!(s, "crossing_retention = {}", f(result.crossing_retention()));
    let _ = writeln!(s, "mean_B_at_crossings = {}", f(result.correlation.mean_b_at_crossings()));
    let _ = writeln!(s, "{ECHO_MARKER}");
    s.push_str(&config.to_config_text());
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn output_dir(config: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Full run: computes everything, then writes the six artifacts. `out`
/// overrides the configured output directory.
pub fn run(config: &RunConfig, out: Option<&Path>) -> Result<RunResult> {
    let result = compute(config)?;
    let dir = output_dir(config, out);
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let sys = config.network.system_index;
    write(&dir, "snapshots.csv", &snapshots_csv(sys, &result.snapshots))?;
    write(&dir, "imax.csv", &imax_csv(&result.series))?;
    write(&dir, "classical.csv", &classical_csv(&result.ensemble))?;
    write(&dir, "branching.csv", &branching_csv(&result.branches))?;
    write(&dir, "crossings.csv", &crossings_csv(&result.branches, Some(&result.correlation)))?;
    write(&dir, "summary.txt", &summary_txt(config, &result))?;
    Ok(result)
}

/// Classical part only: `classical.csv`, `branching.csv`, `crossings.csv`.
pub fn run_classical(config: &RunConfig, out: Option<&Path>) -> Result<BranchReport> {
    let (ens, report) = classical_only(config)?;
    let dir = output_dir(config, out);
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write(&dir, "classical.csv", &classical_csv(&ens))?;
    write(&dir, "branching.csv", &branching_csv(&report))?;
    write(&dir, "crossings.csv", &crossings_csv(&report, None))?;
    Ok(report)
}
