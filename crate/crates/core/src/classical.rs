//! The classical counterpart: one trajectory per packet label, started at the
//! packet centers with zero velocity, and measures of how trajectories that
//! share the system particle's starting point drift apart ("branching") and
//! where trajectories from different system starting points meet ("crossings").

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{PacketLabel, ValidatedConfig};

/// Crossing roots are refined until the bracket is narrower than this.
pub const CROSSING_TIME_TOL: f64 = 1e-9;
/// Roots of the same pair closer than this are merged.
pub const CROSSING_DEDUP: f64 = 1e-6;
/// Default sample spacing for crossing detection.
pub const DEFAULT_DT: f64 = 0.005;

/// Closed-form trajectories of every label, sampled on a time grid.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub labels: Vec<PacketLabel>,
    pub times: Vec<f64>,
    /// `x_sys[label][sample]`
    pub x_sys: Vec<Vec<f64>>,
    pub system_index: usize,
    modes: ModeSolution,
}

#[derive(Debug, Clone)]
struct ModeSolution {
    omega: Vec<f64>,
    // x = s q
    s: nalgebra::DMatrix<f64>,
    // initial mode amplitudes, one row per label
    q0: Vec<Vec<f64>>,
}

impl ModeSolution {
    fn position(&self, label: usize, t: f64, i: usize) -> f64 {
        let q0 = &self.q0[label];
        (0..self.omega.len())
            .map(|a| self.s[(i, a)] * q0[a] * (self.omega[a] * t).cos())
            .sum()
    }

    fn state(&self, label: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.omega.len();
        let q0 = &self.q0[label];
        let q: Vec<f64> = (0..n).map(|a| q0[a] * (self.omega[a] * t).cos()).collect();
        let qd: Vec<f64> = (0..n)
            .map(|a| -q0[a] * self.omega[a] * (self.omega[a] * t).sin())
            .collect();
        let x = (0..n).map(|i| (0..n).map(|a| self.s[(i, a)] * q[a]).sum()).collect();
        let v = (0..n).map(|i| (0..n).map(|a| self.s[(i, a)] * qd[a]).sum()).collect();
        (x, v)
    }
}

impl TrajectoryEnsemble {
    /// System-particle group of a label: which of its two packets it starts in.
    pub fn group(&self, label: usize) -> usize {
        self.labels[label].bit(self.system_index) as usize
    }

    /// Exact system coordinate of `label` at any time.
    pub fn position(&self, label: usize, t: f64) -> f64 {
        self.modes.position(label, t, self.system_index)
    }

    /// Exact positions and velocities of all particles.
    pub fn state(&self, label: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        self.modes.state(label, t)
    }
}

/// Evenly spaced times `0, dt, 2dt, …` up to and including `t_end`.
pub fn time_grid(dt: f64, t_end: f64) -> Vec<f64> {
    let steps = (t_end / dt).round() as usize;
    let mut v: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).filter(|&t| t <= t_end + 1e-12).collect();
    if v.last().map_or(true, |&l| (l - t_end).abs() > 1e-12) {
        v.push(t_end);
    } else if let Some(l) = v.last_mut() {
        *l = t_end;
    }
    v
}

pub fn evolve_ensemble(cfg: &ValidatedConfig, times: &[f64]) -> Result<TrajectoryEnsemble> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidTime(
            "ensemble times must be sorted and non-negative".into(),
        ));
    }
    let basis = cfg.basis();
    let n = cfg.n();
    let labels = PacketLabel::all(n);
    let q0 = labels
        .iter()
        .map(|l| basis.to_modes(&cfg.cat().centers(l)))
        .collect::<Result<Vec<_>>>()?;
    let modes = ModeSolution {
        omega: basis.omegas(),
        s: basis.from_mode_matrix(),
        q0,
    };
    let sys = cfg.system_index();
    let x_sys = (0..labels.len())
        .into_par_iter()
        .map(|j| times.iter().map(|&t| modes.position(j, t, sys)).collect())
        .collect();
    Ok(TrajectoryEnsemble {
        labels,
        times: times.to_vec(),
        x_sys,
        system_index: sys,
        modes,
    })
}

/// Spread of each system group at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchingSample {
    pub t: f64,
    /// Mean of the two within-group diameters.
    pub b: f64,
    /// `max |x_j − x_k|` within group 0 and group 1.
    pub diameters: [f64; 2],
    /// Root-mean-square distance from the group mean, averaged over groups.
    pub rms: f64,
    pub min_diameter: f64,
}

fn branching_at(values: &[f64], groups: &[usize], t: f64) -> BranchingSample {
    let mut diameters = [0.0; 2];
    let mut rms = [0.0; 2];
    for g in 0..2 {
        let members: Vec<f64> = values
            .iter()
            .zip(groups)
            .filter(|(_, &gg)| gg == g)
            .map(|(v, _)| *v)
            .collect();
        if members.is_empty() {
            continue;
        }
        let lo = members.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        diameters[g] = hi - lo;
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        rms[g] = (members.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / members.len() as f64).sqrt();
    }
    BranchingSample {
        t,
        b: 0.5 * (diameters[0] + diameters[1]),
        diameters,
        rms: 0.5 * (rms[0] + rms[1]),
        min_diameter: diameters[0].min(diameters[1]),
    }
}

/// `B(t)` on every sample of the ensemble.
pub fn branching_metric(ens: &TrajectoryEnsemble) -> Vec<BranchingSample> {
    let groups: Vec<usize> = (0..ens.labels.len()).map(|j| ens.group(j)).collect();
    ens.times
        .iter()
        .enumerate()
        .map(|(s, &t)| {
            let values: Vec<f64> = ens.x_sys.iter().map(|row| row[s]).collect();
            branching_at(&values, &groups, t)
        })
        .collect()
}

/// Exact `B` at an arbitrary time.
pub fn branching_at_time(ens: &TrajectoryEnsemble, t: f64) -> BranchingSample {
    let groups: Vec<usize> = (0..ens.labels.len()).map(|j| ens.group(j)).collect();
    let values: Vec<f64> = (0..ens.labels.len()).map(|j| ens.position(j, t)).collect();
    branching_at(&values, &groups, t)
}

/// Time where two trajectories from different system groups meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub j: PacketLabel,
    pub k: PacketLabel,
    /// Branching value at the crossing time.
    pub b: f64,
}

/// Sign changes of `x_j − x_k` between samples for every cross-group pair,
/// refined by bisection on the closed-form trajectories. Tangential touches
/// that do not change sign are not reported.
pub fn find_crossings(ens: &TrajectoryEnsemble) -> Vec<Crossing> {
    let m = ens.labels.len();
    let scale = ens
        .x_sys
        .iter()
        .flatten()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let zero_tol = 1e-12 * scale;

    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|j| ((j + 1)..m).map(move |k| (j, k)))
        .filter(|&(j, k)| ens.group(j) != ens.group(k))
        .collect();

    let mut out: Vec<Crossing> = pairs
        .par_iter()
        .flat_map_iter(|&(j, k)| {
            let diff = |t: f64| ens.position(j, t) - ens.position(k, t);
            let sign = |v: f64| {
                if v.abs() <= zero_tol {
                    0
                } else if v > 0.0 {
                    1
                } else {
                    -1
                }
            };
            let mut roots: Vec<f64> = Vec::new();
            let mut last: Option<(f64, i32)> = None;
            for (s, &t) in ens.times.iter().enumerate() {
                let v = ens.x_sys[j][s] - ens.x_sys[k][s];
                let sg = sign(v);
                if sg == 0 {
                    continue;
                }
                if let Some((t0, s0)) = last {
                    if s0 != sg {
                        let root = bisect(&diff, t0, t, s0);
                        if roots.last().map_or(true, |&r| root - r > CROSSING_DEDUP) {
                            roots.push(root);
                        }
                    }
                }
                last = Some((t, sg));
            }
            roots.into_iter().map(move |t| (t, j, k)).collect::<Vec<_>>()
        })
        .map(|(t, j, k)| Crossing {
            t,
            j: ens.labels[j],
            k: ens.labels[k],
            b: branching_at_time(ens, t).b,
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.j.cmp(&b.j)).then(a.k.cmp(&b.k)));
    out
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, sign_lo: i32) -> f64 {
    while hi - lo > CROSSING_TIME_TOL {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (sign_lo > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Branching curve, crossings and summaries of one ensemble.
#[derive(Debug, Clone)]
pub struct BranchReport {
    pub samples: Vec<BranchingSample>,
    pub crossings: Vec<Crossing>,
    pub mean_b: f64,
}

impl BranchReport {
    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }
}

pub fn branch_report(ens: &TrajectoryEnsemble) -> BranchReport {
    let samples = branching_metric(ens);
    let series: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.b)).collect();
    BranchReport {
        mean_b: time_average(&series),
        crossings: find_crossings(ens),
        samples,
    }
}

/// Trapezoidal time average of `(t, value)` pairs (sorted by `t`).
pub fn time_average(series: &[(f64, f64)]) -> f64 {
    match series {
        [] => f64::NAN,
        [(_, v)] => *v,
        _ => {
            let span = series[series.len() - 1].0 - series[0].0;
            let area: f64 = series
                .windows(2)
                .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
                .sum();
            if span > 0.0 {
                area / span
            } else {
                series[0].1
            }
        }
    }
}

/// Linear interpolation in a sorted `(t, value)` series, clamped at the ends.
pub fn interpolate(series: &[(f64, f64)], t: f64) -> f64 {
    let idx = series.partition_point(|p| p.0 < t);
    if idx == 0 {
        return series[0].1;
    }
    if idx >= series.len() {
        return series[series.len() - 1].1;
    }
    let (t0, v0) = series[idx - 1];
    let (t1, v1) = series[idx];
    if t1 == t0 {
        return v1;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingCorrelation {
    pub t: f64,
    pub j: PacketLabel,
    pub k: PacketLabel,
    pub i_max: f64,
    pub b: f64,
}

/// Interference and branching side by side at every crossing.
#[derive(Debug, Clone)]
pub struct CorrelationSummary {
    pub at_crossings: Vec<CrossingCorrelation>,
    pub mean_i_max: f64,
    pub mean_b: f64,
}

impl CorrelationSummary {
    /// Mean `i_max` over crossings, or NaN when there are none.
    pub fn mean_i_max_at_crossings(&self) -> f64 {
        if self.at_crossings.is_empty() {
            return f64::NAN;
        }
        self.at_crossings.iter().map(|c| c.i_max).sum::<f64>() / self.at_crossings.len() as f64
    }

    pub fn mean_b_at_crossings(&self) -> f64 {
        if self.at_crossings.is_empty() {
            return f64::NAN;
        }
        self.at_crossings.iter().map(|c| c.b).sum::<f64>() / self.at_crossings.len() as f64
    }
}

pub fn correlate(report: &BranchReport, interference: &[(f64, f64)]) -> Result<CorrelationSummary> {
    if interference.is_empty() {
        return Err(Error::EmptyInput("interference series".into()));
    }
    if report.samples.is_empty() {
        return Err(Error::EmptyInput("branching samples".into()));
    }
    let at_crossings = report
        .crossings
        .iter()
        .map(|c| CrossingCorrelation {
            t: c.t,
            j: c.j,
            k: c.k,
            i_max: interpolate(interference, c.t),
            b: c.b,
        })
        .collect();
    Ok(CorrelationSummary {
        at_crossings,
        mean_i_max: time_average(interference),
        mean_b: report.mean_b,
    })
}
