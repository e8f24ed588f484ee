use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{potential_matrix, PacketLabel, ValidatedConfig};

/// Sampled RK4 solutions, one per requested label.
#[derive(Debug, Clone)]
pub struct Rk4Output {
    pub labels: Vec<PacketLabel>,
    pub times: Vec<f64>,
    /// `x[label][sample]` positions of every particle.
    pub x: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<Vec<f64>>>,
}

fn accel(minv_v: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| -(0..n).map(|j| minv_v[(i, j)] * x[j]).sum::<f64>()).collect()
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// Classic fourth-order Runge-Kutta on `ẍ = −M⁻¹ V x` from the packet
/// centers at rest. The last step is shortened to land on `t_end`; states are
/// recorded every `record_every` steps and at the end.
pub fn rk4_trajectories(
    cfg: &ValidatedConfig,
    labels: &[PacketLabel],
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Rk4Output> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidTime(format!("dt = {dt}, t_end = {t_end}")));
    }
    let net = cfg.network();
    let n = net.n();
    let v = potential_matrix(net);
    let minv_v = DMatrix::from_fn(n, n, |i, j| v[(i, j)] / net.masses[i]);
    let record_every = record_every.max(1);

    let full_steps = (t_end / dt).floor() as usize;
    let tail = t_end - full_steps as f64 * dt;
    let mut steps: Vec<f64> = vec![dt; full_steps];
    if tail > 1e-12 * dt {
        steps.push(tail);
    }

    let mut times = vec![0.0];
    let mut t = 0.0;
    for (s, h) in steps.iter().enumerate() {
        t += h;
        if (s + 1) % record_every == 0 || s + 1 == steps.len() {
            times.push(if s + 1 == steps.len() { t_end } else { t });
        }
    }

    let mut xs = Vec::with_capacity(labels.len());
    let mut vs = Vec::with_capacity(labels.len());
    for label in labels {
        let mut x = cfg.cat().centers(label);
        let mut vel = vec![0.0; n];
        let mut rec_x = vec![x.clone()];
        let mut rec_v = vec![vel.clone()];
        for (s, &h) in steps.iter().enumerate() {
            let a1 = accel(&minv_v, &x);
            let x2 = axpy(&x, 0.5 * h, &vel);
            let v2 = axpy(&vel, 0.5 * h, &a1);
            let a2 = accel(&minv_v, &x2);
            let x3 = axpy(&x, 0.5 * h, &v2);
            let v3 = axpy(&vel, 0.5 * h, &a2);
            let a3 = accel(&minv_v, &x3);
            let x4 = axpy(&x, h, &v3);
            let v4 = axpy(&vel, h, &a3);
            let a4 = accel(&minv_v, &x4);
            for i in 0..n {
                x[i] += h / 6.0 * (vel[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
                vel[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            }
            if (s + 1) % record_every == 0 || s + 1 == steps.len() {
                rec_x.push(x.clone());
                rec_v.push(vel.clone());
            }
        }
        xs.push(rec_x);
        vs.push(rec_v);
    }
    Ok(Rk4Output {
        labels: labels.to_vec(),
        times,
        x: xs,
        v: vs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use crate::presets;

    #[test]
    fn energy_drift_small() {
        let (net, cat) = presets::strong();
        let cfg = validate(net.clone(), cat).unwrap();
        let labels = PacketLabel::all(3);
        let out = rk4_trajectories(&cfg, &labels, 1e-4, 6.005, 1000).unwrap();
        assert_eq!(*out.times.last().unwrap(), 6.005);
        for j in 0..labels.len() {
            let e = |s: usize| net.kinetic_energy(&out.v[j][s]) + net.potential_energy(&out.x[j][s]);
            let e0 = e(0);
            if e0 == 0.0 {
                continue;
            }
            let last = out.times.len() - 1;
            assert!(((e(last) - e0) / e0).abs() <= 1e-8);
        }
    }
}
