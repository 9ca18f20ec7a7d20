//! Point-particle clock along a linear-order geodesic.

use serde::Serialize;

use super::DynamicsError;
use crate::geometry::frame::frame_at;
use crate::geometry::{MetricModel, Point};

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalSample {
    pub t: f64,
    pub x: Point,
    pub v: [f64; 3],
    pub tau: f64,
    /// `dτ_cl/dt`
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalTrack {
    pub samples: Vec<ClassicalSample>,
}

impl ClassicalTrack {
    /// Linear interpolation of τ_cl at time `t`.
    pub fn tau_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        let i = s.partition_point(|p| p.t < t);
        if i == 0 {
            return s[0].tau;
        }
        if i >= s.len() {
            return s[s.len() - 1].tau;
        }
        let (a, b) = (&s[i - 1], &s[i]);
        a.tau + (b.tau - a.tau) * (t - a.t) / (b.t - a.t)
    }
}

/// State `(x, v, τ)`.
type Y = [f64; 7];

fn rhs(model: &MetricModel, free: [bool; 3], y: &Y) -> Result<Y, crate::geometry::GeometryError> {
    let x = [y[0], y[1], y[2]];
    let f = frame_at(model, &x)?;
    let u = [1.0, y[3], y[4], y[5]];
    // Γ^λ_{μν}u^μu^ν
    let quad = |l: usize| -> f64 {
        let mut s = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                s += f.christoffel[l][nu][mu] * u[mu] * u[nu];
            }
        }
        s
    };
    let g0 = quad(0);
    let mut out = [0.0; 7];
    out[..3].copy_from_slice(&y[3..6]);
    for i in 0..3 {
        out[3 + i] = if free[i] { -quad(i + 1) + g0 * y[3 + i] } else { 0.0 };
    }
    out[6] = rate(&f.metric, &u);
    Ok(out)
}

fn rate(g: &[[f64; 4]; 4], u: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            s += g[mu][nu] * u[mu] * u[nu];
        }
    }
    s.max(0.0).sqrt()
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Relative/absolute error target of the adaptive integrator.
pub const CLASSICAL_TOL: f64 = 1e-12;

/// Integrates the geodesic from `x0` with coordinate velocity `v0` for
/// `duration`, recording a sample every `sample_dt`.
pub fn classical_proper_time(
    model: &MetricModel,
    x0: Point,
    v0: [f64; 3],
    duration: f64,
    sample_dt: f64,
) -> Result<ClassicalTrack, DynamicsError> {
    classical_proper_time_constrained(model, x0, v0, duration, sample_dt, [true; 3])
}

/// As [`classical_proper_time`], with the acceleration along axes whose
/// `free` entry is false removed (the counterpart of a reduced grid).
pub fn classical_proper_time_constrained(
    model: &MetricModel,
    x0: Point,
    v0: [f64; 3],
    duration: f64,
    sample_dt: f64,
    free: [bool; 3],
) -> Result<ClassicalTrack, DynamicsError> {
    if !(duration >= 0.0 && sample_dt > 0.0) {
        return Err(DynamicsError::Config("classical track needs duration ≥ 0 and sample_dt > 0".into()));
    }
    let wrap = |t: f64| move |e| DynamicsError::TrackInadmissible { t, source: e };
    let mut y: Y = [x0[0], x0[1], x0[2], v0[0], v0[1], v0[2], 0.0];
    let record = |t: f64, y: &Y| -> Result<ClassicalSample, DynamicsError> {
        let x = [y[0], y[1], y[2]];
        let f = frame_at(model, &x).map_err(wrap(t))?;
        Ok(ClassicalSample { t, x, v: [y[3], y[4], y[5]], tau: y[6], rate: rate(&f.metric, &[1.0, y[3], y[4], y[5]]) })
    };
    let mut samples = vec![record(0.0, &y)?];
    let mut t = 0.0;
    let mut h = sample_dt.min(duration.max(sample_dt)) / 4.0;
    let n_samples = (duration / sample_dt).round() as usize;
    for j in 1..=n_samples {
        let target = (j as f64 * sample_dt).min(duration);
        while t < target {
            let hs = h.min(target - t);
            let mut k = [[0.0; 7]; 7];
            for s in 0..7 {
                let mut ys = y;
                for (r, kr) in k.iter().enumerate().take(s) {
                    for q in 0..7 {
                        ys[q] += hs * A[s][r] * kr[q];
                    }
                }
                k[s] = rhs(model, free, &ys).map_err(wrap(t + C[s] * hs))?;
            }
            let mut y5 = y;
            let mut err: f64 = 0.0;
            for q in 0..7 {
                let (mut d5, mut d4) = (0.0, 0.0);
                for s in 0..7 {
                    d5 += B5[s] * k[s][q];
                    d4 += B4[s] * k[s][q];
                }
                y5[q] += hs * d5;
                let scale = CLASSICAL_TOL * (1.0 + y[q].abs().max(y5[q].abs()));
                err = err.max((hs * (d5 - d4)).abs() / scale);
            }
            if err <= 1.0 {
                y = y5;
                t += hs;
            }
            h = hs * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        }
        samples.push(record(target, &y)?);
    }
    Ok(ClassicalTrack { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_field, Domain, FamilyParams};

    fn last_x(tr: &ClassicalTrack) -> Point {
        tr.samples.last().unwrap().x
    }

    #[test]
    fn flat_clock_is_special_relativistic() {
        let model = MetricModel::flat(Domain::cube(100.0));
        let v = [0.3, -0.2, 0.1];
        let tr = classical_proper_time(&model, [0.0; 3], v, 10.0, 1.0).unwrap();
        let v2: f64 = v.iter().map(|a| a * a).sum();
        for s in &tr.samples {
            assert!((s.tau - s.t * (1.0 - v2).sqrt()).abs() < 1e-12);
        }
        assert!((last_x(&tr)[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn static_clock_runs_at_lapse() {
        let model = make_field(&FamilyParams::PointMass { mass: 0.01, center: [0.0; 3] }, 1.0, Domain::cube(50.0), 0.05).unwrap();
        let tr = classical_proper_time(&model, [10.0, 0.0, 0.0], [0.0; 3], 0.5, 0.5).unwrap();
        let phi: f64 = -0.01 / 10.0;
        assert!((tr.samples[0].rate - (1.0 + 2.0 * phi).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn circular_orbit_rate() {
        let (mu, r) = (0.001, 20.0);
        let model = make_field(&FamilyParams::PointMass { mass: mu, center: [0.0; 3] }, 1.0, Domain::cube(50.0), 0.05).unwrap();
        let v = (mu / r).sqrt();
        let period = 2.0 * std::f64::consts::PI * r / v;
        let tr = classical_proper_time(&model, [r, 0.0, 0.0], [0.0, v, 0.0], period, period / 8.0).unwrap();
        // stays on the circle to linear order and the clock runs at 1 − 3μ/2r
        for s in &tr.samples {
            let rr = (s.x[0].powi(2) + s.x[1].powi(2)).sqrt();
            assert!((rr - r).abs() / r < 10.0 * mu, "radius drifted to {rr}");
        }
        let rate = tr.samples.last().unwrap().tau / period;
        assert!((rate - (1.0 - 1.5 * mu / r)).abs() < 10.0 * (mu / r).powi(2), "{rate}");
    }
}
