use super::trajectory::{Sample, Trajectory, Truncation};
use crate::error::{Error, Result};
use crate::geometry::{check_admissible, spray};
use crate::zoo::Lagrangian;

enum Stop {
    Left,
    Degenerate(String),
}

fn accel(l: &Lagrangian, x: &[f64], y: &[f64]) -> std::result::Result<Vec<f64>, Stop> {
    match spray(l, x, y, false) {
        Ok(s) => Ok(s.g2.into_iter().map(|v| -v).collect()),
        Err(Error::DegenerateMetric(m)) => Err(Stop::Degenerate(m)),
        Err(_) => Err(Stop::Left),
    }
}

fn shifted(base: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    base.iter().zip(k).map(|(b, k)| b + a * k).collect()
}

/// Classic RK4 on `ẋ = y, ẏ = −2G(x, y)` with a fixed step.
///
/// The number of steps is `⌈t_end / h⌉`; the step actually used is
/// `t_end / steps`. Leaving `A` or hitting a degenerate metric truncates
/// the trajectory and records why.
pub fn integrate_geodesic(l: &Lagrangian, x0: &[f64], y0: &[f64], t_end: f64, h: f64) -> Result<Trajectory> {
    check_admissible(l, x0, y0)?;
    if !(h > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::domain(format!("need h > 0 and t_end >= 0, got h={h}, t_end={t_end}")));
    }
    let steps = ((t_end / h) - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { h } else { t_end / steps as f64 };
    let l0 = l.value(x0, y0)?;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample {
        t: 0.0,
        x: x0.to_vec(),
        y: y0.to_vec(),
    });
    let mut truncation = None;
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for k in 1..=steps {
        let t = k as f64 * dt;
        let step = || -> std::result::Result<(Vec<f64>, Vec<f64>), Stop> {
            let kx1 = y.clone();
            let ky1 = accel(l, &x, &y)?;
            let (x2, y2) = (shifted(&x, &kx1, 0.5 * dt), shifted(&y, &ky1, 0.5 * dt));
            let ky2 = accel(l, &x2, &y2)?;
            let kx2 = y2;
            let (x3, y3) = (shifted(&x, &kx2, 0.5 * dt), shifted(&y, &ky2, 0.5 * dt));
            let ky3 = accel(l, &x3, &y3)?;
            let kx3 = y3;
            let (x4, y4) = (shifted(&x, &kx3, dt), shifted(&y, &ky3, dt));
            let ky4 = accel(l, &x4, &y4)?;
            let kx4 = y4;
            let comb = |b: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
                (0..b.len())
                    .map(|i| b[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            };
            let nx = comb(&x, &kx1, &kx2, &kx3, &kx4);
            let ny = comb(&y, &ky1, &ky2, &ky3, &ky4);
            if !l.admissible(&nx, &ny) {
                return Err(Stop::Left);
            }
            Ok((nx, ny))
        };
        match step() {
            Ok((nx, ny)) => {
                x = nx;
                y = ny;
                samples.push(Sample {
                    t,
                    x: x.clone(),
                    y: y.clone(),
                });
            }
            Err(Stop::Left) => {
                truncation = Some(Truncation::LeftAdmissibleSet { t });
                break;
            }
            Err(Stop::Degenerate(message)) => {
                truncation = Some(Truncation::DegenerateMetric { t, message });
                break;
            }
        }
    }
    Ok(Trajectory {
        samples,
        l0,
        h: dt,
        order: 4,
        truncation,
    })
}

/// `max_k |L(x_k, y_k) − L0|`. Samples where `L` cannot be evaluated
/// count as infinite drift.
pub fn energy_drift(traj: &Trajectory, l: &Lagrangian) -> f64 {
    traj.samples()
        .iter()
        .map(|s| match l.value(&s.x, &s.y) {
            Ok(v) => (v - traj.l0()).abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Move a timelike `y_time` to a null direction by bisection on the
/// segment towards a spacelike `y_space`. The result is normalized and
/// satisfies `|L| ≤ 1e-12`.
pub fn snap_null(l: &Lagrangian, x: &[f64], y_time: &[f64], y_space: &[f64]) -> Result<Vec<f64>> {
    check_admissible(l, x, y_time)?;
    check_admissible(l, x, y_space)?;
    let at = |s: f64| -> Vec<f64> {
        let v: Vec<f64> = y_time.iter().zip(y_space).map(|(a, b)| (1.0 - s) * a + s * b).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.into_iter().map(|c| c / norm).collect()
    };
    let val = |s: f64| -> Result<f64> {
        let y = at(s);
        if !l.admissible(x, &y) {
            return Err(Error::NotAdmissible { x: x.to_vec(), y });
        }
        l.value(x, &y)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let (f_lo, f_hi) = (val(lo)?, val(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::domain(format!(
            "snap_null needs L(y_time) > 0 > L(y_space), got {f_lo:e} and {f_hi:e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = val(mid)?;
        if f.abs() <= 1e-12 {
            return Ok(at(mid));
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = at(0.5 * (lo + hi));
    let f = l.value(x, &y)?;
    if f.abs() <= 1e-12 {
        Ok(y)
    } else {
        Err(Error::domain(format!("bisection stalled at |L| = {:e}", f.abs())))
    }
}

/// Directions tried by [`sample_null_direction`] before giving up.
pub const NULL_SEARCH_DIRECTIONS: usize = 64;

/// A null direction at `x`: sample directions until both a timelike and a
/// spacelike one turn up, then snap between them.
pub fn sample_null_direction(l: &Lagrangian, x: &[f64], seed: u64) -> Result<Vec<f64>> {
    let ys = l.sample_admissible(x, NULL_SEARCH_DIRECTIONS, seed)?;
    let mut time = None;
    let mut space = None;
    for y in ys {
        let v = l.value(x, &y)?;
        if v > 1e-6 && time.is_none() {
            time = Some(y);
        } else if v < -1e-6 && space.is_none() {
            space = Some(y);
        }
    }
    match (time, space) {
        (Some(t), Some(s)) => snap_null(l, x, &t, &s),
        _ => Err(Error::SamplingExhausted {
            attempts: NULL_SEARCH_DIRECTIONS,
        }),
    }
}
