use super::spray::connection;
use crate::error::{Error, Result};
use crate::geodesics::Trajectory;
use crate::zoo::Lagrangian;

/// Dynamical covariant derivative of a vertical field sampled along a
/// geodesic lift: `∇X^i = dX^i/dt + G^i_j X^j`.
///
/// `dX/dt` uses centered differences inside the grid and second-order
/// one-sided differences at the two ends.
pub fn covariant_derivative_along(l: &Lagrangian, curve: &Trajectory, field: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let samples = curve.samples();
    let m = samples.len();
    if m < 3 || field.len() != m {
        return Err(Error::GridTooCoarse(m.min(field.len())));
    }
    let n = l.dim();
    let h = curve.step();
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let d: Vec<f64> = (0..n)
            .map(|i| {
                if k == 0 {
                    (-3.0 * field[0][i] + 4.0 * field[1][i] - field[2][i]) / (2.0 * h)
                } else if k == m - 1 {
                    (3.0 * field[k][i] - 4.0 * field[k - 1][i] + field[k - 2][i]) / (2.0 * h)
                } else {
                    (field[k + 1][i] - field[k - 1][i]) / (2.0 * h)
                }
            })
            .collect();
        let s = &samples[k];
        let c = connection(l, &s.x, &s.y)?;
        out.push(
            (0..n)
                .map(|i| d[i] + (0..n).map(|j| c[(i, j)] * field[k][j]).sum::<f64>())
                .collect(),
        );
    }
    Ok(out)
}
