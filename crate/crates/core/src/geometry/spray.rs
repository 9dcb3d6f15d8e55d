use nalgebra::DMatrix;

use super::linalg::solve;
use super::metric::check_admissible;
use crate::autodiff::{second_order, Dual, Scalar, ScalarField};
use crate::error::Result;
use crate::zoo::Lagrangian;

/// `2G^i(x, y)` and optionally the connection `G^i_j = ∂G^i/∂y^j`.
#[derive(Debug, Clone)]
pub struct SprayValue {
    pub g2: Vec<f64>,
    /// `connection[(i, j)] = G^i_j`
    pub connection: Option<DMatrix<f64>>,
}

/// `2G = H⁻¹ (L_{·h,j} y^j − L_{,h})` with `H = ∂²L/∂y∂y`, which is
/// `½ g^{ih}(…)` written without forming `g⁻¹`.
pub fn spray_generic<S: Scalar, F: ScalarField>(l: &F, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let so = second_order(l, x, y, true)?;
    let n = y.len();
    let rhs: Vec<S> = (0..n)
        .map(|h| {
            let mixed = (0..n).fold(S::from_f64(0.0), |acc, j| acc + so.dxdy[h][j] * y[j]);
            mixed - so.dx[h]
        })
        .collect();
    solve(so.dydy, rhs)
}

/// `G^i_j = ½ ∂(2G^i)/∂y^j`, one dual-seeded spray evaluation per column.
pub fn connection<F: ScalarField>(l: &F, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let n = y.len();
    let xs: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let ys: Vec<Dual<f64>> = (0..n)
            .map(|k| if k == j { Dual::variable(y[k]) } else { Dual::constant(y[k]) })
            .collect();
        let g2 = spray_generic(l, &xs, &ys)?;
        for i in 0..n {
            out[(i, j)] = 0.5 * g2[i].eps;
        }
    }
    Ok(out)
}

/// Geodesic spray at an admissible point.
pub fn spray(l: &Lagrangian, x: &[f64], y: &[f64], with_connection: bool) -> Result<SprayValue> {
    check_admissible(l, x, y)?;
    let g2 = spray_generic(l, x, y)?;
    let connection = if with_connection {
        Some(connection(l, x, y)?)
    } else {
        None
    };
    Ok(SprayValue { g2, connection })
}
