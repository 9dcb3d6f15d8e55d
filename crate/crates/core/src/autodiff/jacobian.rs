use nalgebra::DMatrix;

use super::jet::lift;
use super::{Dual, Scalar};
use crate::error::{Error, Result};

/// A map `M → M` evaluable over any [`Scalar`].
pub trait PointMap {
    fn dim(&self) -> usize;
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>>;
}

impl<M: PointMap + ?Sized> PointMap for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).apply(x)
    }
}

/// Image `f(x)` and Jacobian rows `jac[i][j] = ∂f^i/∂x^j` at a generic point.
pub fn jacobian_generic<S: Scalar, M: PointMap>(map: &M, x: &[S]) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    let n = x.len();
    let mut jac = vec![vec![S::from_f64(0.0); n]; n];
    let mut image = Vec::new();
    for j in 0..n {
        let mut lx = lift(x);
        lx[j].eps = S::from_f64(1.0);
        let out: Vec<Dual<S>> = map.apply(&lx)?;
        if out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: out.len(),
            });
        }
        for (i, v) in out.iter().enumerate() {
            jac[i][j] = v.eps;
        }
        if j == 0 {
            image = out.iter().map(|v| v.re).collect();
        }
    }
    if n == 0 {
        image = map.apply(x)?;
    }
    Ok((image, jac))
}

/// Differential of a map at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianValue {
    pub image: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub det: f64,
}

/// `Df(x)` via forward-mode duals and its determinant via LU.
///
/// Fails with [`Error::SingularJacobian`] when `|det| ≤ 1e-12·(max|Df|)ⁿ`.
pub fn jacobian<M: PointMap>(map: &M, x: &[f64]) -> Result<JacobianValue> {
    let n = map.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let (image, rows) = jacobian_generic(map, x)?;
    let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let det = matrix.clone().lu().determinant();
    let scale = matrix.amax().powi(n as i32);
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::SingularJacobian {
            det,
            point: x.to_vec(),
        });
    }
    Ok(JacobianValue { image, matrix, det })
}
