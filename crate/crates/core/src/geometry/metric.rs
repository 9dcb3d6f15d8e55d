use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::autodiff::second_order;
use crate::error::{Error, Result};
use crate::zoo::{Lagrangian, Signature};

/// Relative cutoff on eigenvalues below which `g` counts as degenerate.
pub const EIGEN_CUTOFF: f64 = 1e-12;

/// Default null tolerance, relative to `‖y‖²`.
pub const TOL_NULL: f64 = 1e-9;

/// `g_ij(x, y) = ½ ∂²L/∂y^i∂y^j` with its inverse and signature.
#[derive(Debug, Clone)]
pub struct MetricValue {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub signature: Signature,
    pub det: f64,
    pub eigenvalues: Vec<f64>,
}

pub(crate) fn check_admissible(l: &Lagrangian, x: &[f64], y: &[f64]) -> Result<()> {
    for v in [x, y] {
        if v.len() != l.dim() {
            return Err(Error::DimensionMismatch {
                expected: l.dim(),
                got: v.len(),
            });
        }
    }
    if !l.admissible(x, y) {
        return Err(Error::NotAdmissible {
            x: x.to_vec(),
            y: y.to_vec(),
        });
    }
    Ok(())
}

/// Metric from a symmetric matrix: eigen-decomposition, signature, inverse.
pub fn metric_from_matrix(g: DMatrix<f64>) -> Result<MetricValue> {
    let n = g.nrows();
    let eig = SymmetricEigen::new(g.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateMetric(format!("eigenvalues {:?}", eig.eigenvalues.as_slice())));
    }
    if let Some(small) = eig.eigenvalues.iter().find(|v| v.abs() <= EIGEN_CUTOFF * scale) {
        return Err(Error::DegenerateMetric(format!(
            "eigenvalue {small:e} below {EIGEN_CUTOFF:e} * {scale:e}"
        )));
    }
    let det: f64 = eig.eigenvalues.iter().product();
    if det.abs() <= EIGEN_CUTOFF * scale.powi(n as i32) {
        return Err(Error::DegenerateMetric(format!("det {det:e}")));
    }
    let neg = eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
    let inv_diag = DVector::from_iterator(n, eig.eigenvalues.iter().map(|v| 1.0 / v));
    let g_inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(MetricValue {
        g,
        g_inv,
        signature: (neg, n - neg),
        det,
        eigenvalues,
    })
}

/// The metric tensor at an admissible point, checked against the
/// Lagrangian's declared signature when it has one.
pub fn metric_tensor(l: &Lagrangian, x: &[f64], y: &[f64]) -> Result<MetricValue> {
    check_admissible(l, x, y)?;
    let so = second_order(l, x, y, false)?;
    let n = l.dim();
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * so.dydy[i][j]);
    let m = metric_from_matrix(g)?;
    if let Some(expected) = l.declared_signature(x, y) {
        if expected != m.signature {
            return Err(Error::SignatureMismatch {
                expected,
                found: m.signature,
            });
        }
    }
    Ok(m)
}

/// `h_ij = g_ij − y_i y_j / L` and its contravariant form.
#[derive(Debug, Clone)]
pub struct AngularMetric {
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
    /// `y_i = g_ij y^j`
    pub y_lower: Vec<f64>,
    pub l: f64,
    pub metric: MetricValue,
}

/// Angular metric off the null cone. `tol_null` is relative to `‖y‖²`.
pub fn angular_metric(l: &Lagrangian, x: &[f64], y: &[f64], tol_null: f64) -> Result<AngularMetric> {
    let metric = metric_tensor(l, x, y)?;
    let lv = l.value(x, y)?;
    let tol = tol_null * y.iter().map(|c| c * c).sum::<f64>();
    if lv.abs() <= tol {
        return Err(Error::NullDirection { l: lv, tol });
    }
    let yv = DVector::from_column_slice(y);
    let yl = &metric.g * &yv;
    let h = &metric.g - &yl * yl.transpose() / lv;
    let h_inv = &metric.g_inv * &h * &metric.g_inv;
    Ok(AngularMetric {
        h,
        h_inv,
        y_lower: yl.iter().copied().collect(),
        l: lv,
        metric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalTag {
    Timelike,
    Null,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausalCharacter {
    pub tag: CausalTag,
    pub l_value: f64,
    /// Absolute threshold actually used, `tol_null · ‖y‖²`.
    pub tol: f64,
}

/// Timelike if `L > tol`, spacelike if `L < −tol`, null otherwise.
pub fn causal_character(l: &Lagrangian, x: &[f64], y: &[f64], tol_null: f64) -> Result<CausalCharacter> {
    check_admissible(l, x, y)?;
    let lv = l.value(x, y)?;
    let tol = tol_null * y.iter().map(|c| c * c).sum::<f64>();
    let tag = if lv > tol {
        CausalTag::Timelike
    } else if lv < -tol {
        CausalTag::Spacelike
    } else {
        CausalTag::Null
    };
    Ok(CausalCharacter { tag, l_value: lv, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::zoo::{conformal_deform, make_berwald_moor, make_minkowski, make_pseudo_euclidean};

    fn assert_mat(m: &DMatrix<f64>, want: &[&[f64]], tol: f64) {
        for (i, row) in want.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((m[(i, j)] - v).abs() <= tol, "({i},{j}): {} vs {v}", m[(i, j)]);
            }
        }
    }

    #[test]
    fn minkowski_metric() {
        let m = metric_tensor(&make_minkowski(2).unwrap(), &[0.0, 0.0], &[1.0, 0.3]).unwrap();
        assert_mat(&m.g, &[&[1.0, 0.0], &[0.0, -1.0]], 0.0);
        assert_eq!(m.signature, (1, 1));
        assert!((m.det + 1.0).abs() < 1e-15);
    }

    #[test]
    fn euclidean_signature() {
        let m = metric_tensor(&make_pseudo_euclidean(&[1.0, 1.0]).unwrap(), &[0.0; 2], &[1.0, 2.0]).unwrap();
        assert_mat(&m.g, &[&[1.0, 0.0], &[0.0, 1.0]], 0.0);
        assert_eq!(m.signature, (0, 2));
    }

    #[test]
    fn berwald_moor_plane() {
        let m = metric_tensor(&make_berwald_moor(2).unwrap(), &[0.0; 2], &[2.0, 3.0]).unwrap();
        assert_mat(&m.g, &[&[0.0, 0.5], &[0.5, 0.0]], 1e-15);
        assert_eq!(m.signature, (1, 1));
        assert!((m.eigenvalues[0] + 0.5).abs() < 1e-15 && (m.eigenvalues[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conformal_metric_scales() {
        let l = conformal_deform(&make_minkowski(2).unwrap(), &parse("x0", 2).unwrap()).unwrap();
        let m = metric_tensor(&l, &[2f64.ln(), 0.0], &[1.0, 0.0]).unwrap();
        assert_mat(&m.g, &[&[2.0, 0.0], &[0.0, -2.0]], 1e-14);
    }

    #[test]
    fn inverse_is_inverse() {
        let l = make_berwald_moor(3).unwrap();
        let m = metric_tensor(&l, &[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
        let id = &m.g * &m.g_inv;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-10);
        assert_eq!(m.signature, (2, 1));
    }

    #[test]
    fn not_admissible() {
        let l = make_berwald_moor(2).unwrap();
        assert!(matches!(
            metric_tensor(&l, &[0.0; 2], &[1.0, 0.0]),
            Err(Error::NotAdmissible { .. })
        ));
    }

    #[test]
    fn degenerate_matrix() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(metric_from_matrix(g), Err(Error::DegenerateMetric(_))));
    }

    #[test]
    fn angular_metric_minkowski() {
        let a = angular_metric(&make_minkowski(2).unwrap(), &[0.0; 2], &[1.0, 0.0], TOL_NULL).unwrap();
        assert_eq!(a.y_lower, vec![1.0, 0.0]);
        assert_mat(&a.h, &[&[0.0, 0.0], &[0.0, -1.0]], 0.0);
        let trace: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| a.h_inv[(i, j)] * a.metric.g[(i, j)]).sum();
        assert!((trace - 1.0).abs() < 1e-14);
    }

    #[test]
    fn angular_metric_rejects_null() {
        let r = angular_metric(&make_minkowski(2).unwrap(), &[0.0; 2], &[1.0, 1.0], TOL_NULL);
        assert!(matches!(r, Err(Error::NullDirection { .. })));
    }

    #[test]
    fn causal_tags() {
        let l = make_minkowski(2).unwrap();
        let tag = |y: &[f64]| causal_character(&l, &[0.0; 2], y, TOL_NULL).unwrap().tag;
        assert_eq!(tag(&[1.0, 0.0]), CausalTag::Timelike);
        assert_eq!(tag(&[1.0, 1.0]), CausalTag::Null);
        assert_eq!(tag(&[0.0, 1.0]), CausalTag::Spacelike);
        let bm = make_berwald_moor(2).unwrap();
        assert_eq!(causal_character(&bm, &[0.0; 2], &[1.0, -1.0], TOL_NULL).unwrap().tag, CausalTag::Spacelike);
    }

    #[test]
    fn causal_threshold() {
        // e^σ with σ = ln 1e-15 puts L at 1e-15 for a unit vector
        let base = make_pseudo_euclidean(&[1.0]).unwrap();
        let l = conformal_deform(&base, &parse(&format!("ln({:e})", 1e-15), 1).unwrap()).unwrap();
        let c = causal_character(&l, &[0.0], &[1.0], 1e-12).unwrap();
        assert!((c.l_value - 1e-15).abs() < 1e-28);
        assert_eq!(c.tag, CausalTag::Null);
    }
}
