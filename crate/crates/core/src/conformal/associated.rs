use nalgebra::DMatrix;
use serde::Serialize;

use super::field::{FlowMap, VectorFieldSpec};
use super::maps::factor_samples;
use crate::autodiff::jacobian;
use crate::error::Result;
use crate::geometry::{metric_tensor, MetricValue, TOL_NULL};
use crate::zoo::{Lagrangian, Signature};

/// `g^ξ(x) = g(x, ξ(x))`, the metric evaluated along a field.
#[derive(Debug, Clone)]
pub struct AssociatedMetric {
    pub base: Lagrangian,
    pub xi: VectorFieldSpec,
}

/// Builds `g^ξ`; evaluation fails with `NotAdmissible` where `ξ` leaves `A`.
pub fn associated_metric(l: &Lagrangian, xi: &VectorFieldSpec) -> AssociatedMetric {
    AssociatedMetric {
        base: l.clone(),
        xi: xi.clone(),
    }
}

impl AssociatedMetric {
    pub fn eval(&self, x: &[f64]) -> Result<MetricValue> {
        let v = self.xi.eval_f64(x)?;
        metric_tensor(&self.base, x, &v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaEntry {
    pub eps: f64,
    /// Largest `‖A − cB‖ / ‖A‖` with `A = φ_ε^* g^ξ`, `B = g^ξ` and `c` the
    /// least-squares factor.
    pub max_proportionality: f64,
    /// Largest `|c − e^σ̂| / max(1, |c|)` against the Finslerian factor.
    pub max_factor_mismatch: f64,
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub entries: Vec<LemmaEntry>,
    pub signatures: Vec<Signature>,
    pub max_factor_mismatch: f64,
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// For each `ε`, pulls `g^ξ` back by the flow `φ_ε`, fits the scalar
/// factor against `g^ξ` at each point, and compares it with `e^σ̂` from
/// the Finsler Lagrangian along the same flow.
pub fn associated_lemma_probe(
    l: &Lagrangian,
    xi: &VectorFieldSpec,
    eps_list: &[f64],
    points: &[Vec<f64>],
    per_point: usize,
    seed: u64,
) -> Result<LemmaReport> {
    let am = associated_metric(l, xi);
    let mut signatures = Vec::with_capacity(points.len());
    for x in points {
        signatures.push(am.eval(x)?.signature);
    }
    let mut entries = Vec::with_capacity(eps_list.len());
    let mut worst: f64 = 0.0;
    for &eps in eps_list {
        let phi = FlowMap { field: xi, eps };
        let mut entry = LemmaEntry {
            eps,
            max_proportionality: 0.0,
            max_factor_mismatch: 0.0,
            factors: Vec::with_capacity(points.len()),
        };
        for (k, x) in points.iter().enumerate() {
            let jac = jacobian(&phi, x)?;
            let a = jac.matrix.transpose() * am.eval(&jac.image)?.g * &jac.matrix;
            let b = am.eval(x)?.g;
            let c = frob(&a, &b) / frob(&b, &b);
            let prop = (&a - &b * c).norm() / a.norm();
            let ys = l.sample_admissible(x, per_point, seed.wrapping_add(k as u64))?;
            let est = factor_samples(l, l, &phi, x, &ys, TOL_NULL)?;
            let mismatch = (c - est.sigma.exp()).abs() / c.abs().max(1.0);
            entry.max_proportionality = entry.max_proportionality.max(prop);
            entry.max_factor_mismatch = entry.max_factor_mismatch.max(mismatch);
            entry.factors.push(c);
        }
        worst = worst.max(entry.max_factor_mismatch);
        entries.push(entry);
    }
    Ok(LemmaReport {
        entries,
        signatures,
        max_factor_mismatch: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::zoo::{make_berwald_moor, make_minkowski};

    #[test]
    fn pseudo_riemannian_associated_metric_is_g() {
        let l = make_minkowski(3).unwrap();
        let am = associated_metric(&l, &VectorFieldSpec::parse(&["1", "x0", "0.5"]).unwrap());
        let g = am.eval(&[0.3, 0.1, 0.2]).unwrap().g;
        assert_eq!(g, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0])));
    }

    #[test]
    fn berwald_moor_diagonal_field() {
        let l = make_berwald_moor(2).unwrap();
        let am = associated_metric(&l, &VectorFieldSpec::constant(&[1.0, 1.0]));
        let g = am.eval(&[0.7, -3.0]).unwrap().g;
        assert!((g - DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0])).amax() < 1e-15);
        let am = associated_metric(&l, &VectorFieldSpec::parse(&["x0", "x1"]).unwrap());
        assert!(matches!(am.eval(&[0.0, 1.0]), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn dilation_lemma_on_berwald_moor() {
        let l = make_berwald_moor(2).unwrap();
        let pts = vec![vec![0.5, 0.5], vec![1.0, 2.0], vec![1.5, 0.3]];
        let r = associated_lemma_probe(&l, &VectorFieldSpec::radial(2), &[0.0, 0.1], &pts, 5, 1).unwrap();
        assert!(r.max_factor_mismatch <= 1e-8);
        assert!(r.entries[0].factors.iter().all(|c| (c - 1.0).abs() < 1e-15));
        assert!(r.entries[1].factors.iter().all(|c| (c - 0.2f64.exp()).abs() < 1e-10));
        assert!(r.signatures.iter().all(|s| *s == (1, 1)));
    }
}
