use rayon::prelude::*;
use serde::Serialize;

use super::field::{lie_derivative, VectorFieldSpec};
use super::verdict::{ConformalVerdict, PointFactor, Tolerances, Verdict};
use crate::autodiff::grad_y;
use crate::error::{Error, Result};
use crate::geodesics::{snap_null, Trajectory};
use crate::geometry::{causal_character, check_admissible, CausalTag, TOL_NULL};
use crate::zoo::{rescale_by_field, Lagrangian};

/// Directions with `|L| ≤ MU_NONNULL · ‖y‖²` do not enter `μ̂`.
pub const MU_NONNULL: f64 = 1e-6;

/// `𝓛_{ξ^c} L` at an admissible point.
pub fn lie_derivative_l(l: &Lagrangian, xi: &VectorFieldSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_admissible(l, x, y)?;
    lie_derivative(l, xi, x, y)
}

struct PointOutcome {
    factor: PointFactor,
    skipped: usize,
    null_checked: usize,
    null_max: f64,
}

fn field_at_point(
    l: &Lagrangian,
    xi: &VectorFieldSpec,
    x: &[f64],
    ys: &[Vec<f64>],
) -> Result<PointOutcome> {
    let mut mus = Vec::with_capacity(ys.len());
    let mut skipped = 0;
    let mut timelike = None;
    let mut spacelike = None;
    let mut null_checked = 0;
    let mut null_max: f64 = 0.0;
    for y in ys {
        let scale: f64 = y.iter().map(|c| c * c).sum();
        let lv = l.value(x, y)?;
        let lie = lie_derivative_l(l, xi, x, y)?;
        if lv.abs() > MU_NONNULL * scale {
            mus.push(lie / lv);
            if lv > 0.0 && timelike.is_none() {
                timelike = Some(y.clone());
            }
            if lv < 0.0 && spacelike.is_none() {
                spacelike = Some(y.clone());
            }
        } else {
            skipped += 1;
            if lv.abs() <= 1e-10 * scale {
                null_checked += 1;
                null_max = null_max.max(lie.abs() / scale);
            }
        }
    }
    // One snapped null direction per point when both sides of the cone
    // were sampled and the segment between them stays admissible.
    if let (Some(t), Some(s)) = (timelike, spacelike) {
        if let Ok(yn) = snap_null(l, x, &t, &s) {
            let scale: f64 = yn.iter().map(|c| c * c).sum();
            let lie = lie_derivative_l(l, xi, x, &yn)?;
            null_checked += 1;
            null_max = null_max.max(lie.abs() / scale);
        }
    }
    if mus.is_empty() {
        return Err(Error::AllSamplesNull(x.to_vec()));
    }
    let mean = mus.iter().sum::<f64>() / mus.len() as f64;
    let anisotropy = mus.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    Ok(PointOutcome {
        factor: PointFactor {
            x: x.to_vec(),
            value: mean,
            anisotropy,
            used: mus.len(),
        },
        skipped,
        null_checked,
        null_max,
    })
}

/// Estimates `μ̂(x) = 𝓛_{ξ^c}L / L` over `per_point` sampled directions at
/// each base point and checks that it does not depend on `y`.
///
/// Direction seeds are `seed + index`, so results do not depend on
/// scheduling. `max_residual` is the larger of the anisotropy and the
/// null-cone value.
pub fn conformal_field_report(
    l: &Lagrangian,
    xi: &VectorFieldSpec,
    points: &[Vec<f64>],
    per_point: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<ConformalVerdict> {
    let outcomes = points
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let ys = l.sample_admissible(x, per_point, seed.wrapping_add(k as u64))?;
            field_at_point(l, xi, x, &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut factors = Vec::with_capacity(outcomes.len());
    let (mut skipped, mut null_checked, mut null_max, mut anisotropy) = (0, 0, 0.0f64, 0.0f64);
    for o in outcomes {
        skipped += o.skipped;
        null_checked += o.null_checked;
        null_max = null_max.max(o.null_max);
        anisotropy = anisotropy.max(o.factor.anisotropy);
        factors.push(o.factor);
    }
    let max_mu = factors.iter().fold(0.0f64, |m, f| m.max(f.value.abs()));
    let verdict = if anisotropy > tol.anisotropy || null_max > tol.null_cone {
        Verdict::NotConformal
    } else if max_mu <= tol.residual {
        Verdict::Killing
    } else {
        Verdict::Conformal
    };
    Ok(ConformalVerdict {
        max_residual: anisotropy.max(null_max),
        factors,
        anisotropy,
        null_checked,
        null_max,
        skipped,
        verdict,
        tolerances: tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    /// `q(t_k) = g_{(x_k, y_k)}(y_k, ξ(x_k))`
    pub values: Vec<f64>,
    pub max_drift: f64,
}

/// Largest `|L0|` accepted as a null start by [`conservation_along_null`].
pub const NULL_START_TOL: f64 = 1e-10;

/// Drift of `g(ċ, ξ)` along a null geodesic.
///
/// Uses `g_ij y^i = ½ ∂L/∂y^j`, so no metric inversion is involved.
pub fn conservation_along_null(l: &Lagrangian, xi: &VectorFieldSpec, traj: &Trajectory) -> Result<ConservationReport> {
    if !(traj.l0().abs() <= NULL_START_TOL) {
        return Err(Error::NotNull(traj.l0()));
    }
    let values = traj
        .samples()
        .iter()
        .map(|s| {
            let dl = grad_y(l, &s.x, &s.y)?;
            let v = xi.eval_f64(&s.x)?;
            Ok(0.5 * dl.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let q0 = values.first().copied().unwrap_or(0.0);
    let max_drift = values.iter().fold(0.0f64, |m, q| m.max((q - q0).abs()));
    Ok(ConservationReport { values, max_drift })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub x: Vec<f64>,
    /// `α(x) = L(x, ξ(x))`; absent where `ξ(x)` is not admissible.
    pub alpha: Option<f64>,
    pub tag: Option<CausalTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssentialScan {
    pub points: Vec<ScanPoint>,
    pub null_points: Vec<Vec<f64>>,
    pub inadmissible_points: Vec<Vec<f64>>,
    /// `ξ` is lightlike somewhere on the grid, so the rescaling is skipped.
    pub essential_candidate: bool,
    /// Field report of `ξ` for `L/α`, when the rescaling was possible.
    pub rescaled: Option<ConformalVerdict>,
}

/// Causal profile of `ξ` on a grid and, when it is nowhere null, the check
/// that `ξ` is Killing for `L/α`.
pub fn essential_scan(
    l: &Lagrangian,
    xi: &VectorFieldSpec,
    grid: &[Vec<f64>],
    per_point: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<EssentialScan> {
    let mut points = Vec::with_capacity(grid.len());
    let mut null_points = Vec::new();
    let mut inadmissible_points = Vec::new();
    for x in grid {
        let v = xi.eval_f64(x)?;
        match causal_character(l, x, &v, TOL_NULL) {
            Ok(c) => {
                if c.tag == CausalTag::Null {
                    null_points.push(x.clone());
                }
                points.push(ScanPoint {
                    x: x.clone(),
                    alpha: Some(c.l_value),
                    tag: Some(c.tag),
                });
            }
            Err(Error::NotAdmissible { .. }) => {
                inadmissible_points.push(x.clone());
                points.push(ScanPoint {
                    x: x.clone(),
                    alpha: None,
                    tag: None,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let essential_candidate = !null_points.is_empty();
    let rescaled = if essential_candidate || !inadmissible_points.is_empty() {
        None
    } else {
        let lt = rescale_by_field(l, xi)?;
        Some(conformal_field_report(&lt, xi, grid, per_point, seed, tol)?)
    };
    Ok(EssentialScan {
        points,
        null_points,
        inadmissible_points,
        essential_candidate,
        rescaled,
    })
}
