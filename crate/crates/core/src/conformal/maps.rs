use rayon::prelude::*;

use super::verdict::{ConformalVerdict, PointFactor, Tolerances, Verdict};
use crate::autodiff::{jacobian, jacobian_generic, PointMap};
use crate::error::{Error, Result};
use crate::expr::{check_sigma, Expr};
use crate::zoo::{mat_vec, Lagrangian};

enum Outcome {
    Residual { value: f64, sigma: f64 },
    Skipped,
}

/// Checks `L′(f(x), Df(x) y) = e^{σ(x)} L(x, y)` on sample pairs.
///
/// The residual is `|L′ − e^σ L| / max(1, |L|)`. Pairs inadmissible for
/// `L` or for `L′ ∘ df` are skipped and counted. Factors are reported as
/// `σ(x)`; the verdict is `killing` when `σ ≡ 0` on the samples.
pub fn conformal_residual<M: PointMap + Sync>(
    l: &Lagrangian,
    lp: &Lagrangian,
    f: &M,
    sigma: &Expr,
    points: &[(Vec<f64>, Vec<f64>)],
    tol: Tolerances,
) -> Result<ConformalVerdict> {
    check_sigma(sigma)?;
    let outcomes = points
        .par_iter()
        .map(|(x, y)| -> Result<Outcome> {
            let jac = jacobian(f, x)?;
            let ty: Vec<f64> = (0..y.len())
                .map(|i| (0..y.len()).map(|j| jac.matrix[(i, j)] * y[j]).sum())
                .collect();
            if !l.admissible(x, y) || !lp.admissible(&jac.image, &ty) {
                return Ok(Outcome::Skipped);
            }
            let lv = l.value(x, y)?;
            let lpv = lp.value(&jac.image, &ty)?;
            let s = sigma.eval_f64(x, &[])?;
            Ok(Outcome::Residual {
                value: (lpv - s.exp() * lv).abs() / lv.abs().max(1.0),
                sigma: s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_residual: f64 = 0.0;
    let mut skipped = 0;
    let mut factors = Vec::new();
    for ((x, _), o) in points.iter().zip(outcomes) {
        match o {
            Outcome::Residual { value, sigma } => {
                max_residual = max_residual.max(value);
                factors.push(PointFactor {
                    x: x.clone(),
                    value: sigma,
                    anisotropy: 0.0,
                    used: 1,
                });
            }
            Outcome::Skipped => skipped += 1,
        }
    }
    let verdict = if factors.is_empty() || max_residual > tol.residual {
        Verdict::NotConformal
    } else if factors.iter().all(|f| f.value == 0.0) {
        Verdict::Killing
    } else {
        Verdict::Conformal
    };
    Ok(ConformalVerdict {
        max_residual,
        factors,
        anisotropy: 0.0,
        null_checked: 0,
        null_max: 0.0,
        skipped,
        verdict,
        tolerances: tol,
    })
}

/// `σ̂(x)` with its spread over directions.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorEstimate {
    pub sigma: f64,
    pub anisotropy: f64,
    pub used: usize,
    pub skipped: usize,
    /// `ln(L′/L)` per used direction.
    pub samples: Vec<f64>,
}

/// Raw `ln(L′(f(x), Df y) / L(x, y))` over directions, without a verdict.
pub fn factor_samples<M: PointMap>(
    l: &Lagrangian,
    lp: &Lagrangian,
    f: &M,
    x: &[f64],
    ys: &[Vec<f64>],
    tol_null: f64,
) -> Result<FactorEstimate> {
    let (fx, df) = jacobian_generic(f, x)?;
    let mut samples = Vec::with_capacity(ys.len());
    let mut skipped = 0;
    for y in ys {
        let lv = l.value(x, y)?;
        let scale: f64 = y.iter().map(|c| c * c).sum();
        if lv.abs() <= tol_null * scale {
            skipped += 1;
            continue;
        }
        let ty = mat_vec(&df, y);
        let lpv = lp.value(&fx, &ty)?;
        let ratio = lpv / lv;
        if !(ratio > 0.0) {
            return Err(Error::NotConformalAt {
                x: x.to_vec(),
                reason: format!("L'/L = {ratio:e} is not positive at y={y:?}"),
            });
        }
        samples.push(ratio.ln());
    }
    if samples.is_empty() {
        return Err(Error::AllSamplesNull(x.to_vec()));
    }
    let sigma = samples.iter().sum::<f64>() / samples.len() as f64;
    let anisotropy = samples.iter().fold(0.0f64, |m, v| m.max((v - sigma).abs()));
    Ok(FactorEstimate {
        sigma,
        anisotropy,
        used: samples.len(),
        skipped,
        samples,
    })
}

/// `σ̂(x)` as the mean of `ln(L′/L)` over non-null directions.
///
/// Fails with `NotConformalAt` when a ratio is not positive or the spread
/// exceeds `tol_anisotropy`.
pub fn estimate_conformal_factor<M: PointMap>(
    l: &Lagrangian,
    lp: &Lagrangian,
    f: &M,
    x: &[f64],
    ys: &[Vec<f64>],
    tol_null: f64,
    tol_anisotropy: f64,
) -> Result<FactorEstimate> {
    let est = factor_samples(l, lp, f, x, ys, tol_null)?;
    if est.anisotropy > tol_anisotropy {
        return Err(Error::NotConformalAt {
            x: x.to_vec(),
            reason: format!("anisotropy {:e} exceeds {tol_anisotropy:e}", est.anisotropy),
        });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::TOL_NULL;
    use crate::zoo::{make_berwald_moor, make_minkowski, sample_points, DiffeoSpec};

    #[test]
    fn berwald_moor_cubic_map() {
        let bm = make_berwald_moor(3).unwrap();
        let f = DiffeoSpec::parse(&["x0 + x0^3", "x1 + x1^3", "x2 + x2^3"]).unwrap();
        let sigma = parse("(2/3)*ln((1 + 3*x0^2)*(1 + 3*x1^2)*(1 + 3*x2^2))", 3).unwrap();
        let pts = sample_points(&bm, -1.0, 1.0, 100, 4).unwrap();
        let v = conformal_residual(&bm, &bm, &f, &sigma, &pts, Tolerances::default()).unwrap();
        assert!(v.max_residual <= 1e-12, "{}", v.max_residual);
        assert_eq!(v.verdict, Verdict::Conformal);

        let x = [1.0, 1.0, 1.0];
        let ys = bm.sample_admissible(&x, 20, 9).unwrap();
        let est = estimate_conformal_factor(&bm, &bm, &f, &x, &ys, TOL_NULL, 1e-12).unwrap();
        let j = jacobian(&f, &x).unwrap().det;
        assert!((est.sigma - 2.0 / 3.0 * j.ln()).abs() < 1e-12);
    }

    #[test]
    fn identity_is_killing() {
        let l = make_minkowski(2).unwrap();
        let pts = sample_points(&l, -1.0, 1.0, 20, 1).unwrap();
        let v = conformal_residual(&l, &l, &DiffeoSpec::identity(2), &parse("0", 2).unwrap(), &pts, Tolerances::default())
            .unwrap();
        assert_eq!(v.max_residual, 0.0);
        assert_eq!(v.verdict, Verdict::Killing);
    }

    #[test]
    fn wrong_factor_is_rejected() {
        let l = make_minkowski(2).unwrap();
        let pts = sample_points(&l, -1.0, 1.0, 20, 1).unwrap();
        let v = conformal_residual(&l, &l, &DiffeoSpec::identity(2), &parse("x0", 2).unwrap(), &pts, Tolerances::default())
            .unwrap();
        assert!(v.max_residual > 0.1);
        assert_eq!(v.verdict, Verdict::NotConformal);
    }

    #[test]
    fn anisotropic_map_is_not_conformal() {
        let l = make_minkowski(2).unwrap();
        let f = DiffeoSpec::parse(&["2*x0", "x1"]).unwrap();
        let ys = l.sample_admissible(&[0.0, 0.0], 10, 2).unwrap();
        assert!(matches!(
            estimate_conformal_factor(&l, &l, &f, &[0.0, 0.0], &ys, TOL_NULL, 1e-8),
            Err(Error::NotConformalAt { .. })
        ));
    }

    #[test]
    fn all_null_directions() {
        let l = make_minkowski(2).unwrap();
        let ys = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        assert!(matches!(
            estimate_conformal_factor(&l, &l, &DiffeoSpec::identity(2), &[0.0, 0.0], &ys, TOL_NULL, 1e-8),
            Err(Error::AllSamplesNull(_))
        ));
    }
}
