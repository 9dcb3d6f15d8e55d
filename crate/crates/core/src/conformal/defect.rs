use serde::Serialize;

use crate::autodiff::Dual;
use crate::error::{Error, Result};
use crate::expr::{check_sigma, Env, Expr};
use crate::geometry::{metric_tensor, spray, TOL_NULL};
use crate::zoo::{conformal_deform, Lagrangian};

/// How the parallel part of a spray defect was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// `P̂ = g(D, y) / L`, off the null cone.
    Metric,
    /// `P̂ = D·y / ‖y‖²` in the auxiliary Euclidean norm, on the null cone
    /// where `h` is undefined.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprayDefect {
    /// `D = 2G̃ − 2G`
    pub d: Vec<f64>,
    pub parallel: f64,
    pub transverse: Vec<f64>,
    /// Euclidean norm of `D − P̂ y`.
    pub transverse_norm: f64,
    pub projection: Projection,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `D = 2G̃ − 2G` split into a part along `y` and a transverse rest.
pub fn spray_defect(l: &Lagrangian, lt: &Lagrangian, x: &[f64], y: &[f64]) -> Result<SprayDefect> {
    let g2 = spray(l, x, y, false)?.g2;
    let gt2 = spray(lt, x, y, false)?.g2;
    let d: Vec<f64> = gt2.iter().zip(&g2).map(|(a, b)| a - b).collect();
    let lv = l.value(x, y)?;
    let yy: f64 = y.iter().map(|c| c * c).sum();
    let (parallel, projection) = if lv.abs() > TOL_NULL * yy {
        let m = metric_tensor(l, x, y)?;
        let gdy: f64 = (0..y.len())
            .flat_map(|i| (0..y.len()).map(move |j| (i, j)))
            .map(|(i, j)| m.g[(i, j)] * d[i] * y[j])
            .sum();
        (gdy / lv, Projection::Metric)
    } else {
        let dy: f64 = d.iter().zip(y).map(|(a, b)| a * b).sum();
        (dy / yy, Projection::Euclidean)
    };
    let transverse: Vec<f64> = d.iter().zip(y).map(|(a, b)| a - parallel * b).collect();
    let transverse_norm = norm(&transverse);
    Ok(SprayDefect {
        d,
        parallel,
        transverse,
        transverse_norm,
        projection,
    })
}

/// Closed form of the spray of `e^σ L`:
/// `2G + (σ_{,k} y^k) y − ½ L g⁻¹∇σ`.
pub fn conformal_spray_formula(l: &Lagrangian, sigma: &Expr, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let n = l.dim();
    let g2 = spray(l, x, y, false)?.g2;
    let m = metric_tensor(l, x, y)?;
    let lv = l.value(x, y)?;
    let grad: Vec<f64> = (0..n)
        .map(|k| {
            let xs: Vec<Dual<f64>> = (0..n)
                .map(|i| if i == k { Dual::variable(x[i]) } else { Dual::constant(x[i]) })
                .collect();
            Ok(sigma.eval(&Env::x_only(&xs))?.eps)
        })
        .collect::<Result<_>>()?;
    let along: f64 = grad.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((0..n)
        .map(|i| {
            let raised: f64 = (0..n).map(|h| m.g_inv[(i, h)] * grad[h]).sum();
            g2[i] + along * y[i] - 0.5 * lv * raised
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub transverse_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub sigma_constant: bool,
    pub samples_used: usize,
    pub max_transverse: f64,
    pub max_defect: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
}

/// Witness threshold for the transverse defect, relative to `‖y‖²`.
pub const WITNESS_THRESHOLD: f64 = 1e-3;

/// For constant `σ`, checks that the sprays of `L` and `e^σ L` agree. For
/// non-constant `σ`, searches the samples for a transverse defect of at
/// least `1e-3 · ‖y‖²`, which shows the deformation is not projective.
pub fn weyl_probe(l: &Lagrangian, sigma: &Expr, samples: &[(Vec<f64>, Vec<f64>)], tol: f64) -> Result<WeylReport> {
    check_sigma(sigma)?;
    if l.dim() < 2 {
        return Err(Error::domain("weyl probe needs n >= 2"));
    }
    let lt = conformal_deform(l, sigma)?;
    let constant = sigma.is_constant();
    let mut report = WeylReport {
        sigma_constant: constant,
        samples_used: 0,
        max_transverse: 0.0,
        max_defect: 0.0,
        witness: None,
        pass: false,
    };
    for (x, y) in samples {
        if !l.admissible(x, y) || !lt.admissible(x, y) {
            continue;
        }
        let def = spray_defect(l, &lt, x, y)?;
        report.samples_used += 1;
        report.max_transverse = report.max_transverse.max(def.transverse_norm);
        report.max_defect = report.max_defect.max(norm(&def.d));
        let scale: f64 = y.iter().map(|c| c * c).sum();
        if !constant && def.transverse_norm >= WITNESS_THRESHOLD * scale {
            report.witness = Some(Witness {
                x: x.clone(),
                y: y.clone(),
                transverse_norm: def.transverse_norm,
            });
            report.pass = true;
            return Ok(report);
        }
    }
    if constant {
        report.pass = report.max_transverse <= tol && report.max_defect <= tol;
        Ok(report)
    } else {
        Err(Error::InconclusiveSampling(report.samples_used))
    }
}
