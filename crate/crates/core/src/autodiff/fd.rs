//! Central finite differences, used as an independent oracle for [`jet_eval`].
//!
//! Only plain `f64` evaluations of the field are used here. Each derivative
//! is a composition of central differences with one Richardson step. The
//! base step is `1e-5` for first derivatives, `1e-3` for second and `1e-2`
//! for third, each scaled by `max(1, ‖·‖∞)` of the variable block; larger
//! steps for the higher orders keep roundoff (`ε/h^m`) below the truncation
//! error.

use super::jet::{jet_eval, OrderMask, ScalarField};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    X(usize),
    Y(usize),
}

/// Per-block discrepancy between AD and finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub blocks: Vec<(&'static str, f64)>,
    pub max_discrepancy: f64,
}

const STEPS: [f64; 4] = [0.0, 1e-5, 1e-3, 1e-2];

struct Stencil<'a, F> {
    f: &'a F,
    x: &'a [f64],
    y: &'a [f64],
    hx: f64,
    hy: f64,
}

impl<F: ScalarField> Stencil<'_, F> {
    fn central(&self, vars: &[Var], scale: f64) -> Result<f64> {
        let m = vars.len();
        let mut acc = 0.0;
        for mask in 0..(1u32 << m) {
            let mut x = self.x.to_vec();
            let mut y = self.y.to_vec();
            let mut sign = 1.0;
            for (k, v) in vars.iter().enumerate() {
                let s = if mask & (1 << k) != 0 { -1.0 } else { 1.0 };
                sign *= s;
                match *v {
                    Var::X(i) => x[i] += s * self.hx * scale,
                    Var::Y(i) => y[i] += s * self.hy * scale,
                }
            }
            acc += sign * self.f.eval(&x, &y)?;
        }
        let denom: f64 = vars
            .iter()
            .map(|v| match v {
                Var::X(_) => 2.0 * self.hx * scale,
                Var::Y(_) => 2.0 * self.hy * scale,
            })
            .product();
        Ok(acc / denom)
    }

    fn derivative(&self, vars: &[Var]) -> Result<f64> {
        let coarse = self.central(vars, 1.0)?;
        let fine = self.central(vars, 0.5)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

fn discrepancy(ad: &[f64], fd: &[f64]) -> f64 {
    let scale = inf_norm(ad).max(1.0);
    ad.iter()
        .zip(fd)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

/// Maximum relative discrepancy between [`jet_eval`] and finite differences
/// over every block in `mask`.
pub fn fd_check<F: ScalarField>(f: &F, x: &[f64], y: &[f64], mask: OrderMask) -> Result<FdReport> {
    let jet = jet_eval(f, x, y, mask)?;
    let n = jet.n;
    let stencil = |order: usize| Stencil {
        f,
        x,
        y,
        hx: STEPS[order] * inf_norm(x).max(1.0),
        hy: STEPS[order] * inf_norm(y).max(1.0),
    };
    let mut blocks = Vec::new();
    if let Some(dx) = &jet.dx {
        let s = stencil(1);
        let fd = (0..n).map(|i| s.derivative(&[Var::X(i)])).collect::<Result<Vec<_>>>()?;
        blocks.push(("dx", discrepancy(dx, &fd)));
    }
    if let Some(dy) = &jet.dy {
        let s = stencil(1);
        let fd = (0..n).map(|i| s.derivative(&[Var::Y(i)])).collect::<Result<Vec<_>>>()?;
        blocks.push(("dy", discrepancy(dy, &fd)));
    }
    if let Some(h) = &jet.dydy {
        let s = stencil(2);
        let mut ad = Vec::new();
        let mut fd = Vec::new();
        for i in 0..n {
            for j in 0..n {
                ad.push(h[(i, j)]);
                fd.push(s.derivative(&[Var::Y(i), Var::Y(j)])?);
            }
        }
        blocks.push(("dydy", discrepancy(&ad, &fd)));
    }
    if let Some(m) = &jet.dxdy {
        let s = stencil(2);
        let mut ad = Vec::new();
        let mut fd = Vec::new();
        for i in 0..n {
            for j in 0..n {
                ad.push(m[(i, j)]);
                fd.push(s.derivative(&[Var::X(j), Var::Y(i)])?);
            }
        }
        blocks.push(("dxdy", discrepancy(&ad, &fd)));
    }
    if let Some(t) = &jet.dydydy {
        let s = stencil(3);
        let mut ad = Vec::new();
        let mut fd = Vec::new();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    ad.push(t.get(i, j, k));
                    fd.push(s.derivative(&[Var::Y(i), Var::Y(j), Var::Y(k)])?);
                }
            }
        }
        blocks.push(("dydydy", discrepancy(&ad, &fd)));
    }
    let max_discrepancy = blocks.iter().fold(0.0f64, |m, b| m.max(b.1));
    Ok(FdReport {
        blocks,
        max_discrepancy,
    })
}
