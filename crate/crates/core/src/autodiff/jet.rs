use nalgebra::DMatrix;

use super::{Dual, Scalar};
use crate::error::{Error, Result};

/// Scalar field `F(x, y)` on the tangent bundle of an `n`-manifold.
///
/// The evaluator is generic over [`Scalar`] so dual numbers flow through it
/// unchanged. It must be deterministic and free of side effects.
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S>;
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        (**self).eval(x, y)
    }
}

/// Requested derivative orders: `x` in `0..=1`, `y` in `0..=3`.
///
/// The mixed block `∂²F/∂x∂y` is filled whenever both orders are at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderMask {
    pub x: u8,
    pub y: u8,
}

impl OrderMask {
    pub const VALUE: OrderMask = OrderMask { x: 0, y: 0 };
    pub const METRIC: OrderMask = OrderMask { x: 0, y: 2 };
    pub const SPRAY: OrderMask = OrderMask { x: 1, y: 2 };
    pub const FULL: OrderMask = OrderMask { x: 1, y: 3 };

    pub fn new(x: u8, y: u8) -> Result<Self> {
        if x > 1 || y > 3 {
            return Err(Error::OrderUnsupported { x, y });
        }
        Ok(Self { x, y })
    }
}

/// Fully symmetric rank-3 array stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Value and partial derivatives of a scalar field at one point `(x, y)`.
///
/// Blocks that were not requested are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub n: usize,
    pub value: f64,
    /// `∂F/∂x^i`
    pub dx: Option<Vec<f64>>,
    /// `∂F/∂y^i`
    pub dy: Option<Vec<f64>>,
    /// `∂²F/∂y^i∂y^j`
    pub dydy: Option<DMatrix<f64>>,
    /// Row `i`, column `j`: `∂²F/∂x^j∂y^i`
    pub dxdy: Option<DMatrix<f64>>,
    /// `∂³F/∂y^i∂y^j∂y^k`
    pub dydydy: Option<Tensor3>,
    pub mask: OrderMask,
}

pub(crate) fn lift<S: Scalar>(v: &[S]) -> Vec<Dual<S>> {
    v.iter().map(|&c| Dual::constant(c)).collect()
}

fn lift2<S: Scalar>(v: &[S]) -> Vec<Dual<Dual<S>>> {
    v.iter().map(|&c| Dual::constant(Dual::constant(c))).collect()
}

fn one<S: Scalar>() -> S {
    S::from_f64(1.0)
}

/// Gradient with respect to `x` at a generic scalar point.
pub fn grad_x<S: Scalar, F: ScalarField>(f: &F, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let ly = lift(y);
    (0..x.len())
        .map(|i| {
            let mut lx = lift(x);
            lx[i].eps = one();
            Ok(f.eval(&lx, &ly)?.eps)
        })
        .collect()
}

/// Gradient with respect to `y` at a generic scalar point.
pub fn grad_y<S: Scalar, F: ScalarField>(f: &F, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let lx = lift(x);
    (0..y.len())
        .map(|i| {
            let mut ly = lift(y);
            ly[i].eps = one();
            Ok(f.eval(&lx, &ly)?.eps)
        })
        .collect()
}

/// Derivatives up to second order needed by the metric and the spray,
/// at a generic scalar point.
#[derive(Debug, Clone)]
pub struct SecondOrder<S> {
    pub value: S,
    pub dx: Vec<S>,
    pub dy: Vec<S>,
    /// `dydy[i][j] = ∂²F/∂y^i∂y^j`
    pub dydy: Vec<Vec<S>>,
    /// `dxdy[i][j] = ∂²F/∂x^j∂y^i`; empty unless requested.
    pub dxdy: Vec<Vec<S>>,
}

/// Value, gradients, `y`-Hessian and optionally the mixed block, via
/// second-order nested duals.
pub fn second_order<S: Scalar, F: ScalarField>(
    f: &F,
    x: &[S],
    y: &[S],
    with_mixed: bool,
) -> Result<SecondOrder<S>> {
    let n = y.len();
    let zero = S::from_f64(0.0);
    let mut dydy = vec![vec![zero; n]; n];
    let mut dy = vec![zero; n];
    let mut dx = vec![zero; n];
    let mut value = zero;
    let lx = lift2(x);
    for i in 0..n {
        for j in i..n {
            let mut ly = lift2(y);
            ly[i].re.eps = one();
            ly[j].eps.re = ly[j].eps.re + one();
            let r = f.eval(&lx, &ly)?;
            dydy[i][j] = r.eps.eps;
            dydy[j][i] = r.eps.eps;
            if i == j {
                dy[i] = r.re.eps;
                value = r.re.re;
            }
        }
    }
    let mut dxdy = Vec::new();
    if with_mixed {
        dxdy = vec![vec![zero; n]; n];
        for j in 0..n {
            for i in 0..n {
                let mut lx = lift2(x);
                let mut ly = lift2(y);
                lx[j].re.eps = one();
                ly[i].eps.re = one();
                let r = f.eval(&lx, &ly)?;
                dxdy[i][j] = r.eps.eps;
                if i == 0 {
                    dx[j] = r.re.eps;
                }
            }
        }
    } else if n > 0 {
        dx = grad_x(f, x, y)?;
    }
    Ok(SecondOrder {
        value,
        dx,
        dy,
        dydy,
        dxdy,
    })
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Evaluate a [`Jet`] of `f` at `(x, y)` with nested forward-mode duals.
pub fn jet_eval<F: ScalarField>(f: &F, x: &[f64], y: &[f64], mask: OrderMask) -> Result<Jet> {
    let mask = OrderMask::new(mask.x, mask.y)?;
    let n = f.dim();
    for v in [x, y] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let value = f.eval(x, y)?;
    let mut jet = Jet {
        n,
        value,
        dx: None,
        dy: None,
        dydy: None,
        dxdy: None,
        dydydy: None,
        mask,
    };
    if mask.x >= 1 {
        jet.dx = Some(grad_x(f, x, y)?);
    }
    if mask.y == 1 {
        jet.dy = Some(grad_y(f, x, y)?);
    }
    if mask.y >= 2 {
        let so = second_order(f, x, y, mask.x >= 1)?;
        debug_assert_schwarz(f, x, y, &so.dydy);
        jet.dy = Some(so.dy);
        jet.dydy = Some(to_matrix(&so.dydy));
        if mask.x >= 1 {
            jet.dxdy = Some(to_matrix(&so.dxdy));
        }
    } else if mask.y == 1 && mask.x >= 1 {
        let so = second_order(f, x, y, true)?;
        jet.dxdy = Some(to_matrix(&so.dxdy));
    }
    if mask.y >= 3 {
        jet.dydydy = Some(third_y(f, x, y)?);
    }
    Ok(jet)
}

/// Recomputes the lower triangle of the `y`-Hessian with the opposite
/// nesting order and checks it against the upper one.
#[cfg(debug_assertions)]
fn debug_assert_schwarz<F: ScalarField>(f: &F, x: &[f64], y: &[f64], h: &[Vec<f64>]) {
    let n = y.len();
    let scale = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let lx = lift2(x);
    for i in 0..n {
        for j in 0..i {
            let mut ly = lift2(y);
            ly[i].re.eps = 1.0;
            ly[j].eps.re = 1.0;
            if let Ok(r) = f.eval(&lx, &ly) {
                assert!(
                    (r.eps.eps - h[i][j]).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE),
                    "mixed partials not symmetric at ({i},{j})"
                );
            }
        }
    }
}

#[cfg(not(debug_assertions))]
fn debug_assert_schwarz<F: ScalarField>(_: &F, _: &[f64], _: &[f64], _: &[Vec<f64>]) {}

fn third_y<F: ScalarField>(f: &F, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    type D3 = Dual<Dual<Dual<f64>>>;
    let n = y.len();
    let c = |v: f64| -> D3 { D3::from_f64(v) };
    let lx: Vec<D3> = x.iter().map(|&v| c(v)).collect();
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let mut ly: Vec<D3> = y.iter().map(|&v| c(v)).collect();
                ly[i].re.re.eps += 1.0;
                ly[j].re.eps.re += 1.0;
                ly[k].eps.re.re += 1.0;
                let v = f.eval(&lx, &ly)?.eps.eps.eps;
                for (a, b, d) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    t.set(a, b, d, v);
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprField;

    fn field(src: &str, n: usize) -> ExprField {
        ExprField::parse(src, n).unwrap()
    }

    #[test]
    fn quadratic_form() {
        let f = field("y0^2 - y1^2", 2);
        let j = jet_eval(&f, &[0.3, -1.0], &[1.0, 1.0], OrderMask::SPRAY).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.dy.unwrap(), vec![2.0, -2.0]);
        assert_eq!(j.dydy.unwrap(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0]));
        assert_eq!(j.dx.unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bilinear_form() {
        let f = field("y0*y1", 2);
        let j = jet_eval(&f, &[0.0, 0.0], &[2.0, 3.0], OrderMask::METRIC).unwrap();
        assert_eq!(j.value, 6.0);
        assert_eq!(j.dy.unwrap(), vec![3.0, 2.0]);
        assert_eq!(j.dydy.unwrap(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(j.dydydy.is_none());
    }

    #[test]
    fn mixed_block_and_x_gradient() {
        // Reference values from central differences (step 1e-5): dx = (1, 0)
        // and ∂²F/∂x0∂y0 = 2.
        let f = field("exp(x0)*(y0^2 - y1^2)", 2);
        let j = jet_eval(&f, &[0.0, 0.0], &[1.0, 0.0], OrderMask::SPRAY).unwrap();
        let dx = j.dx.unwrap();
        assert!((dx[0] - 1.0).abs() < 1e-6 && dx[1].abs() < 1e-6);
        let m = j.dxdy.unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-6);
        assert_eq!(m[(1, 0)], 0.0);
    }

    #[test]
    fn third_order_block() {
        // ∂³/∂y0²∂y1 of y0^2*y1 is 2.
        let f = field("y0^2*y1 + y2^3", 3);
        let j = jet_eval(&f, &[0.0; 3], &[0.5, 1.5, 2.0], OrderMask::FULL).unwrap();
        let t = j.dydydy.unwrap();
        assert_eq!(t.get(0, 0, 1), 2.0);
        assert_eq!(t.get(1, 0, 0), 2.0);
        assert_eq!(t.get(2, 2, 2), 6.0);
        assert_eq!(t.get(0, 1, 2), 0.0);
    }

    #[test]
    fn order_mask_bounds() {
        assert!(matches!(OrderMask::new(2, 0), Err(Error::OrderUnsupported { .. })));
        assert!(matches!(OrderMask::new(0, 4), Err(Error::OrderUnsupported { .. })));
        let f = field("y0", 1);
        let err = jet_eval(&f, &[0.0], &[1.0], OrderMask { x: 0, y: 5 }).unwrap_err();
        assert!(matches!(err, Error::OrderUnsupported { .. }));
    }

    #[test]
    fn domain_error_propagates() {
        let f = field("ln(y0)", 1);
        assert!(matches!(
            jet_eval(&f, &[0.0], &[-1.0], OrderMask::METRIC),
            Err(Error::Domain(_))
        ));
    }
}
