use crate::autodiff::{jacobian_generic, Dual, PointMap, Scalar, ScalarField};
use crate::error::{Error, Result};
use crate::expr::{parse, Env, Expr};

/// Vector field `ξ = ξ^i(x) ∂_i` on `M`, one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSpec {
    n: usize,
    components: Vec<Expr>,
    label: String,
}

impl VectorFieldSpec {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        let n = components.len();
        for c in &components {
            if c.depends_on_y() {
                return Err(Error::domain(format!("field component `{c}` depends on y")));
            }
            if let Some(i) = c.max_index() {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        name: format!("x{i}"),
                        n,
                        offset: 0,
                    });
                }
            }
        }
        let label = format!(
            "({})",
            components
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
        Ok(Self {
            n,
            components,
            label,
        })
    }

    pub fn parse(sources: &[&str]) -> Result<Self> {
        let n = sources.len();
        let comps = sources
            .iter()
            .map(|s| parse(s, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    /// `ξ = x^i ∂_i`, generating the dilations.
    pub fn radial(n: usize) -> Self {
        let srcs: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = srcs.iter().map(|s| s.as_str()).collect();
        Self::parse(&refs).expect("radial field parses").with_label("radial")
    }

    /// Constant field, generating translations.
    pub fn constant(v: &[f64]) -> Self {
        let comps = v.iter().map(|&c| Expr::Num(c)).collect();
        Self::new(comps).expect("constant field is valid")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let env = Env::x_only(x);
        self.components.iter().map(|c| c.eval(&env)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x)
    }
}

impl PointMap for VectorFieldSpec {
    fn dim(&self) -> usize {
        self.n
    }

    /// The component values `ξ(x)`.
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.eval(x)
    }
}

/// Steps per unit of flow parameter used by [`flow`].
pub const FLOW_STEPS: usize = 100;

const BLOWUP: f64 = 1e12;

fn axpy<S: Scalar>(a: S, x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&xi, &yi)| a * xi + yi).collect()
}

/// Flow `φ_ε(x0)` of `ξ` by classic RK4 with step `ε/100`.
///
/// Generic over the scalar type, so `Dφ_ε` is available through duals.
pub fn flow<S: Scalar>(xi: &VectorFieldSpec, x0: &[S], eps: f64) -> Result<Vec<S>> {
    if eps == 0.0 {
        return Ok(x0.to_vec());
    }
    let h = eps / FLOW_STEPS as f64;
    let half = S::from_f64(0.5 * h);
    let full = S::from_f64(h);
    let sixth = S::from_f64(h / 6.0);
    let two = S::from_f64(2.0);
    let mut x = x0.to_vec();
    for _ in 0..FLOW_STEPS {
        let k1 = xi.eval(&x)?;
        let k2 = xi.eval(&axpy(half, &k1, &x))?;
        let k3 = xi.eval(&axpy(half, &k2, &x))?;
        let k4 = xi.eval(&axpy(full, &k3, &x))?;
        for i in 0..x.len() {
            x[i] = x[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let norm = x.iter().map(|v| v.re() * v.re()).sum::<f64>().sqrt();
        if !(norm <= BLOWUP) {
            return Err(Error::FlowBlowup(norm));
        }
    }
    Ok(x)
}

/// The time-`ε` flow map of a vector field as a [`PointMap`].
#[derive(Debug, Clone)]
pub struct FlowMap<'a> {
    pub field: &'a VectorFieldSpec,
    pub eps: f64,
}

impl PointMap for FlowMap<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn apply<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        flow(self.field, x, self.eps)
    }
}

/// `𝓛_{ξ^c} L = ξ^i L_{,i} + ξ^i_{,j} y^j L_{·i}`.
///
/// Evaluated as one directional derivative of `L` along the complete lift
/// `(ξ(x), Dξ(x)·y)`.
pub fn lie_derivative<F: ScalarField>(l: &F, xi: &VectorFieldSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let (v, dxi) = jacobian_generic(xi, x)?;
    let n = x.len();
    let xs: Vec<Dual<f64>> = (0..n).map(|i| Dual::new(x[i], v[i])).collect();
    let ys: Vec<Dual<f64>> = (0..n)
        .map(|i| {
            let w: f64 = (0..n).map(|j| dxi[i][j] * y[j]).sum();
            Dual::new(y[i], w)
        })
        .collect();
    Ok(l.eval(&xs, &ys)?.eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_flow_is_dilation() {
        let xi = VectorFieldSpec::radial(3);
        let x0 = [1.0, -2.0, 0.5];
        let eps: f64 = 0.3;
        let x = flow(&xi, &x0, eps).unwrap();
        for i in 0..3 {
            assert!((x[i] - eps.exp() * x0[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_flow_is_translation() {
        let xi = VectorFieldSpec::constant(&[1.0, -0.5]);
        let x = flow(&xi, &[2.0, 3.0], 0.4).unwrap();
        assert!((x[0] - 2.4).abs() < 1e-13);
        assert!((x[1] - 2.8).abs() < 1e-13);
    }

    #[test]
    fn zero_time_is_identity() {
        let xi = VectorFieldSpec::parse(&["x1", "sin(x0)"]).unwrap();
        assert_eq!(flow(&xi, &[0.3, 0.7], 0.0).unwrap(), vec![0.3, 0.7]);
    }

    #[test]
    fn blowup_detected() {
        // ẋ = x², finite-time blowup at t = 1/x0
        let xi = VectorFieldSpec::parse(&["x0^2"]).unwrap();
        assert!(matches!(flow(&xi, &[1e6], 10.0), Err(Error::FlowBlowup(_))));
    }

    #[test]
    fn flow_differential_through_duals() {
        let xi = VectorFieldSpec::radial(2);
        let map = FlowMap { field: &xi, eps: 0.2 };
        let j = crate::autodiff::jacobian(&map, &[1.0, 1.0]).unwrap();
        assert!((j.matrix[(0, 0)] - 0.2f64.exp()).abs() < 1e-12);
        assert!(j.matrix[(0, 1)].abs() < 1e-15);
    }
}
