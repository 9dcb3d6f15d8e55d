use std::fmt;
use std::sync::Arc;

use crate::autodiff::{jacobian_generic, Scalar, ScalarField};
use crate::conformal::VectorFieldSpec;
use crate::error::{Error, Result};
use crate::expr::{check_sigma, Env, Expr};

use super::DiffeoSpec;

/// Smallest `|y^i|` a Berwald–Moor direction may have.
pub const BM_COMPONENT_FLOOR: f64 = 1e-12;

/// Relative floor below which a factor Lagrangian counts as zero.
pub const FACTOR_NULL_FLOOR: f64 = 1e-12;

/// Signature `(q, n - q)`: number of negative and positive eigenvalues.
pub type Signature = (usize, usize);

#[derive(Debug)]
pub(crate) enum Kind {
    PseudoEuclidean {
        signs: Vec<f64>,
    },
    BerwaldMoor {
        orthant: Vec<f64>,
    },
    WeightedProduct {
        first: Lagrangian,
        second: Lagrangian,
        alpha: f64,
    },
    Conformal {
        base: Lagrangian,
        sigma: Expr,
    },
    Pullback {
        base: Lagrangian,
        map: DiffeoSpec,
    },
    Rescaled {
        base: Lagrangian,
        field: VectorFieldSpec,
    },
}

/// A pseudo-Finsler Lagrangian `L: A → ℝ`, positively 2-homogeneous in `y`.
///
/// Cheap to clone; composite Lagrangians share their parts.
#[derive(Clone)]
pub struct Lagrangian {
    n: usize,
    pub(crate) kind: Arc<Kind>,
    label: String,
}

impl fmt::Debug for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lagrangian")
            .field("n", &self.n)
            .field("label", &self.label)
            .finish()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// `L(y) = Σ sᵢ (yⁱ)²` with `sᵢ = ±1`.
pub fn make_pseudo_euclidean(signs: &[f64]) -> Result<Lagrangian> {
    if signs.is_empty() {
        return Err(Error::domain("pseudo-Euclidean metric needs n >= 1"));
    }
    if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
        return Err(Error::domain("pseudo-Euclidean signs must be +1 or -1"));
    }
    let label: String = signs.iter().map(|s| if *s > 0.0 { '+' } else { '-' }).collect();
    Ok(Lagrangian {
        n: signs.len(),
        kind: Arc::new(Kind::PseudoEuclidean {
            signs: signs.to_vec(),
        }),
        label: format!("pseudo_euclidean({label})"),
    })
}

/// Minkowski metric `(y⁰)² − (y¹)² − … − (yⁿ⁻¹)²`.
pub fn make_minkowski(n: usize) -> Result<Lagrangian> {
    let mut signs = vec![-1.0; n];
    if n > 0 {
        signs[0] = 1.0;
    }
    make_pseudo_euclidean(&signs)
}

/// Berwald–Moor `L(y) = ε |y⁰y¹⋯yⁿ⁻¹|^{2/n}`, `ε = sign(y⁰⋯yⁿ⁻¹)`, on
/// `A = {y⁰⋯yⁿ⁻¹ ≠ 0}`. Sampling targets the positive orthant.
pub fn make_berwald_moor(n: usize) -> Result<Lagrangian> {
    if n < 2 {
        return Err(Error::domain("Berwald-Moor metric needs n >= 2"));
    }
    Ok(Lagrangian {
        n,
        kind: Arc::new(Kind::BerwaldMoor {
            orthant: vec![1.0; n],
        }),
        label: format!("berwald_moor({n})"),
    })
}

/// `L = sign(L₁)sign(L₂)·|L₁|^α·|L₂|^{1−α}` on `TℝᵏxTℝⁿ⁻ᵏ`, defined where
/// both factors are nonzero.
pub fn make_weighted_product(first: &Lagrangian, second: &Lagrangian, alpha: f64) -> Result<Lagrangian> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("weight {alpha} not in (0, 1)")));
    }
    Ok(Lagrangian {
        n: first.n + second.n,
        label: format!("weighted_product({}^{alpha} * {}^{})", first.label, second.label, 1.0 - alpha),
        kind: Arc::new(Kind::WeightedProduct {
            first: first.clone(),
            second: second.clone(),
            alpha,
        }),
    })
}

/// `L̃(x, y) = e^{σ(x)} L(x, y)`.
pub fn conformal_deform(base: &Lagrangian, sigma: &Expr) -> Result<Lagrangian> {
    check_sigma(sigma)?;
    if let Some(i) = sigma.max_index() {
        if i >= base.n {
            return Err(Error::IndexOutOfRange {
                name: format!("x{i}"),
                n: base.n,
                offset: 0,
            });
        }
    }
    Ok(Lagrangian {
        n: base.n,
        label: format!("exp({sigma}) * {}", base.label),
        kind: Arc::new(Kind::Conformal {
            base: base.clone(),
            sigma: sigma.clone(),
        }),
    })
}

/// `L̃ = L′ ∘ df`, i.e. `L̃(x, y) = L′(f(x), Df(x)·y)`.
pub fn pullback(target: &Lagrangian, map: &DiffeoSpec) -> Result<Lagrangian> {
    use crate::autodiff::PointMap;
    if map.dim() != target.n {
        return Err(Error::DimensionMismatch {
            expected: target.n,
            got: map.dim(),
        });
    }
    Ok(Lagrangian {
        n: target.n,
        label: format!("{} o d{}", target.label, map.label()),
        kind: Arc::new(Kind::Pullback {
            base: target.clone(),
            map: map.clone(),
        }),
    })
}

/// `L̃(x, y) = L(x, y) / α(x)` with `α(x) = L(x, ξ(x))`.
pub fn rescale_by_field(base: &Lagrangian, field: &VectorFieldSpec) -> Result<Lagrangian> {
    if field.dim() != base.n {
        return Err(Error::DimensionMismatch {
            expected: base.n,
            got: field.dim(),
        });
    }
    Ok(Lagrangian {
        n: base.n,
        label: format!("{} / L(xi={})", base.label, field.label()),
        kind: Arc::new(Kind::Rescaled {
            base: base.clone(),
            field: field.clone(),
        }),
    })
}

impl Lagrangian {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Restrict Berwald–Moor sampling to the orthant with the given signs.
    pub fn with_orthant(self, signs: &[f64]) -> Result<Self> {
        match &*self.kind {
            Kind::BerwaldMoor { .. } if signs.len() == self.n => Ok(Lagrangian {
                n: self.n,
                kind: Arc::new(Kind::BerwaldMoor {
                    orthant: signs.iter().map(|s| s.signum()).collect(),
                }),
                label: self.label,
            }),
            Kind::BerwaldMoor { .. } => Err(Error::DimensionMismatch {
                expected: self.n,
                got: signs.len(),
            }),
            _ => Err(Error::domain("orthant selection applies to Berwald-Moor only")),
        }
    }

    /// `true` for Lagrangians whose `x`-dependence is trivial in the given
    /// chart (pseudo-Euclidean, Berwald–Moor and products of those).
    pub fn is_x_independent(&self) -> bool {
        match &*self.kind {
            Kind::PseudoEuclidean { .. } | Kind::BerwaldMoor { .. } => true,
            Kind::WeightedProduct { first, second, .. } => {
                first.is_x_independent() && second.is_x_independent()
            }
            Kind::Conformal { base, sigma } => sigma.is_constant() && base.is_x_independent(),
            Kind::Pullback { .. } | Kind::Rescaled { .. } => false,
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dims(x, y)?;
        self.eval(x, y)
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        for v in [x, y] {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Membership of `(x, y)` in the admissible set `A`.
    pub fn admissible(&self, x: &[f64], y: &[f64]) -> bool {
        if x.len() != self.n || y.len() != self.n || y.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match &*self.kind {
            Kind::PseudoEuclidean { .. } => norm2(y) > 0.0,
            Kind::BerwaldMoor { .. } => y.iter().all(|c| c.abs() > BM_COMPONENT_FLOOR),
            Kind::WeightedProduct { first, second, .. } => {
                let k = first.n;
                let ok = |l: &Lagrangian, x: &[f64], y: &[f64]| {
                    l.admissible(x, y)
                        && l.value(x, y)
                            .map(|v| v.abs() > FACTOR_NULL_FLOOR * norm2(y))
                            .unwrap_or(false)
                };
                ok(first, &x[..k], &y[..k]) && ok(second, &x[k..], &y[k..])
            }
            Kind::Conformal { base, sigma } => {
                base.admissible(x, y) && sigma.eval_f64(x, &[]).map(f64::is_finite).unwrap_or(false)
            }
            Kind::Pullback { base, map } => match jacobian_generic(map, x) {
                Ok((fx, jac)) => {
                    let ty = mat_vec(&jac, y);
                    base.admissible(&fx, &ty)
                }
                Err(_) => false,
            },
            Kind::Rescaled { base, field } => {
                base.admissible(x, y)
                    && match field.eval_f64(x) {
                        Ok(xi) => {
                            base.admissible(x, &xi)
                                && base
                                    .value(x, &xi)
                                    .map(|a| a.abs() > FACTOR_NULL_FLOOR * norm2(&xi))
                                    .unwrap_or(false)
                        }
                        Err(_) => false,
                    }
            }
        }
    }

    /// Signature the metric tensor must have at `(x, y)`, when known from
    /// the construction. Berwald–Moor with `n ≥ 3` has signature
    /// `(n−1, 1)` where `ε = +1` and `(1, n−1)` where `ε = −1`.
    pub fn declared_signature(&self, x: &[f64], y: &[f64]) -> Option<Signature> {
        match &*self.kind {
            Kind::PseudoEuclidean { signs } => {
                let neg = signs.iter().filter(|s| **s < 0.0).count();
                Some((neg, signs.len() - neg))
            }
            Kind::BerwaldMoor { .. } => {
                let eps: f64 = y.iter().product::<f64>().signum();
                if eps > 0.0 {
                    Some((self.n - 1, 1))
                } else {
                    Some((1, self.n - 1))
                }
            }
            Kind::WeightedProduct { .. } => None,
            Kind::Conformal { base, .. } => base.declared_signature(x, y),
            Kind::Pullback { base, map } => {
                let (fx, jac) = jacobian_generic(map, x).ok()?;
                base.declared_signature(&fx, &mat_vec(&jac, y))
            }
            Kind::Rescaled { base, field } => {
                let xi = field.eval_f64(x).ok()?;
                let alpha = base.value(x, &xi).ok()?;
                let (q, p) = base.declared_signature(x, y)?;
                Some(if alpha > 0.0 { (q, p) } else { (p, q) })
            }
        }
    }
}

pub(crate) fn mat_vec<S: Scalar>(m: &[Vec<S>], v: &[S]) -> Vec<S> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(S::from_f64(0.0), |acc, (&a, &b)| acc + a * b)
        })
        .collect()
}

fn sq_norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|c| c.re() * c.re()).sum()
}

impl ScalarField for Lagrangian {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        match &*self.kind {
            Kind::PseudoEuclidean { signs } => Ok(signs
                .iter()
                .zip(y)
                .fold(S::from_f64(0.0), |acc, (&s, &c)| acc + (c * c).scale(s))),
            Kind::BerwaldMoor { .. } => {
                if let Some(c) = y.iter().find(|c| c.re().abs() <= BM_COMPONENT_FLOOR) {
                    return Err(Error::domain(format!(
                        "Berwald-Moor evaluated with |y^i| = {:e} <= {BM_COMPONENT_FLOOR:e}",
                        c.re().abs()
                    )));
                }
                let p = y[1..].iter().fold(y[0], |acc, &c| acc * c);
                if self.n == 2 {
                    Ok(p)
                } else {
                    Ok(p.sign() * p.abs().powf(2.0 / self.n as f64))
                }
            }
            Kind::WeightedProduct {
                first,
                second,
                alpha,
            } => {
                let k = first.n;
                let l1 = first.eval(&x[..k], &y[..k])?;
                let l2 = second.eval(&x[k..], &y[k..])?;
                for (l, part) in [(l1, &y[..k]), (l2, &y[k..])] {
                    if l.re().abs() <= FACTOR_NULL_FLOOR * sq_norm(part) {
                        return Err(Error::domain("weighted product factor vanishes"));
                    }
                }
                Ok(l1.sign() * l2.sign() * l1.abs().powf(*alpha) * l2.abs().powf(1.0 - alpha))
            }
            Kind::Conformal { base, sigma } => {
                let s = sigma.eval(&Env::x_only(x))?;
                Ok(s.exp() * base.eval(x, y)?)
            }
            Kind::Pullback { base, map } => {
                let (fx, jac) = jacobian_generic(map, x)?;
                base.eval(&fx, &mat_vec(&jac, y))
            }
            Kind::Rescaled { base, field } => {
                let xi = field.eval(x)?;
                let alpha = base.eval(x, &xi)?;
                if alpha.re().abs() <= FACTOR_NULL_FLOOR * sq_norm(&xi) {
                    return Err(Error::domain("rescaling field is null"));
                }
                Ok(base.eval(x, y)? / alpha)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_y, second_order};
    use crate::expr::{parse, parse_sigma};

    fn mink2() -> Lagrangian {
        make_pseudo_euclidean(&[1.0, -1.0]).unwrap()
    }

    #[test]
    fn pseudo_euclidean_values() {
        let l = mink2();
        assert_eq!(l.value(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(l.value(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(l.declared_signature(&[0.0; 2], &[1.0, 0.0]), Some((1, 1)));
        let e = make_pseudo_euclidean(&[1.0, 1.0]).unwrap();
        assert_eq!(e.declared_signature(&[0.0; 2], &[1.0, 0.0]), Some((0, 2)));
        assert!(make_pseudo_euclidean(&[1.0, 0.5]).is_err());
        assert!(!l.admissible(&[0.0; 2], &[0.0, 0.0]));
    }

    #[test]
    fn berwald_moor_values() {
        let bm2 = make_berwald_moor(2).unwrap();
        assert_eq!(bm2.value(&[0.0; 2], &[2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(bm2.value(&[0.0; 2], &[1.0, -1.0]).unwrap(), -1.0);
        let bm4 = make_berwald_moor(4).unwrap();
        assert_eq!(bm4.value(&[0.0; 4], &[1.0; 4]).unwrap(), 1.0);
        let v = bm4.value(&[0.0; 4], &[1.0, 2.0, -4.0, 0.5]).unwrap();
        assert!((v + 4f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            bm2.value(&[0.0; 2], &[1e-13, 1.0]),
            Err(Error::Domain(_))
        ));
        assert!(!bm2.admissible(&[0.0; 2], &[0.0, 1.0]));
        assert!(make_berwald_moor(1).is_err());
    }

    #[test]
    fn berwald_moor_metric_n2() {
        let bm2 = make_berwald_moor(2).unwrap();
        let so = second_order(&bm2, &[0.0, 0.0], &[2.0, 3.0], false).unwrap();
        assert_eq!(so.dydy, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn weighted_product_values() {
        let l1 = make_pseudo_euclidean(&[1.0]).unwrap();
        let wp = make_weighted_product(&l1, &mink2(), 0.5).unwrap();
        assert_eq!(wp.dim(), 3);
        let v = wp.value(&[0.0; 3], &[1.0, 1.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v1 = wp.value(&[0.0; 3], &[0.3, 0.2, 0.7]).unwrap();
        let v2 = wp.value(&[0.0; 3], &[0.6, 0.4, 1.4]).unwrap();
        assert!((v2 - 4.0 * v1).abs() < 1e-14);
        assert!(v1 < 0.0);
        // L1 = 0
        assert!(matches!(wp.value(&[0.0; 3], &[0.0, 1.0, 0.0]), Err(Error::Domain(_))));
        assert!(!wp.admissible(&[0.0; 3], &[0.0, 1.0, 0.0]));
        // L2 = 0 (null in the Minkowski factor)
        assert!(!wp.admissible(&[0.0; 3], &[1.0, 1.0, 1.0]));
        assert!(make_weighted_product(&l1, &mink2(), 1.0).is_err());
    }

    #[test]
    fn conformal_deformation() {
        let zero = parse_sigma("0", 2).unwrap();
        let same = conformal_deform(&mink2(), &zero).unwrap();
        assert_eq!(same.value(&[0.3, 0.1], &[0.7, 0.2]).unwrap(), mink2().value(&[0.3, 0.1], &[0.7, 0.2]).unwrap());

        let sx = parse_sigma("x0", 2).unwrap();
        let d = conformal_deform(&mink2(), &sx).unwrap();
        assert_eq!(d.value(&[0.0, 5.0], &[1.0, 0.0]).unwrap(), 1.0);
        let so = second_order(&d, &[0.0, 0.0], &[1.0, 0.0], false).unwrap();
        assert_eq!(so.dydy, vec![vec![2.0, 0.0], vec![0.0, -2.0]]);

        let sy = parse("y0", 2).unwrap();
        assert!(matches!(conformal_deform(&mink2(), &sy), Err(Error::YDependentSigma(_))));
    }

    #[test]
    fn pullback_identity_and_bm_example() {
        let id = DiffeoSpec::identity(2);
        let pid = pullback(&mink2(), &id).unwrap();
        assert_eq!(pid.value(&[0.4, 0.2], &[0.3, 0.9]).unwrap(), mink2().value(&[0.4, 0.2], &[0.3, 0.9]).unwrap());

        // Df = diag(4, 1) at x = (1, 0); L̃ = J·L = 4.
        let bm = make_berwald_moor(2).unwrap();
        let f = DiffeoSpec::parse(&["x0 + x0^3", "x1"]).unwrap();
        let pb = pullback(&bm, &f).unwrap();
        assert_eq!(pb.value(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn pullback_leaving_the_cone_is_a_domain_error() {
        // Df = diag(3x0², 1) vanishes at x0 = 0, so Df·y has a zero component.
        let bm = make_berwald_moor(2).unwrap();
        let f = DiffeoSpec::parse(&["x0^3", "x1"]).unwrap();
        let pb = pullback(&bm, &f).unwrap();
        assert!(matches!(pb.value(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::Domain(_))));
        assert!(!pb.admissible(&[0.0, 0.0], &[1.0, 1.0]));
    }

    #[test]
    fn rescaled_by_radial_field() {
        let bm = make_berwald_moor(2).unwrap();
        let r = rescale_by_field(&bm, &VectorFieldSpec::radial(2)).unwrap();
        let v = r.value(&[2.0, 0.5], &[3.0, 1.0]).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        let spec = VectorFieldSpec::parse(&["x1", "x0"]).unwrap();
        let m = rescale_by_field(&mink2(), &spec).unwrap();
        assert!(!m.admissible(&[1.0, 1.0], &[1.0, 0.0]));
    }

    #[test]
    fn euler_identity_spot_check() {
        let bm3 = make_berwald_moor(3).unwrap();
        let y = [1.0, 2.0, 3.0];
        let l = bm3.value(&[0.0; 3], &y).unwrap();
        let dy = grad_y(&bm3, &[0.0; 3], &y).unwrap();
        let euler: f64 = dy.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((euler - 2.0 * l).abs() < 1e-13);
    }
}
