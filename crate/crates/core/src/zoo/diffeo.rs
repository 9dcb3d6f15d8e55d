use crate::autodiff::{PointMap, Scalar};
use crate::error::{Error, Result};
use crate::expr::{parse, Env, Expr, VarKind};

/// Whether component `i` depends on `x^i` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Componentwise,
    General,
}

/// Analytic map `x ↦ f(x)` given by one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoSpec {
    n: usize,
    components: Vec<Expr>,
    inverse: Option<Vec<Expr>>,
    kind: MapKind,
    label: String,
}

fn check_components(components: &[Expr], n: usize) -> Result<()> {
    if components.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: components.len(),
        });
    }
    for c in components {
        if c.depends_on_y() {
            return Err(Error::domain(format!("map component `{c}` depends on y")));
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
    Ok(())
}

impl DiffeoSpec {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        let n = components.len();
        check_components(&components, n)?;
        let componentwise = components.iter().enumerate().all(|(i, c)| {
            c.free_vars()
                .iter()
                .all(|v| v.kind == VarKind::X && v.index == i)
        });
        let label = components
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        Ok(Self {
            n,
            components,
            inverse: None,
            kind: if componentwise {
                MapKind::Componentwise
            } else {
                MapKind::General
            },
            label: format!("({label})"),
        })
    }

    pub fn parse(sources: &[&str]) -> Result<Self> {
        let n = sources.len();
        let components = sources
            .iter()
            .map(|s| parse(s, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    pub fn identity(n: usize) -> Self {
        let srcs: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = srcs.iter().map(|s| s.as_str()).collect();
        Self::parse(&refs).expect("identity map parses")
    }

    pub fn with_inverse(mut self, inverse: Vec<Expr>) -> Result<Self> {
        check_components(&inverse, self.n)?;
        self.inverse = Some(inverse);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn inverse(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Apply the declared inverse, if any.
    pub fn apply_inverse(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        let inv = self.inverse.as_ref()?;
        Some(inv.iter().map(|c| c.eval(&Env::x_only(x))).collect())
    }
}

impl PointMap for DiffeoSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        let env = Env::x_only(x);
        self.components.iter().map(|c| c.eval(&env)).collect()
    }
}
