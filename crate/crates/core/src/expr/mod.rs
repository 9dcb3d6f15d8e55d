//! Analytic expression language for conformal factors, maps and vector
//! fields. See `GRAMMAR.md` at the repository root for the syntax.

mod ast;
mod parser;

pub use ast::{BinOp, Env, Expr, Func, Var, VarKind};
pub use parser::parse;

use crate::autodiff::{Scalar, ScalarField};
use crate::error::{Error, Result};

/// An expression viewed as a scalar field `F(x, y)` in dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprField {
    pub expr: Expr,
    pub n: usize,
}

impl ExprField {
    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Ok(Self {
            expr: parse(src, n)?,
            n,
        })
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        self.expr.eval(&Env::new(x, y))
    }
}

/// Parse a conformal factor, which must depend on `x` only.
pub fn parse_sigma(src: &str, n: usize) -> Result<Expr> {
    let e = parse(src, n)?;
    check_sigma(&e)?;
    Ok(e)
}

pub fn check_sigma(e: &Expr) -> Result<()> {
    if e.depends_on_y() {
        return Err(Error::YDependentSigma(e.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{fd_check, Dual, OrderMask};
    use crate::error::ParseError;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(src: &str, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        parse(src, n)?.eval_f64(x, y)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("2*x0+1", 1, &[3.0], &[]).unwrap(), 7.0);
        assert_eq!(ev("2^3^2", 1, &[], &[]).unwrap(), 512.0);
        assert_eq!(ev("-2^2", 1, &[], &[]).unwrap(), -4.0);
        assert_eq!(ev("2^-1", 1, &[], &[]).unwrap(), 0.5);
        assert_eq!(ev("8/2/2", 1, &[], &[]).unwrap(), 2.0);
        assert_eq!(ev("1 - 2 - 3", 1, &[], &[]).unwrap(), -4.0);
        assert_eq!(ev(" ( 1 +\t2 ) * 3 ", 1, &[], &[]).unwrap(), 9.0);
        assert_eq!(ev("1.5e2 + .5", 1, &[], &[]).unwrap(), 150.5);
    }

    #[test]
    fn functions() {
        assert_eq!(ev("exp(x0)", 1, &[0.0], &[]).unwrap(), 1.0);
        assert_eq!(ev("sign(y0*y1)*abs(y0*y1)", 2, &[], &[-1.0, 2.0]).unwrap(), -2.0);
        let e = std::f64::consts::E;
        assert!((ev("(2/2)*ln(x0)", 1, &[e], &[]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ev("sqrt(4) + cos(0) + sin(0) + tanh(0)", 1, &[], &[]).unwrap(), 3.0);
    }

    #[test]
    fn cubic_map_component_and_its_derivative() {
        let e = parse("x0 + x0^3", 2).unwrap();
        assert_eq!(e.eval_f64(&[1.0, 0.0], &[]).unwrap(), 2.0);
        let x = [Dual::variable(1.0), Dual::constant(0.0)];
        let d = e.eval(&Env::x_only(&x)).unwrap();
        assert_eq!(d.eps, 4.0);
    }

    #[test]
    fn unbalanced_paren_reports_end_offset() {
        match parse("ln(x0", 1) {
            Err(Error::Parse(ParseError { offset, found, expected })) => {
                assert_eq!(offset, 6);
                assert_eq!(found, "end of input");
                assert!(expected.iter().any(|e| e == "`)`"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse("", 1), Err(Error::Parse(_))));
        assert!(matches!(parse("1 +", 1), Err(Error::Parse(ParseError { offset: 4, .. }))));
        assert!(matches!(parse("1 2", 1), Err(Error::Parse(ParseError { offset: 3, .. }))));
        assert!(matches!(parse("x0 $ 1", 1), Err(Error::Parse(ParseError { offset: 4, .. }))));
        assert!(matches!(parse("exp x0", 1), Err(Error::Parse(_))));
        assert!(matches!(parse("1e999", 1), Err(Error::Parse(_))));
    }

    #[test]
    fn identifier_errors() {
        assert!(matches!(
            parse("z0 + 1", 1),
            Err(Error::UnknownIdentifier { offset: 1, .. })
        ));
        assert!(matches!(parse("pi", 1), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse("x01", 2), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(
            parse("x0 + y2", 2),
            Err(Error::IndexOutOfRange { n: 2, offset: 6, .. })
        ));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ev("ln(x0)", 1, &[0.0], &[]), Err(Error::Domain(_))));
        assert!(matches!(ev("1/x0", 1, &[0.0], &[]), Err(Error::Domain(_))));
        assert!(matches!(ev("x0^-1", 1, &[0.0], &[]), Err(Error::Domain(_))));
        assert!(matches!(ev("x0^0.5", 1, &[-1.0], &[]), Err(Error::Domain(_))));
        assert!(matches!(ev("x0^x0", 1, &[-1.0], &[]), Err(Error::Domain(_))));
        assert!(matches!(ev("sqrt(x0)", 1, &[-1.0], &[]), Err(Error::Domain(_))));
        assert_eq!(ev("x0^3", 1, &[-2.0], &[]).unwrap(), -8.0);
        assert_eq!(ev("x0^x0", 1, &[2.0], &[]).unwrap(), 4.0);
    }

    #[test]
    fn free_variables() {
        let names = |s: &str| parse(s, 2).unwrap().free_var_names().into_iter().collect::<Vec<_>>();
        assert_eq!(names("x0+1"), vec!["x0"]);
        assert_eq!(names("y1*x0"), vec!["x0", "y1"]);
        assert!(names("3").is_empty());
    }

    #[test]
    fn sigma_must_not_depend_on_y() {
        assert!(parse_sigma("x0 + sin(x1)", 2).is_ok());
        assert!(matches!(parse_sigma("y0", 2), Err(Error::YDependentSigma(_))));
        assert!(matches!(parse_sigma("x0*y1", 2), Err(Error::YDependentSigma(_))));
    }

    /// Random smooth expression in x0, x1, y0, y1, built from operations
    /// that stay in their domain for arguments in [0.5, 1.5].
    fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
        let leaf = |rng: &mut ChaCha8Rng| -> String {
            match rng.random_range(0..5) {
                0 => format!("{:.3}", rng.random_range(0.5..2.0)),
                1 => "x0".into(),
                2 => "x1".into(),
                3 => "y0".into(),
                _ => "y1".into(),
            }
        };
        if depth == 0 {
            return leaf(rng);
        }
        let a = random_expr(rng, depth - 1);
        let b = random_expr(rng, depth - 1);
        match rng.random_range(0..9) {
            0 => format!("({a} + {b})"),
            1 => format!("({a} - {b})"),
            2 => format!("({a} * {b})"),
            3 => format!("({a} / (1 + ({b})^2))"),
            4 => format!("sin({a})"),
            5 => format!("exp(0.3*{a})"),
            6 => format!("ln(1 + ({a})^2)"),
            7 => format!("tanh({a})*{b}"),
            _ => format!("sqrt(1 + ({a})^2)^3"),
        }
    }

    #[test]
    fn dual_derivatives_match_finite_differences_on_random_expressions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let src = random_expr(&mut rng, 3);
            let f = ExprField::parse(&src, 2).unwrap();
            let x = [rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)];
            let y = [rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)];
            let r = fd_check(&f, &x, &y, OrderMask::SPRAY).unwrap();
            assert!(r.max_discrepancy <= 1e-6, "{src}: {r:?}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            (0usize..3).prop_map(|i| Expr::Var(Var { kind: VarKind::X, index: i })),
            (0usize..3).prop_map(|i| Expr::Var(Var { kind: VarKind::Y, index: i })),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0usize..5).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                    Expr::Bin(op, Box::new(a), Box::new(b))
                }),
                (inner, 0usize..8).prop_map(|(a, k)| {
                    let f = [
                        Func::Exp,
                        Func::Ln,
                        Func::Sin,
                        Func::Cos,
                        Func::Tanh,
                        Func::Abs,
                        Func::Sign,
                        Func::Sqrt,
                    ][k];
                    Expr::Call(f, Box::new(a))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed, 3).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(parse(&reparsed.to_string(), 3).unwrap(), reparsed);
        }
    }
}
