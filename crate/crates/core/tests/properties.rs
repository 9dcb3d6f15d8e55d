use finsler_core::autodiff::{grad_x, grad_y, jacobian, Dual};
use finsler_core::conformal::{flow, lie_derivative_l, FlowMap, VectorFieldSpec};
use finsler_core::expr::parse;
use finsler_core::geodesics::integrate_geodesic;
use finsler_core::geometry::{connection, covariant_derivative_along, metric_tensor, spray, spray_generic};
use finsler_core::zoo::{
    conformal_deform, make_berwald_moor, make_minkowski, make_pseudo_euclidean, make_weighted_product, pullback,
    DiffeoSpec, Lagrangian,
};
use proptest::prelude::*;

fn zoo() -> Vec<Lagrangian> {
    let line = make_pseudo_euclidean(&[1.0]).unwrap();
    let mk2 = make_minkowski(2).unwrap();
    let bm2 = make_berwald_moor(2).unwrap();
    let bm3 = make_berwald_moor(3).unwrap();
    vec![
        mk2.clone(),
        make_pseudo_euclidean(&[1.0, -1.0, -1.0]).unwrap(),
        make_minkowski(4).unwrap(),
        bm2.clone(),
        bm3.clone(),
        make_berwald_moor(4).unwrap(),
        make_weighted_product(&line, &mk2, 0.5).unwrap(),
        make_weighted_product(&bm2, &line, 0.4).unwrap(),
        conformal_deform(&mk2, &parse("sin(x0) + 0.5*x1", 2).unwrap()).unwrap(),
        conformal_deform(&bm3, &parse("x0*x1 - x2", 3).unwrap()).unwrap(),
        pullback(&bm2, &DiffeoSpec::parse(&["x0 + x0^3", "exp(x1)"]).unwrap()).unwrap(),
    ]
}

/// Metrics whose spray is not identically zero.
fn curved() -> Vec<Lagrangian> {
    let mk2 = make_minkowski(2).unwrap();
    let mk4 = make_minkowski(4).unwrap();
    let bm2 = make_berwald_moor(2).unwrap();
    let bm3 = make_berwald_moor(3).unwrap();
    vec![
        conformal_deform(&mk2, &parse("sin(x0) + 0.5*x1", 2).unwrap()).unwrap(),
        conformal_deform(&mk4, &parse("0.3*x0*x3 + cos(x1)", 4).unwrap()).unwrap(),
        conformal_deform(&bm2, &parse("x0 - 0.2*x1^2", 2).unwrap()).unwrap(),
        conformal_deform(&bm3, &parse("x0*x1 - x2", 3).unwrap()).unwrap(),
        pullback(&bm2, &DiffeoSpec::parse(&["x0 + x0^3", "exp(x1)"]).unwrap()).unwrap(),
    ]
}

fn point(l: &Lagrangian, coords: &[f64], seed: u64) -> (Vec<f64>, Vec<f64>) {
    let x = coords[..l.dim()].to_vec();
    let y = l.sample_admissible(&x, 1, seed).unwrap().remove(0);
    (x, y)
}

fn scale(v: f64) -> f64 {
    v.abs().max(1.0)
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homogeneity_and_euler(idx in 0usize..11, c in coords(), seed in any::<u64>(), lambda in 0.1f64..5.0) {
        let ls = zoo();
        let l = &ls[idx];
        let (x, y) = point(l, &c, seed);
        let v = l.value(&x, &y).unwrap();
        let ly: Vec<f64> = y.iter().map(|c| lambda * c).collect();
        prop_assert!((l.value(&x, &ly).unwrap() - lambda * lambda * v).abs() <= 1e-10 * scale(v) * lambda * lambda);
        let gy = grad_y(l, &x, &y).unwrap();
        let euler: f64 = gy.iter().zip(&y).map(|(a, b)| a * b).sum();
        prop_assert!((euler - 2.0 * v).abs() <= 1e-10 * scale(v));
        let g = metric_tensor(l, &x, &y).unwrap();
        let gyy: f64 = (0..y.len()).flat_map(|i| (0..y.len()).map(move |j| (i, j))).map(|(i, j)| g.g[(i, j)] * y[i] * y[j]).sum();
        prop_assert!((gyy - v).abs() <= 1e-10 * scale(v));
    }

    #[test]
    fn declared_signature_is_the_computed_one(idx in 0usize..11, c in coords(), seed in any::<u64>()) {
        let ls = zoo();
        let l = &ls[idx];
        let (x, y) = point(l, &c, seed);
        let g = metric_tensor(l, &x, &y).unwrap();
        if let Some(sig) = l.declared_signature(&x, &y) {
            prop_assert_eq!(sig, g.signature);
        }
    }

    #[test]
    fn spray_is_two_homogeneous(idx in 0usize..5, c in coords(), seed in any::<u64>(), lambda in 0.2f64..4.0) {
        let ls = curved();
        let l = &ls[idx];
        let (x, y) = point(l, &c, seed);
        let s1 = spray(l, &x, &y, false).unwrap().g2;
        let ly: Vec<f64> = y.iter().map(|c| lambda * c).collect();
        let s2 = spray(l, &x, &ly, false).unwrap().g2;
        let norm = s1.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in s1.iter().zip(&s2) {
            prop_assert!((b - lambda * lambda * a).abs() <= 1e-8 * norm * lambda * lambda, "{a} {b}");
        }
    }

    #[test]
    fn horizontal_derivative_of_l_vanishes(idx in 0usize..5, c in coords(), seed in any::<u64>()) {
        let ls = curved();
        let l = &ls[idx];
        let (x, y) = point(l, &c, seed);
        let lx = grad_x(l, &x, &y).unwrap();
        let ly = grad_y(l, &x, &y).unwrap();
        let nl = connection(l, &x, &y).unwrap();
        let sc = scale(l.value(&x, &y).unwrap()) * lx.iter().chain(&ly).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..x.len() {
            let d = lx[i] - (0..x.len()).map(|j| nl[(j, i)] * ly[j]).sum::<f64>();
            prop_assert!(d.abs() <= 1e-8 * sc, "delta_{i} L = {d}");
        }
    }

    #[test]
    fn connection_matches_finite_differences(idx in 0usize..5, c in coords(), seed in any::<u64>()) {
        let ls = curved();
        let l = &ls[idx];
        let (x, y) = point(l, &c, seed);
        let nl = connection(l, &x, &y).unwrap();
        let n = x.len();
        let h = 1e-5;
        for j in 0..n {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += h;
            ym[j] -= h;
            let sp = spray(l, &x, &yp, false).unwrap().g2;
            let sm = spray(l, &x, &ym, false).unwrap().g2;
            for i in 0..n {
                let fd = 0.25 * (sp[i] - sm[i]) / h;
                prop_assert!((fd - nl[(i, j)]).abs() <= 1e-5 * scale(nl[(i, j)]), "G^{i}_{j}: {fd} vs {}", nl[(i, j)]);
            }
        }
    }

    #[test]
    fn generic_spray_agrees_with_dual_lift(idx in 0usize..5, c in coords(), seed in any::<u64>()) {
        let ls = curved();
        let l = &ls[idx];
        let (x, y) = point(l, &c, seed);
        let xs: Vec<Dual<f64>> = x.iter().map(|&v| Dual::new(v, 0.0)).collect();
        let ys: Vec<Dual<f64>> = y.iter().map(|&v| Dual::new(v, 0.0)).collect();
        let d = spray_generic(l, &xs, &ys).unwrap();
        let s = spray(l, &x, &y, false).unwrap().g2;
        for (a, b) in d.iter().zip(&s) {
            prop_assert!((a.re - b).abs() <= 1e-12 * scale(*b));
        }
    }
}

fn fields() -> Vec<VectorFieldSpec> {
    vec![
        VectorFieldSpec::parse(&["x0", "x1"]).unwrap(),
        VectorFieldSpec::parse(&["x1", "x0"]).unwrap(),
        VectorFieldSpec::parse(&["sin(x1)", "0.5*x0^2"]).unwrap(),
        VectorFieldSpec::parse(&["1 + x0*x1", "cos(x0)"]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// Oracle: central difference in eps of L(phi_eps x, D phi_eps y),
    /// with phi_eps from the numerical flow.
    #[test]
    fn lie_derivative_matches_flow_difference(fi in 0usize..4, li in 0usize..3, c in coords(), seed in any::<u64>()) {
        let ls = [
            make_minkowski(2).unwrap(),
            conformal_deform(&make_minkowski(2).unwrap(), &parse("sin(x0) + 0.5*x1", 2).unwrap()).unwrap(),
            make_weighted_product(&make_pseudo_euclidean(&[1.0]).unwrap(), &make_pseudo_euclidean(&[-1.0]).unwrap(), 0.5)
                .unwrap(),
        ];
        let l = &ls[li];
        let xi = &fields()[fi];
        let x: Vec<f64> = c[..2].iter().map(|v| 0.5 * v).collect();
        let y = l.sample_admissible(&x, 1, seed).unwrap().remove(0);
        let eps = 1e-4;
        let pushed = |e: f64| -> f64 {
            let j = jacobian(&FlowMap { field: xi, eps: e }, &x).unwrap();
            let img = flow(xi, &x, e).unwrap();
            let w: Vec<f64> = (0..2).map(|i| (0..2).map(|k| j.matrix[(i, k)] * y[k]).sum()).collect();
            l.value(&img, &w).unwrap()
        };
        let fd = (pushed(eps) - pushed(-eps)) / (2.0 * eps);
        let ad = lie_derivative_l(l, xi, &x, &y).unwrap();
        prop_assert!((fd - ad).abs() <= 1e-6 * scale(ad), "{fd} vs {ad}");
    }
}

fn bm_factor(n: usize, kind: usize) -> (DiffeoSpec, String) {
    let comps: Vec<String> = (0..n)
        .map(|i| if kind == 0 { format!("x{i} + x{i}^3") } else { format!("exp(x{i})") })
        .collect();
    let sigma = if kind == 0 {
        let prod: Vec<String> = (0..n).map(|i| format!("(1 + 3*x{i}^2)")).collect();
        format!("({}/{})*ln({})", 2, n, prod.join("*"))
    } else {
        let sum: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        format!("({}/{})*({})", 2, n, sum.join(" + "))
    };
    let srcs: Vec<&str> = comps.iter().map(String::as_str).collect();
    (DiffeoSpec::parse(&srcs).unwrap(), sigma)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn berwald_moor_pullback_is_conformal_deformation(n in 2usize..=4, kind in 0usize..2, c in coords(), seed in any::<u64>()) {
        let bm = make_berwald_moor(n).unwrap();
        let (f, sigma) = bm_factor(n, kind);
        let pulled = pullback(&bm, &f).unwrap();
        let deformed = conformal_deform(&bm, &parse(&sigma, n).unwrap()).unwrap();
        let (x, y) = point(&bm, &c, seed);
        let a = pulled.value(&x, &y).unwrap();
        let b = deformed.value(&x, &y).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * scale(b), "{a} vs {b}");
    }
}

fn g_at(l: &Lagrangian, x: &[f64], y: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let g = metric_tensor(l, x, y).unwrap().g;
    (0..u.len()).flat_map(|i| (0..v.len()).map(move |j| (i, j))).map(|(i, j)| g[(i, j)] * u[i] * v[j]).sum()
}

/// Along a geodesic, d/dt g_c'(c', V) = g_c'(c', DV) for any field V.
#[test]
fn dynamical_derivative_is_metric_along_geodesics() {
    let bm = make_berwald_moor(2).unwrap();
    let ls = [
        conformal_deform(&bm, &parse("0.4*x0 - 0.3*x1^2", 2).unwrap()).unwrap(),
        conformal_deform(&make_minkowski(2).unwrap(), &parse("sin(x0)", 2).unwrap()).unwrap(),
    ];
    for l in &ls {
        let x0 = [0.3, 0.5];
        let y0 = l.sample_admissible(&x0, 1, 9).unwrap().remove(0);
        let tr = integrate_geodesic(l, &x0, &y0, 0.5, 1e-3).unwrap();
        assert!(!tr.is_truncated());
        let s = tr.samples();
        let field: Vec<Vec<f64>> = s.iter().map(|p| vec![(3.0 * p.t).cos(), 1.0 + p.t * p.t]).collect();
        let dv = covariant_derivative_along(l, &tr, &field).unwrap();
        let h = tr.step();
        let mut worst = 0.0f64;
        for k in 1..s.len() - 1 {
            let before = g_at(l, &s[k - 1].x, &s[k - 1].y, &s[k - 1].y, &field[k - 1]);
            let after = g_at(l, &s[k + 1].x, &s[k + 1].y, &s[k + 1].y, &field[k + 1]);
            let lhs = (after - before) / (2.0 * h);
            let rhs = g_at(l, &s[k].x, &s[k].y, &s[k].y, &dv[k]);
            worst = worst.max((lhs - rhs).abs());
        }
        assert!(worst <= 1e-5, "{}: {worst:e}", l.label());
    }
}
