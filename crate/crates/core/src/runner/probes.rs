use std::collections::BTreeSet;

use serde_json::json;

use super::config::*;
use super::report::{Export, ProbeReport, Stats, Status, WitnessPoint};
use crate::autodiff::grad_y;
use crate::conformal::{
    associated_lemma_probe, conformal_field_report, conformal_residual, conformal_spray_formula,
    conservation_along_null, essential_scan, estimate_conformal_factor, weyl_probe, Tolerances, Verdict,
};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::geodesics::{energy_drift, integrate_geodesic, reparam_compare, sample_null_direction};
use crate::geometry::{angular_metric, metric_tensor, spray, TOL_NULL};
use crate::zoo::{conformal_deform, sample_box, sample_points, Lagrangian};

/// Mutable report under construction.
struct Out {
    stats: Vec<(String, Stats)>,
    tolerances: Vec<(String, f64)>,
    witnesses: Vec<WitnessPoint>,
    details: serde_json::Map<String, serde_json::Value>,
    exports: Vec<Export>,
    pass: bool,
}

impl Out {
    fn new() -> Self {
        Self {
            stats: Vec::new(),
            tolerances: Vec::new(),
            witnesses: Vec::new(),
            details: serde_json::Map::new(),
            exports: Vec::new(),
            pass: true,
        }
    }

    /// Records a residual sample and fails the probe if its max exceeds
    /// `tol`. An empty sample fails.
    fn check(&mut self, key: &str, values: &[f64], tol: f64) {
        self.tolerances.push((key.to_string(), tol));
        match Stats::from_values(values) {
            Some(s) => {
                if !(s.max <= tol) {
                    self.pass = false;
                }
                self.stats.push((key.to_string(), s));
            }
            None => self.pass = false,
        }
    }

    fn detail(&mut self, key: &str, v: serde_json::Value) {
        self.details.insert(key.to_string(), v);
    }

    /// Like `check`, but informational only.
    fn record(&mut self, key: &str, values: &[f64], tol: f64) {
        self.tolerances.push((key.to_string(), tol));
        if let Some(s) = Stats::from_values(values) {
            self.stats.push((key.to_string(), s));
        }
    }

    fn require(&mut self, ok: bool, key: &str) {
        if !ok {
            self.pass = false;
            self.detail(&format!("failed_{key}"), json!(true));
        }
    }
}

fn rel(a: f64, scale: f64) -> f64 {
    a.abs() / scale.abs().max(1.0)
}

/// Runs one probe; errors become the probe's `error` entry.
pub(crate) fn run_probe(spec: &ExperimentSpec, index: usize) -> ProbeReport {
    let probe = &spec.probes[index];
    let seed = spec.probe_seed(index);
    let mut out = Out::new();
    let result = execute(spec, &probe.kind, &probe.name, seed, &mut out);
    let (status, error) = match result {
        Ok(()) if out.pass => (Status::Pass, None),
        Ok(()) => (Status::Fail, None),
        Err(Error::InconclusiveSampling(n)) => (Status::Fail, Some(Error::InconclusiveSampling(n).to_string())),
        Err(e) => (Status::Error, Some(e.to_string())),
    };
    ProbeReport {
        name: probe.name.clone(),
        kind: probe.kind.name().to_string(),
        seed,
        status,
        error,
        stats: out.stats,
        tolerances: out.tolerances,
        witnesses: out.witnesses,
        details: serde_json::Value::Object(out.details),
        files: out.exports.iter().map(|e| e.file.clone()).collect(),
        exports: out.exports,
    }
}

fn execute(spec: &ExperimentSpec, kind: &ProbeKind, name: &str, seed: u64, out: &mut Out) -> Result<()> {
    match kind {
        ProbeKind::Homogeneity(a) => homogeneity(spec.metric(&a.metric), a, seed, out),
        ProbeKind::ConformalMap(a) => conformal_map(spec, a, seed, out),
        ProbeKind::ConformalField(a) => {
            let l = spec.metric(&a.metric);
            let pts = sample_box(l.dim(), a.bounds[0], a.bounds[1], a.points, seed);
            let v = conformal_field_report(l, &spec.fields[&a.field], &pts, a.directions, seed.wrapping_add(1), a.tolerances)?;
            let aniso: Vec<f64> = v.factors.iter().map(|f| f.anisotropy).collect();
            if a.expect.is_some() {
                out.record("anisotropy", &aniso, a.tolerances.anisotropy);
            } else {
                out.check("anisotropy", &aniso, a.tolerances.anisotropy);
            }
            out.tolerances.push(("null_cone".into(), a.tolerances.null_cone));
            out.tolerances.push(("killing".into(), a.tolerances.residual));
            let mus: Vec<f64> = v.factors.iter().map(|f| f.value).collect();
            out.stats.push(("mu".into(), Stats::from_values(&mus).expect("points >= 1")));
            out.detail("verdict", json!(v.verdict));
            out.detail("null_checked", json!(v.null_checked));
            out.detail("null_max", json!(v.null_max));
            out.detail("skipped", json!(v.skipped));
            match a.expect {
                Some(e) => out.require(v.verdict == e, "expected_verdict"),
                None => out.require(v.verdict != Verdict::NotConformal, "verdict"),
            }
            Ok(())
        }
        ProbeKind::SprayRelation(a) => {
            let l = spec.metric(&a.metric);
            let sigma = parse(&a.sigma, l.dim())?;
            let lt = conformal_deform(l, &sigma)?;
            let pts = sample_points(l, a.bounds[0], a.bounds[1], a.samples, seed)?;
            let mut res = Vec::with_capacity(pts.len());
            for (x, y) in &pts {
                if !lt.admissible(x, y) {
                    continue;
                }
                let direct = spray(&lt, x, y, false)?.g2;
                let formula = conformal_spray_formula(l, &sigma, x, y)?;
                let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let diff = direct.iter().zip(&formula).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                res.push(rel(diff, scale));
            }
            out.check("spray_relation", &res, a.tol);
            Ok(())
        }
        ProbeKind::Weyl(a) => {
            let l = spec.metric(&a.metric);
            let sigma = parse(&a.sigma, l.dim())?;
            let pts = sample_points(l, a.bounds[0], a.bounds[1], a.samples, seed)?;
            out.tolerances.push(("defect".into(), a.tol));
            let r = weyl_probe(l, &sigma, &pts, a.tol)?;
            out.detail("sigma_constant", json!(r.sigma_constant));
            out.detail("samples_used", json!(r.samples_used));
            out.detail("max_transverse", json!(r.max_transverse));
            out.detail("max_defect", json!(r.max_defect));
            if let Some(w) = &r.witness {
                out.detail("witness", json!("found"));
                out.witnesses.push(WitnessPoint {
                    x: w.x.clone(),
                    y: Some(w.y.clone()),
                    value: w.transverse_norm,
                    note: "transverse spray defect".into(),
                });
            }
            out.require(r.pass, "weyl");
            Ok(())
        }
        ProbeKind::Geodesic(a) => {
            let l = spec.metric(&a.metric);
            let tr = integrate_geodesic(l, &a.x0, &a.y0, a.t_end, a.h)?;
            let drift = energy_drift(&tr, l);
            out.check("energy_drift", &[drift], a.tol);
            out.detail("samples", json!(tr.len()));
            out.detail("truncation", json!(tr.truncation()));
            if a.export {
                out.exports.push(Export {
                    file: format!("{}.csv", sanitize(name)),
                    content: tr.to_csv(l),
                });
            }
            Ok(())
        }
        ProbeKind::NullGeodesics(a) => null_geodesics(spec, a, seed, out),
        ProbeKind::Conservation(a) => {
            let l = spec.metric(&a.metric);
            let xi = &spec.fields[&a.field];
            let xs = sample_box(l.dim(), a.bounds[0], a.bounds[1], a.starts, seed);
            let mut drifts = Vec::with_capacity(xs.len());
            for (k, x) in xs.iter().enumerate() {
                let y = sample_null_direction(l, x, seed.wrapping_add(1 + k as u64))?;
                let tr = integrate_geodesic(l, x, &y, a.t_end, a.h)?;
                drifts.push(conservation_along_null(l, xi, &tr)?.max_drift);
            }
            out.check("conservation_drift", &drifts, a.tol);
            Ok(())
        }
        ProbeKind::AssociatedLemma(a) => {
            let l = spec.metric(&a.metric);
            let pts = sample_box(l.dim(), a.bounds[0], a.bounds[1], a.points, seed);
            let r = associated_lemma_probe(l, &spec.fields[&a.field], &a.eps, &pts, a.directions, seed.wrapping_add(1))?;
            let mism: Vec<f64> = r.entries.iter().map(|e| e.max_factor_mismatch).collect();
            out.check("factor_mismatch", &mism, a.tol);
            let prop: Vec<f64> = r.entries.iter().map(|e| e.max_proportionality).collect();
            out.check("proportionality", &prop, a.tol);
            let sigs: BTreeSet<(usize, usize)> = r.signatures.iter().copied().collect();
            out.detail("signatures", json!(sigs));
            out.detail(
                "factors",
                json!(r.entries.iter().map(|e| json!({"eps": e.eps, "mean": e.factors.iter().sum::<f64>() / e.factors.len().max(1) as f64})).collect::<Vec<_>>()),
            );
            if let Some([q, p]) = a.expect_signature {
                out.require(sigs.len() == 1 && sigs.contains(&(q, p)), "signature");
            }
            Ok(())
        }
        ProbeKind::EssentialScan(a) => {
            let l = spec.metric(&a.metric);
            let grid = grid_points(l.dim(), &a.grid);
            let tol = Tolerances {
                residual: a.tol,
                ..Tolerances::default()
            };
            let s = essential_scan(l, &spec.fields[&a.field], &grid, a.directions, seed, tol)?;
            out.detail("grid_points", json!(grid.len()));
            out.detail("null_points", json!(s.null_points.len()));
            out.detail("inadmissible_points", json!(s.inadmissible_points.len()));
            out.detail("essential_candidate", json!(s.essential_candidate));
            for x in s.null_points.iter().take(16) {
                out.witnesses.push(WitnessPoint {
                    x: x.clone(),
                    y: None,
                    value: 0.0,
                    note: "field is null here".into(),
                });
            }
            if let Some(r) = &s.rescaled {
                let mus: Vec<f64> = r.factors.iter().map(|f| f.value.abs()).collect();
                out.check("rescaled_mu", &mus, a.tol);
                out.detail("rescaled_verdict", json!(r.verdict));
                out.require(r.verdict == Verdict::Killing, "killing");
            } else {
                out.tolerances.push(("rescaled_mu".into(), a.tol));
            }
            if let Some(e) = a.expect_null {
                out.require(e == s.essential_candidate, "expect_null");
            }
            Ok(())
        }
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Tensor grid with `per_axis` points per coordinate.
pub fn grid_points(n: usize, g: &Grid) -> Vec<Vec<f64>> {
    let step = (g.hi - g.lo) / (g.per_axis - 1) as f64;
    let mut pts = vec![Vec::new()];
    for _ in 0..n {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..g.per_axis).map(move |i| {
                    let mut q = p.clone();
                    q.push(g.lo + i as f64 * step);
                    q
                })
            })
            .collect();
    }
    pts
}

fn homogeneity(l: &Lagrangian, a: &HomogeneityArgs, seed: u64, out: &mut Out) -> Result<()> {
    let n = l.dim();
    let pts = sample_points(l, a.bounds[0], a.bounds[1], a.samples, seed)?;
    let (mut hom, mut euler, mut gyy, mut ang, mut trace) = (vec![], vec![], vec![], vec![], vec![]);
    let mut signatures = BTreeSet::new();
    for (x, y) in &pts {
        let lv = l.value(x, y)?;
        let y2: Vec<f64> = y.iter().map(|c| 2.0 * c).collect();
        hom.push(rel(l.value(x, &y2)? - 4.0 * lv, lv));
        let dl = grad_y(l, x, y)?;
        euler.push(rel(dl.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - 2.0 * lv, lv));
        let m = metric_tensor(l, x, y)?;
        signatures.insert(m.signature);
        let q: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m.g[(i, j)] * y[i] * y[j]).sum();
        gyy.push(rel(q - lv, lv));
        let yy: f64 = y.iter().map(|c| c * c).sum();
        if lv.abs() > TOL_NULL * yy {
            let am = angular_metric(l, x, y, TOL_NULL)?;
            let scale = m.g.amax().max(1.0) * yy.sqrt();
            let hy = (0..n)
                .map(|j| (0..n).map(|i| am.h[(i, j)] * y[i]).sum::<f64>().abs())
                .fold(0.0, f64::max);
            ang.push(hy / scale);
            trace.push((am.h_inv.component_mul(&m.g).sum() - (n as f64 - 1.0)).abs());
        }
    }
    out.check("homogeneity", &hom, a.tol);
    out.check("euler", &euler, a.tol);
    out.check("metric_contraction", &gyy, a.tol);
    out.check("angular_annihilates_y", &ang, a.tol_angular);
    out.check("angular_trace", &trace, a.tol_trace);
    out.detail("signatures", json!(signatures));
    Ok(())
}

fn conformal_map(spec: &ExperimentSpec, a: &ConformalMapArgs, seed: u64, out: &mut Out) -> Result<()> {
    let l = spec.metric(&a.metric);
    let lp = spec.metric(a.target.as_deref().unwrap_or(&a.metric));
    let f = &spec.maps[&a.map];
    let sigma = parse(&a.sigma, l.dim())?;
    let pts = sample_points(l, a.bounds[0], a.bounds[1], a.samples, seed)?;
    let tol = Tolerances {
        residual: a.tol,
        anisotropy: a.tol_anisotropy,
        ..Tolerances::default()
    };
    let v = conformal_residual(l, lp, f, &sigma, &pts, tol)?;
    out.tolerances.push(("residual".into(), a.tol));
    out.stats.push(("residual".into(), Stats::from_values(&[v.max_residual]).expect("one value")));
    out.require(v.max_residual <= a.tol && v.skipped < pts.len(), "residual");
    out.detail("skipped", json!(v.skipped));
    out.detail("verdict", json!(v.verdict));
    if a.factor_points > 0 {
        let xs = sample_box(l.dim(), a.bounds[0], a.bounds[1], a.factor_points, seed.wrapping_add(1));
        let (mut err, mut aniso) = (Vec::new(), Vec::new());
        for (k, x) in xs.iter().enumerate() {
            let ys = l.sample_admissible(x, a.directions, seed.wrapping_add(2 + k as u64))?;
            let est = estimate_conformal_factor(l, lp, f, x, &ys, TOL_NULL, a.tol_anisotropy)?;
            err.push((est.sigma - sigma.eval_f64(x, &[])?).abs());
            aniso.push(est.anisotropy);
        }
        out.check("factor_error", &err, a.tol_factor);
        out.check("anisotropy", &aniso, a.tol_anisotropy);
    }
    Ok(())
}

fn null_geodesics(spec: &ExperimentSpec, a: &NullGeodesicsArgs, seed: u64, out: &mut Out) -> Result<()> {
    let l = spec.metric(&a.metric);
    let lt = conformal_deform(l, &parse(&a.sigma, l.dim())?)?;
    let xs = sample_box(l.dim(), a.bounds[0], a.bounds[1], a.starts, seed);
    let mut dist = Vec::with_capacity(xs.len());
    let mut control = Vec::new();
    for (k, x) in xs.iter().enumerate() {
        let s = seed.wrapping_add(1 + k as u64);
        let y = sample_null_direction(l, x, s)?;
        let ta = integrate_geodesic(l, x, &y, a.t_end, a.h)?;
        let tb = integrate_geodesic(&lt, x, &y, a.t_end, a.h)?;
        dist.push(reparam_compare(&ta, &tb));
        if a.control {
            let ys = l.sample_admissible(x, 64, s)?;
            if let Some(yt) = ys.iter().find(|y| l.value(x, y).map(|v| v > 1e-3).unwrap_or(false)) {
                let ta = integrate_geodesic(l, x, yt, a.t_end, a.h)?;
                let tb = integrate_geodesic(&lt, x, yt, a.t_end, a.h)?;
                let d = reparam_compare(&ta, &tb);
                if d >= a.control_min && out.witnesses.is_empty() {
                    out.witnesses.push(WitnessPoint {
                        x: x.clone(),
                        y: Some(yt.clone()),
                        value: d,
                        note: "timelike images differ".into(),
                    });
                }
                control.push(d);
            }
        }
    }
    out.check("null_image_distance", &dist, a.tol);
    if a.control {
        let best = control.iter().copied().fold(0.0, f64::max);
        out.tolerances.push(("control_min".into(), a.control_min));
        out.detail("control_max_distance", json!(best));
        out.require(best >= a.control_min, "control");
    }
    Ok(())
}
