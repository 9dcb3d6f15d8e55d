//! Geodesic integration and trajectory diagnostics.

mod compare;
mod integrate;
mod trajectory;

pub use compare::{reparam_compare, RESAMPLE_POINTS};
pub use integrate::{energy_drift, integrate_geodesic, sample_null_direction, snap_null, NULL_SEARCH_DIRECTIONS};
pub use trajectory::{Sample, Trajectory, Truncation};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::expr::parse;
    use crate::geometry::covariant_derivative_along;
    use crate::zoo::{conformal_deform, make_berwald_moor, make_minkowski};

    #[test]
    fn minkowski_line() {
        let l = make_minkowski(2).unwrap();
        let tr = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 1.0], 1.0, 1e-2).unwrap();
        assert_eq!(tr.len(), 101);
        for s in tr.samples() {
            assert!((s.x[0] - s.t).abs() < 1e-14 && (s.x[1] - s.t).abs() < 1e-14);
        }
        assert_eq!(energy_drift(&tr, &l), 0.0);
        assert!(!tr.is_truncated());
    }

    #[test]
    fn berwald_moor_line() {
        let l = make_berwald_moor(2).unwrap();
        let tr = integrate_geodesic(&l, &[0.5, 0.1], &[1.0, 2.0], 1.0, 1e-2).unwrap();
        let last = tr.samples().last().unwrap();
        assert!((last.x[0] - 1.5).abs() < 1e-12 && (last.x[1] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn null_start_stays_null() {
        let l = conformal_deform(&make_minkowski(2).unwrap(), &parse("x0", 2).unwrap()).unwrap();
        let tr = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 1.0], 1.0, 1e-3).unwrap();
        for s in tr.samples() {
            assert!(l.value(&s.x, &s.y).unwrap().abs() <= 1e-8);
        }
    }

    #[test]
    fn velocity_matches_position_differences() {
        let l = conformal_deform(&make_minkowski(2).unwrap(), &parse("sin(x0)", 2).unwrap()).unwrap();
        let tr = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 0.3], 1.0, 1e-3).unwrap();
        let s = tr.samples();
        let h = tr.step();
        for k in 1..s.len() - 1 {
            for i in 0..2 {
                let d = (s[k + 1].x[i] - s[k - 1].x[i]) / (2.0 * h);
                assert!((d - s[k].y[i]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn leaving_the_cone_truncates() {
        // σ is undefined for x0 >= 1
        let m = conformal_deform(&make_minkowski(2).unwrap(), &parse("ln(1 - x0)", 2).unwrap()).unwrap();
        let tr = integrate_geodesic(&m, &[0.0, 0.0], &[1.0, 0.0], 5.0, 0.01).unwrap();
        assert!(tr.is_truncated());
        assert!(tr.samples().iter().all(|s| m.admissible(&s.x, &s.y)));
    }

    #[test]
    fn start_must_be_admissible() {
        let l = make_berwald_moor(2).unwrap();
        assert!(matches!(
            integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 0.0], 1.0, 0.1),
            Err(Error::NotAdmissible { .. })
        ));
    }

    #[test]
    fn compare_same_image_different_speed() {
        let l = make_minkowski(2).unwrap();
        let a = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 0.5], 1.0, 1e-2).unwrap();
        let b = integrate_geodesic(&l, &[0.0, 0.0], &[3.0, 1.5], 1.0, 1e-2).unwrap();
        assert_eq!(reparam_compare(&a, &a), 0.0);
        assert!(reparam_compare(&a, &b) <= 1e-10);
        let c = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 0.6], 1.0, 1e-2).unwrap();
        assert!(reparam_compare(&a, &c) > 1e-3);
    }

    #[test]
    fn snapping_lands_on_the_cone() {
        let l = make_minkowski(3).unwrap();
        let y = snap_null(&l, &[0.0; 3], &[1.0, 0.2, 0.1], &[0.1, 1.0, 0.5]).unwrap();
        assert!(l.value(&[0.0; 3], &y).unwrap().abs() <= 1e-12);
        assert!(snap_null(&l, &[0.0; 3], &[0.1, 1.0, 0.0], &[0.1, 1.0, 0.5]).is_err());
    }

    #[test]
    fn velocity_is_parallel() {
        let l = conformal_deform(&make_minkowski(2).unwrap(), &parse("sin(x0)+0.5*x1", 2).unwrap()).unwrap();
        let tr = integrate_geodesic(&l, &[0.1, 0.2], &[1.0, 0.4], 0.5, 1e-3).unwrap();
        let vel: Vec<Vec<f64>> = tr.samples().iter().map(|s| s.y.clone()).collect();
        let nabla = covariant_derivative_along(&l, &tr, &vel).unwrap();
        let worst = nabla.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn constant_field_on_flat_line() {
        let l = make_minkowski(2).unwrap();
        let tr = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 0.2], 1.0, 0.1).unwrap();
        let field = vec![vec![0.3, -0.7]; tr.len()];
        let nabla = covariant_derivative_along(&l, &tr, &field).unwrap();
        assert!(nabla.iter().flatten().all(|v| v.abs() < 1e-12));
        let short = Trajectory::from_samples(tr.samples()[..2].to_vec(), 1.0, 0.1);
        assert!(matches!(
            covariant_derivative_along(&l, &short, &field[..2]),
            Err(Error::GridTooCoarse(2))
        ));
    }

    #[test]
    fn csv_header() {
        let l = make_minkowski(2).unwrap();
        let tr = integrate_geodesic(&l, &[0.0, 0.0], &[1.0, 0.0], 0.2, 0.1).unwrap();
        let csv = tr.to_csv(&l);
        assert!(csv.starts_with("t,x0,x1,y0,y1,L\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
