use super::trajectory::Trajectory;

/// Points per resampled polyline in [`reparam_compare`].
pub const RESAMPLE_POINTS: usize = 1001;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn cumulative(points: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0];
    for w in points.windows(2) {
        let last = *s.last().unwrap();
        s.push(last + dist(&w[0], &w[1]));
    }
    s
}

/// Resample a polyline at `m` points uniform in arclength on `[0, len]`.
fn resample(points: &[Vec<f64>], len: f64, m: usize) -> Vec<Vec<f64>> {
    let s = cumulative(points);
    if points.len() == 1 || len == 0.0 {
        return vec![points[0].clone(); m];
    }
    let mut out = Vec::with_capacity(m);
    let mut seg = 0;
    for k in 0..m {
        let target = len * k as f64 / (m - 1) as f64;
        while seg + 2 < s.len() && s[seg + 1] < target {
            seg += 1;
        }
        let span = s[seg + 1] - s[seg];
        let u = if span > 0.0 { ((target - s[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(
            points[seg]
                .iter()
                .zip(&points[seg + 1])
                .map(|(a, b)| a + u * (b - a))
                .collect(),
        );
    }
    out
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(a, p)| p - a).collect();
    let den: f64 = ab.iter().map(|c| c * c).sum();
    let u = if den > 0.0 {
        (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() / den).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q: Vec<f64> = a.iter().zip(&ab).map(|(a, d)| a + u * d).collect();
    dist(p, &q)
}

fn directed(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|p| {
            if to.len() == 1 {
                return dist(p, &to[0]);
            }
            to.windows(2)
                .map(|w| point_segment(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the images of two trajectories.
///
/// Both images are cut to their common Euclidean arclength measured from
/// the start, then resampled uniformly in arclength, so the result does not
/// depend on how either curve is parametrized.
pub fn reparam_compare(a: &Trajectory, b: &Trajectory) -> f64 {
    let pa = a.points();
    let pb = b.points();
    if pa.is_empty() || pb.is_empty() {
        return f64::INFINITY;
    }
    let la = *cumulative(&pa).last().unwrap();
    let lb = *cumulative(&pb).last().unwrap();
    let len = la.min(lb);
    let ra = resample(&pa, len, RESAMPLE_POINTS);
    let rb = resample(&pb, len, RESAMPLE_POINTS);
    directed(&ra, &rb).max(directed(&rb, &ra))
}
