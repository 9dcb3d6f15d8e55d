use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::lagrangian::{Kind, Lagrangian};
use crate::autodiff::jacobian_generic;
use crate::error::{Error, Result};

/// Rejections allowed per requested sample.
pub const REJECTIONS_PER_SAMPLE: usize = 10_000;

fn unit_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

fn normalize(v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v.into_iter().map(|c| c / norm).collect())
}

impl Lagrangian {
    /// One candidate direction from the family's sampling strategy; may be
    /// rejected by the caller.
    fn propose(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        match &*self.kind {
            Kind::PseudoEuclidean { .. } => Some(unit_sphere(rng, self.dim())),
            Kind::BerwaldMoor { orthant } => {
                // Land in the chosen orthant and stay away from its walls,
                // where the metric blows up.
                let n = self.dim();
                let floor = 0.1 / (n as f64).sqrt();
                let v = unit_sphere(rng, n);
                if v.iter().any(|c| c.abs() < floor) {
                    return None;
                }
                Some(v.iter().zip(orthant).map(|(c, s)| c.abs() * s).collect())
            }
            Kind::WeightedProduct { first, second, .. } => {
                let k = first.dim();
                let mut y = first.propose(&x[..k], rng)?;
                y.extend(second.propose(&x[k..], rng)?);
                normalize(y)
            }
            Kind::Conformal { base, .. } | Kind::Rescaled { base, .. } => base.propose(x, rng),
            Kind::Pullback { base, map } => {
                let (fx, jac) = jacobian_generic(map, x).ok()?;
                let target = base.propose(&fx, rng)?;
                let n = self.dim();
                let m = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
                let y = m.lu().solve(&DVector::from_vec(target))?;
                normalize(y.iter().copied().collect())
            }
        }
    }

    /// `count` admissible unit directions at `x`, deterministic in `seed`.
    pub fn sample_admissible(&self, x: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(x, count, &mut rng)
    }

    pub(crate) fn sample_with(&self, x: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::domain("sample count must be >= 1"));
        }
        let budget = REJECTIONS_PER_SAMPLE * count;
        let mut out = Vec::with_capacity(count);
        let mut rejected = 0;
        while out.len() < count {
            match self.propose(x, rng) {
                Some(y) if self.admissible(x, &y) => out.push(y),
                _ => {
                    rejected += 1;
                    if rejected >= budget {
                        return Err(Error::SamplingExhausted { attempts: rejected });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Uniform random base points in the box `[lo, hi]ⁿ`.
pub fn sample_box(n: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

/// Seeded `(x, y)` pairs: base points in `[lo, hi]ⁿ`, one admissible
/// direction each.
pub fn sample_points(l: &Lagrangian, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = l.dim();
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            let y = l.sample_with(&x, 1, &mut rng)?.pop().expect("one sample");
            Ok((x, y))
        })
        .collect()
}
