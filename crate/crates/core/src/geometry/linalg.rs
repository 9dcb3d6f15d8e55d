use crate::autodiff::Scalar;
use crate::error::{Error, Result};

/// Solve `A z = b` by Gaussian elimination with partial pivoting on the
/// real parts. Generic so spray derivatives can flow through it.
pub fn solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.re().abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateMetric("zero or non-finite matrix".into()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].re().abs().total_cmp(&a[j][col].re().abs()))
            .expect("non-empty range");
        if a[pivot][col].re().abs() <= 1e-13 * scale {
            return Err(Error::DegenerateMetric(format!(
                "pivot {:e} in column {col} below tolerance",
                a[pivot][col].re()
            )));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (t, s) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *t = *t - factor * *s;
            }
            let v = b[col];
            b[row] = b[row] - factor * v;
        }
    }
    let mut z = vec![S::from_f64(0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row][k] * z[k];
        }
        z[row] = acc / a[row][row];
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Dual;

    #[test]
    fn solves_with_pivoting() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let z = solve(a, vec![2.0, 3.0]).unwrap();
        assert_eq!(z, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_degenerate() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve(a, vec![1.0, 1.0]), Err(Error::DegenerateMetric(_))));
    }

    #[test]
    fn differentiates_through_the_solve() {
        // z = b / t, dz/dt = -b / t²
        let t = Dual::variable(2.0);
        let z = solve(vec![vec![t]], vec![Dual::constant(3.0)]).unwrap();
        assert_eq!(z[0].re, 1.5);
        assert_eq!(z[0].eps, -0.75);
    }
}
