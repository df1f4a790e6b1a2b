//! Tridiagonal solver (Thomas algorithm), factored once and reused per step.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// LU factors of a tridiagonal matrix
///
/// ```text
/// | d0 u0          |
/// | l1 d1 u1       |
/// |    l2 d2 u2    |
/// |       ...      |
/// ```
///
/// For an M-matrix (positive diagonal, non-positive off-diagonals, diagonally
/// dominant) every intermediate quantity keeps its sign, so a non-negative
/// right-hand side yields a non-negative solution in floating point as well.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    lower: Vec<T>,
    // modified super-diagonal c'_i
    upper: Vec<T>,
    // pivots d_i - l_i c'_{i-1}
    pivot: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    /// `lower[0]` and `upper[n-1]` are ignored.
    pub fn factor(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::Config("tridiagonal bands must have equal, non-zero length".into()));
        }
        let mut c = vec![T::zero(); n];
        let mut pivot = vec![T::zero(); n];
        pivot[0] = diag[0];
        for i in 0..n {
            if i > 0 {
                pivot[i] = diag[i] - lower[i] * c[i - 1];
            }
            if pivot[i] == T::zero() || !pivot[i].is_finite() {
                return Err(Error::Numerical { level: 0, msg: format!("zero pivot in row {i}") });
            }
            if i + 1 < n {
                c[i] = upper[i] / pivot[i];
            }
        }
        Ok(Self { lower: lower.to_vec(), upper: c, pivot })
    }

    pub fn len(&self) -> usize {
        self.pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [T]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] = rhs[0] / self.pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.upper[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(l: &[f64], d: &[f64], u: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = d[i] * x[i];
                if i > 0 {
                    s += l[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += u[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn single_row() {
        let t = Tridiagonal::factor(&[0.0], &[4.0], &[0.0]).unwrap();
        let mut b = [2.0];
        t.solve_in_place(&mut b);
        assert_eq!(b, [0.5]);
    }

    #[test]
    fn zero_pivot_detected() {
        assert!(Tridiagonal::factor(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn residual_small_and_sign_preserving(
            n in 1usize..40,
            off in proptest::collection::vec(0.0f64..2.0, 40),
            extra in proptest::collection::vec(0.0f64..1.0, 40),
            rhs in proptest::collection::vec(0.0f64..5.0, 40),
        ) {
            let l: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -off[i - 1] }).collect();
            let u: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { -off[i] }).collect();
            let d: Vec<f64> = (0..n).map(|i| -l[i] - u[i] + extra[i] + 0.1).collect();
            let t = Tridiagonal::factor(&l, &d, &u).unwrap();
            let mut x = rhs[..n].to_vec();
            t.solve_in_place(&mut x);
            prop_assert!(x.iter().all(|&v| v >= 0.0));
            let back = matvec(&l, &d, &u, &x);
            for i in 0..n {
                prop_assert!((back[i] - rhs[i]).abs() <= 1e-10 * (1.0 + rhs[i].abs()));
            }
        }
    }
}
