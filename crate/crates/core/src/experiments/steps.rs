//! Lower step-function approximations of a radially non-increasing cut-off.
//!
//! With `r_j = jR/k` and `alpha_j = phi(r_{j+1})`, the annulus form is
//! `sum_j alpha_j 1{r_j <= |x| < r_{j+1}}`. Telescoping gives the nested-ball
//! form `sum_{j=1..k} beta_j 1{|x| < r_j}` with `beta_k = alpha_{k-1}` and
//! `beta_j = alpha_{j-1} - alpha_j`; every `beta_j >= 0` because `phi` is
//! non-increasing.

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::unit_ball_volume;

use super::cutoff::CutoffSpec;

#[derive(Debug, Clone, Serialize)]
pub struct StepApproximation {
    pub radius: f64,
    /// `r_{k,0} = 0 < ... < r_{k,k} = R`.
    pub radii: Vec<f64>,
    /// `alpha[j]` is the value on the annulus `[r_j, r_{j+1})`, `j < k`.
    pub alpha: Vec<f64>,
    /// `beta[j - 1]` multiplies `1{|x| < r_j}`, `1 <= j <= k`.
    pub beta: Vec<f64>,
}

pub fn step_approximation(phi: &CutoffSpec, radius: f64, k: usize) -> Result<StepApproximation> {
    if k == 0 {
        return Err(Error::Config("step approximation needs k >= 1".into()));
    }
    let mut radii: Vec<f64> = (0..=k).map(|j| j as f64 * radius / k as f64).collect();
    radii[k] = radius;
    let alpha: Vec<f64> = (0..k).map(|j| phi.value(radii[j + 1])).collect();
    let beta = (1..=k).map(|j| if j == k { alpha[k - 1] } else { alpha[j - 1] - alpha[j] }).collect();
    Ok(StepApproximation { radius, radii, alpha, beta })
}

impl StepApproximation {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    /// Annulus form at radius `r`.
    pub fn annulus_value(&self, r: f64) -> f64 {
        let k = self.k();
        let j = ((r / self.radius * k as f64).floor() as usize).min(k - 1);
        // guard against rounding in the bucket index
        let j = if r < self.radii[j] { j - 1 } else if j + 1 < k && r >= self.radii[j + 1] { j + 1 } else { j };
        self.alpha[j]
    }

    /// Nested-ball form at radius `r`, summed term by term.
    pub fn nested_value(&self, r: f64) -> f64 {
        self.beta
            .iter()
            .zip(&self.radii[1..])
            .filter(|&(_, &rj)| r < rj)
            .map(|(&b, _)| b)
            .sum()
    }

    /// `integral over B(0, R) of |phi - phi_k|` in dimension `d`, by
    /// Gauss-Legendre quadrature on each annulus split at the cut-off's
    /// breakpoints (exact for the piecewise-polynomial integrand).
    pub fn l1_error(&self, phi: &CutoffSpec, d: usize) -> Result<f64> {
        let degree = 8.max(d / 2 + 4);
        let rule = GaussLegendre::new(degree).map_err(|e| Error::Numerical { level: 0, msg: e.to_string() })?;
        let area = d as f64 * unit_ball_volume::<f64>(d);
        let mut total = 0.0;
        for (j, w) in self.radii.windows(2).enumerate() {
            let mut cuts = vec![w[0]];
            cuts.extend(phi.breakpoints().into_iter().filter(|&b| b > w[0] && b < w[1]));
            cuts.push(w[1]);
            for s in cuts.windows(2) {
                total += rule.integrate(s[0], s[1], |r| {
                    (phi.value(r) - self.alpha[j]).abs() * area * r.powi(d as i32 - 1)
                });
            }
        }
        Ok(total)
    }
}
