//! Smooth radial cut-offs: 1 near the origin, 0 near the boundary.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;

/// Radial cut-off equal to 1 on `[0, inner]`, 0 on `[outer, R]`, joined by the
/// quintic smoothstep `1 - (10 x^3 - 15 x^4 + 6 x^5)` with
/// `x = (r - inner) / (outer - inner)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl CutoffSpec {
    pub fn new(inner_radius: f64, outer_radius: f64, radius: f64) -> Result<Self> {
        if !(0.0 < inner_radius && inner_radius < outer_radius && outer_radius <= radius) {
            return Err(Error::Config(format!(
                "cut-off radii must satisfy 0 < {inner_radius} < {outer_radius} <= {radius}"
            )));
        }
        Ok(Self { inner_radius, outer_radius })
    }

    /// Concentrated weight: plateau on `B(0, R/8)`, support in `B(0, R/4)`.
    pub fn phi(radius: f64) -> Self {
        Self { inner_radius: radius / 8.0, outer_radius: radius / 4.0 }
    }

    /// Spread weight: plateau on `B(0, R/2)`, support in `B(0, 3R/4)`.
    pub fn psi(radius: f64) -> Self {
        Self { inner_radius: radius / 2.0, outer_radius: 0.75 * radius }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.inner_radius {
            return 1.0;
        }
        if r >= self.outer_radius {
            return 0.0;
        }
        let x = (r - self.inner_radius) / (self.outer_radius - self.inner_radius);
        1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
    }

    /// Samples at cell centres.
    pub fn sample(&self, grid: Arc<RadialGrid<f64>>) -> Result<RadialField<f64>> {
        RadialField::from_fn(grid, |r| self.value(r))
    }

    /// Breakpoints where the formula changes.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.inner_radius, self.outer_radius]
    }

    pub fn describe(&self) -> String {
        format!(
            "1 on [0, {}], 0 on [{}, R], quintic smoothstep 1 - (10x^3 - 15x^4 + 6x^5) in between",
            self.inner_radius, self.outer_radius
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_bridge() {
        let c = CutoffSpec::psi(1.0);
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(0.5), 1.0);
        assert_eq!(c.value(0.75), 0.0);
        assert_eq!(c.value(0.625), 0.5);
        let xs: Vec<f64> = (1..200).map(|i| 0.5 + 0.25 * i as f64 / 200.0).collect();
        assert!(xs.windows(2).all(|w| c.value(w[1]) < c.value(w[0])));
        // flat joins: one-sided difference quotients vanish at both ends
        let h = 1e-5;
        assert!((c.value(0.5 + h) - 1.0).abs() / h < 1e-7);
        assert!(c.value(0.75 - h) / h < 1e-7);
        assert!(CutoffSpec::new(0.5, 0.4, 1.0).is_err());
    }
}
