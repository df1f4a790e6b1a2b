//! Finite-volume discretization of the radial Laplacian with a homogeneous
//! Dirichlet condition on `|x| = R`.
//!
//! Flux through the sphere at node `r_i` between cells `i-1` and `i` is
//! `|S(0, r_i)| (v_i - v_{i-1}) / dr`. The face at the origin has zero area,
//! which encodes the symmetry condition `u_r(0) = 0`; in the first cell this
//! reduces to `Delta u ~ d (v_1 - v_0) / dr^2`, exact on `r^2`. The outer cell
//! sees a ghost value of zero at `r = R`, half a cell away.
//!
//! With `M = diag(cell volumes)` the semi-discrete operator is `-M^{-1} K`
//! for the symmetric M-matrix `K` built here.

use crate::grid::RadialGrid;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Stiffness<T> {
    // interior[i] couples cells i and i+1
    interior: Vec<T>,
    boundary: T,
}

impl<T: Scalar> Stiffness<T> {
    pub fn new(grid: &RadialGrid<T>) -> Self {
        let h = grid.spacing();
        let nodes = grid.nodes();
        let n = grid.n_cells();
        let interior = (1..n).map(|i| grid.sphere_area(nodes[i]) / h).collect();
        let boundary = grid.sphere_area(grid.radius()) / (h * T::lit(0.5));
        Self { interior, boundary }
    }

    pub fn n_cells(&self) -> usize {
        self.interior.len() + 1
    }

    /// Bands `(lower, diag, upper)` of `K`.
    pub fn bands(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let n = self.n_cells();
        let mut lower = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut upper = vec![T::zero(); n];
        for (i, &k) in self.interior.iter().enumerate() {
            diag[i] = diag[i] + k;
            diag[i + 1] = diag[i + 1] + k;
            upper[i] = -k;
            lower[i + 1] = -k;
        }
        diag[n - 1] = diag[n - 1] + self.boundary;
        (lower, diag, upper)
    }

    /// `K v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let n = self.n_cells();
        assert_eq!(v.len(), n);
        let mut out = vec![T::zero(); n];
        for (i, &k) in self.interior.iter().enumerate() {
            let flux = k * (v[i + 1] - v[i]);
            out[i] = out[i] - flux;
            out[i + 1] = out[i + 1] + flux;
        }
        out[n - 1] = out[n - 1] + self.boundary * v[n - 1];
        out
    }

    /// Discrete Dirichlet energy `v^T K`v, the analogue of `integral |grad v|^2`.
    pub fn energy(&self, v: &[T]) -> T {
        assert_eq!(v.len(), self.n_cells());
        let inner: T = self
            .interior
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let dv = v[i + 1] - v[i];
                k * dv * dv
            })
            .sum();
        let last = v[v.len() - 1];
        inner + self.boundary * last * last
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_reproduced_in_interior() {
        // Delta(r^2) = 2d, and -M^{-1} K v reproduces it away from the boundary cell.
        for d in 1..=3 {
            let grid = RadialGrid::new(1.0, d, 50).unwrap();
            let k = Stiffness::new(&grid);
            let v: Vec<f64> = grid.centers().iter().map(|r| r * r).collect();
            let kv = k.apply(&v);
            // fluxes telescope to 2d * cell volume exactly
            for i in 0..49 {
                let lap = -kv[i] / grid.cell_volumes()[i];
                assert!((lap - 2.0 * d as f64).abs() < 1e-9, "d={d} i={i} lap={lap}");
            }
        }
    }

    #[test]
    fn energy_matches_quadratic_form() {
        let grid = RadialGrid::new(2.0, 3, 7).unwrap();
        let k = Stiffness::new(&grid);
        let v: Vec<f64> = (0..7).map(|i| ((i * 37 % 11) as f64).sqrt()).collect();
        let kv = k.apply(&v);
        let form: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
        assert!((form - k.energy(&v)).abs() < 1e-10 * form.abs());
        let (l, d, u) = k.bands();
        assert!(d.iter().all(|&x| x > 0.0));
        assert!(l.iter().chain(&u).all(|&x| x <= 0.0));
    }
}
