//! Randomized checks of the Hardy-Littlewood and Polya-Szego inequalities.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::grid::RadialGrid;
use crate::rearrange::{hardy_littlewood_gap, polya_szego_gap};

use super::random::{random_cells, sample_rng, smooth_dirichlet_field};

/// Smallest `integral f# g# - integral f g` over `pairs` random pairs.
pub fn hardy_littlewood_min_gap(grid: Arc<RadialGrid<f64>>, pairs: usize, seed: u64) -> Result<f64> {
    let gaps: Result<Vec<f64>> = (0..pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k);
            let f = random_cells(grid.clone(), &mut rng)?;
            let g = random_cells(grid.clone(), &mut rng)?;
            hardy_littlewood_gap(&f, &g)
        })
        .collect();
    Ok(gaps?.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PolyaSzegoLevel {
    pub n_r: usize,
    pub min_gap: f64,
    /// `max(0, -min_gap)`.
    pub violation: f64,
    /// Smallest gap relative to the field's own energy.
    pub min_relative_gap: f64,
}

/// Dirichlet-energy gap `E(f) - E(f#)` for `samples` smooth random fields
/// (the same underlying functions on every grid), at each `n_r`.
pub fn polya_szego_study(
    radius: f64,
    d: usize,
    n_rs: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<PolyaSzegoLevel>> {
    n_rs.iter()
        .map(|&n_r| {
            let grid = Arc::new(RadialGrid::new(radius, d, n_r)?);
            let gaps: Result<Vec<(f64, f64)>> = (0..samples)
                .into_par_iter()
                .map(|k| {
                    let mut rng = sample_rng(seed, k);
                    let f = smooth_dirichlet_field(grid.clone(), &mut rng)?;
                    let gap = polya_szego_gap(&f)?;
                    Ok((gap, gap / crate::rearrange::dirichlet_energy(&f)))
                })
                .collect();
            let gaps = gaps?;
            let min_gap = gaps.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
            let min_relative_gap = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
            Ok(PolyaSzegoLevel { n_r, min_gap, violation: (-min_gap).max(0.0), min_relative_gap })
        })
        .collect()
}
