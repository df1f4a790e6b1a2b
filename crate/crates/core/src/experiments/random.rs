//! Seeded random fields and admissible controls.
//!
//! Every generator takes an explicit [`Rng`] (xoshiro256++), so a seed fixes
//! the whole sample sequence.

use std::sync::Arc;

use rand::{Rng as _, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::control::{bathtub_on_weights, AdmissibleControl};
use crate::error::{Error, Result};
use crate::field::{FieldKind, RadialField, SpaceTimeField};
use crate::grid::{RadialGrid, TimeGrid};

pub type Rng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream for sample `index` of an experiment seeded with `seed`.
pub fn sample_rng(seed: u64, index: usize) -> Rng {
    let mut r = rng(seed);
    for _ in 0..index {
        r.jump();
    }
    r
}

/// Non-negative cell values with deliberate ties (about a third of the cells
/// take one of 0, 1/4, 1/2).
pub fn random_cells(grid: Arc<RadialGrid<f64>>, rng: &mut Rng) -> Result<RadialField<f64>> {
    let values = (0..grid.n_cells())
        .map(|_| if rng.random_bool(1.0 / 3.0) { [0.0, 0.25, 0.5][rng.random_range(0..3)] } else { rng.random::<f64>() })
        .collect();
    RadialField::new(grid, values)
}

/// Smooth, non-negative, non-monotone radial field vanishing in the last cell.
pub fn smooth_dirichlet_field(grid: Arc<RadialGrid<f64>>, rng: &mut Rng) -> Result<RadialField<f64>> {
    let big_r = grid.radius();
    let modes: Vec<(f64, f64)> =
        (1..=4).map(|_| (rng.random::<f64>(), rng.random_range(0.0..std::f64::consts::TAU))).collect();
    let n = grid.n_cells();
    let f = RadialField::from_fn(grid.clone(), |r| {
        let x = r / big_r;
        let osc: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, &(a, theta))| a * (1.0 + (std::f64::consts::PI * (k + 1) as f64 * x + theta).cos()))
            .sum();
        (1.0 - x * x) * osc
    })?;
    let mut v = f.into_values();
    v[n - 1] = 0.0;
    RadialField::new(grid, v)
}

/// Lifts `g` by a constant and clips to `[0, 1]` so that the space-time mass
/// equals `volume`. The mass is continuous and non-decreasing in the shift,
/// which is found by bisection.
pub fn fit_mass(g: &SpaceTimeField<f64>, volume: f64) -> Result<AdmissibleControl<f64>> {
    let total = g.domain_volume();
    if !(volume > 0.0 && volume < total) {
        return Err(Error::Domain(format!("V0 = {volume} outside (0, {total})")));
    }
    let shifted = |lambda: f64| -> Result<SpaceTimeField<f64>> {
        let values = g.values().iter().map(|&v| (v + lambda).clamp(0.0, 1.0)).collect();
        SpaceTimeField::new(g.grid().clone(), g.tgrid().clone(), FieldKind::Control, values)
    };
    let (mut lo, mut hi) = (-1.0 - g.max(), 1.0 - g.min());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shifted(mid)?.integrate() < volume {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_lo, f_hi) = (shifted(lo)?, shifted(hi)?);
    let (m_lo, m_hi) = (f_lo.integrate(), f_hi.integrate());
    let f = if (m_hi - volume).abs() <= (volume - m_lo).abs() { f_hi } else { f_lo };
    AdmissibleControl::new(f, volume)
}

/// Piecewise-constant random control on a fixed `blocks_t x blocks_r` partition
/// of `(0, T) x (0, R)`, lifted to mass `volume`.
///
/// The partition is defined in physical coordinates, so the same seed gives
/// the same underlying function on every grid.
pub fn random_block_control(
    grid: Arc<RadialGrid<f64>>,
    tgrid: Arc<TimeGrid<f64>>,
    rng: &mut Rng,
    volume: f64,
    blocks: (usize, usize),
) -> Result<AdmissibleControl<f64>> {
    let (bt, br) = blocks;
    let table: Vec<f64> = (0..bt * br).map(|_| rng.random::<f64>()).collect();
    let (horizon, big_r) = (tgrid.horizon(), grid.radius());
    let g = SpaceTimeField::from_interval_fn(grid, tgrid, FieldKind::Control, |t, r| {
        let i = ((t / horizon * bt as f64) as usize).min(bt - 1);
        let j = ((r / big_r * br as f64) as usize).min(br - 1);
        table[i * br + j]
    })?;
    fit_mass(&g, volume)
}

/// Bang-bang control of mass `volume` filling the largest entries of a
/// uniformly random weight field.
pub fn random_bang_bang(
    grid: Arc<RadialGrid<f64>>,
    tgrid: Arc<TimeGrid<f64>>,
    rng: &mut Rng,
    volume: f64,
) -> Result<AdmissibleControl<f64>> {
    let values = (0..tgrid.n_levels() * grid.n_cells()).map(|_| 1.0 - rng.random::<f64>()).collect();
    let w = SpaceTimeField::new(grid, tgrid, FieldKind::Adjoint, values)?;
    Ok(bathtub_on_weights(&w, volume)?.control)
}
