//! Parabolic Talenti comparison: `u_f(t) ≺ u_{f#}(t)` at every time level.

use rayon::prelude::*;
use serde::Serialize;

use crate::control::AdmissibleControl;
use crate::error::Result;
use crate::grid::{RadialGrid, TimeGrid};
use crate::heat::{solve_heat_with, HeatStepper, Scheme};
use crate::rearrange::{concentration_profile, dominates_profiles, SchwarzRearrange};

use super::random::{random_block_control, sample_rng};
use super::ExperimentConfig;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TalentiCheck {
    /// `max over (t, r_i) of  integral_{B(0, r_i)} u_f(t)# - integral_{B(0, r_i)} u_{f#}(t)#`.
    pub worst_margin: f64,
    /// Time level and node where the worst margin occurs.
    pub level: usize,
    pub node: usize,
    /// Total mass of `u_f(T)`, for scale.
    pub terminal_mass: f64,
}

/// Solves for `f` and its per-time rearrangement and compares the states'
/// concentration profiles at every stored level.
pub fn verify_talenti(f: &AdmissibleControl<f64>, scheme: Scheme) -> Result<TalentiCheck> {
    let f = f.field();
    let stepper = HeatStepper::new(f.grid().clone(), f.tgrid().clone(), scheme)?;
    let u = solve_heat_with(&stepper, f)?.u;
    let u_sharp = solve_heat_with(&stepper, &f.schwarz_rearrange()?)?.u;
    let mut worst = TalentiCheck { worst_margin: f64::NEG_INFINITY, level: 0, node: 0, terminal_mass: 0.0 };
    for level in 0..f.n_levels() {
        let pf = concentration_profile(&u.slice(level))?;
        let pg = concentration_profile(&u_sharp.slice(level))?;
        let d = dominates_profiles(&pf, &pg, 0.0)?;
        if d.margin > worst.worst_margin {
            worst = TalentiCheck { worst_margin: d.margin, level, node: d.node, ..worst };
        }
        if level + 1 == f.n_levels() {
            worst.terminal_mass = pf.total_mass();
        }
    }
    Ok(worst)
}

/// Acceptance threshold for [`TalentiCheck::worst_margin`].
pub fn talenti_tolerance(grid: &RadialGrid<f64>, tgrid: &TimeGrid<f64>) -> f64 {
    let scale = tgrid.horizon() * grid.total_volume();
    1e-12 * scale
}

#[derive(Debug, Clone, Serialize)]
pub struct TalentiReport {
    pub config: ExperimentConfig,
    pub samples: usize,
    pub tolerance: f64,
    pub checks: Vec<TalentiCheck>,
    pub worst_margin: f64,
    pub holds: bool,
}

/// Block-random admissible controls (an `8 x 8` partition of `(0, T) x (0, R)`),
/// sample `k` drawn from the `k`-th jump of the seeded stream.
pub fn talenti_sample(config: &ExperimentConfig, k: usize) -> Result<AdmissibleControl<f64>> {
    let (grid, tgrid) = config.grids()?;
    let volume = config.volume(&grid);
    random_block_control(grid, tgrid, &mut sample_rng(config.seed, k), volume, (8, 8))
}

pub fn run_talenti(config: &ExperimentConfig, samples: usize) -> Result<TalentiReport> {
    let (grid, tgrid) = config.grids()?;
    let checks: Result<Vec<TalentiCheck>> = (0..samples)
        .into_par_iter()
        .map(|k| verify_talenti(&talenti_sample(config, k)?, config.scheme))
        .collect();
    let checks = checks?;
    let tolerance = talenti_tolerance(&grid, &tgrid);
    let worst_margin = checks.iter().map(|c| c.worst_margin).fold(f64::NEG_INFINITY, f64::max);
    Ok(TalentiReport {
        config: config.clone(),
        samples,
        tolerance,
        holds: worst_margin <= tolerance,
        worst_margin,
        checks,
    })
}
