//! Two terminal weights whose optimal controls differ, so no single control
//! is maximal for the concentration order in time and space.
//!
//! `phi` is concentrated (plateau on `B(0, R/8)`, zero outside `B(0, R/4)`),
//! `psi` is spread (plateau on `B(0, R/2)`, zero outside `B(0, 3R/4)`). Each
//! optimal control is a moving ball; near `T` the two balls have radii on
//! opposite sides of `(R/4, R/2)`. The four cross objectives are evaluated
//! with the forward solver, independently of the adjoint used to optimize.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{bathtub_optimize, AdmissibleControl, BathtubSolution};
use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::{RadialGrid, TimeGrid};
use crate::heat::{solve_heat_with, HeatStepper, Scheme};
use crate::io::write_atomic;
use crate::rearrange::concentration_profile;

use super::cutoff::CutoffSpec;

/// Largest tolerated relative gap between the bisection and sort-based optima.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "V0_fraction")]
    pub volume_fraction: f64,
    pub n_r: usize,
    pub n_t: usize,
    pub scheme: Scheme,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            d: 2,
            horizon: 1.0,
            volume_fraction: 0.25,
            n_r: 256,
            n_t: 256,
            scheme: Scheme::ImplicitEuler,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("R", self.radius), ("T", self.horizon)];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("{k} must be positive, got {v}")));
        }
        if !(self.volume_fraction > 0.0 && self.volume_fraction < 1.0) {
            return Err(Error::Config(format!("V0_fraction must lie in (0, 1), got {}", self.volume_fraction)));
        }
        if self.d == 0 || self.n_r == 0 || self.n_t == 0 {
            return Err(Error::Config("d, n_r and n_t must be at least 1".into()));
        }
        if self.n_r < 8 {
            return Err(Error::Config("n_r must be at least 8 to resolve the cut-offs".into()));
        }
        Ok(())
    }

    pub fn grids(&self) -> Result<(Arc<RadialGrid<f64>>, Arc<TimeGrid<f64>>)> {
        self.validate()?;
        Ok((
            Arc::new(RadialGrid::new(self.radius, self.d, self.n_r)?),
            Arc::new(TimeGrid::new(self.horizon, self.n_t)?),
        ))
    }

    /// `V0 = V0_fraction * Vol((0, T) x B(0, R))`.
    pub fn volume(&self, grid: &RadialGrid<f64>) -> f64 {
        self.volume_fraction * self.horizon * grid.total_volume()
    }

    /// Number of time levels before `T` over which the radius separation is checked.
    pub fn neighbourhood_levels(&self) -> usize {
        (self.n_t / 16).max(2).min(self.n_t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossObjectives {
    pub phi_of_f_phi: f64,
    pub phi_of_f_psi: f64,
    pub psi_of_f_psi: f64,
    pub psi_of_f_phi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffRecord {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub profile: String,
}

impl From<CutoffSpec> for CutoffRecord {
    fn from(c: CutoffSpec) -> Self {
        Self { inner_radius: c.inner_radius, outer_radius: c.outer_radius, profile: c.describe() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub r_phi_below_quarter: bool,
    pub r_psi_above_half: bool,
    pub radii_separated_near_terminal: bool,
    pub controls_differ: bool,
    pub phi_strict: bool,
    pub psi_strict: bool,
    pub margins_exceed_ten_duality_gaps: bool,
    pub certificates_hold: bool,
}

impl Checks {
    pub fn all(&self) -> bool {
        self.r_phi_below_quarter
            && self.r_psi_above_half
            && self.radii_separated_near_terminal
            && self.controls_differ
            && self.phi_strict
            && self.psi_strict
            && self.margins_exceed_ten_duality_gaps
            && self.certificates_hold
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub config: ExperimentConfig,
    #[serde(rename = "V0")]
    pub volume: f64,
    pub c_phi: f64,
    pub c_psi: f64,
    pub c_phi_interval: [f64; 2],
    pub c_psi_interval: [f64; 2],
    /// Right end points `t_1 .. t_{n_t}` of the intervals indexing the radius curves.
    pub times: Vec<f64>,
    pub r_phi_curve: Vec<f64>,
    pub r_psi_curve: Vec<f64>,
    /// Radii on the last interval `(T - dt, T]`, i.e. the left limits at `T`.
    pub r_phi_terminal: f64,
    pub r_psi_terminal: f64,
    /// Radii on the interval before it, `(T - 2 dt, T - dt]`.
    pub r_phi_previous: f64,
    pub r_psi_previous: f64,
    pub neighbourhood_levels: usize,
    /// `min (r_psi - r_phi)` over the neighbourhood of `T`.
    pub neighbourhood_min_separation: f64,
    pub r_phi_range: [f64; 2],
    pub r_psi_range: [f64; 2],
    pub control_distance: f64,
    pub cross_objectives: CrossObjectives,
    pub phi_margin: f64,
    pub psi_margin: f64,
    /// Largest `|integral u_f(T) w - double integral f p_w|` over the four pairs.
    pub duality_gap: f64,
    pub certificate_error_phi: f64,
    pub certificate_error_psi: f64,
    pub feasibility_residual_phi: f64,
    pub feasibility_residual_psi: f64,
    pub cutoff_phi: CutoffRecord,
    pub cutoff_psi: CutoffRecord,
    pub notes: Vec<String>,
    pub checks: Checks,
}

/// Everything computed by [`run_counterexample_full`].
#[derive(Debug, Clone)]
pub struct CounterexampleRun {
    pub report: CounterexampleReport,
    pub phi: RadialField<f64>,
    pub psi: RadialField<f64>,
    pub f_phi: AdmissibleControl<f64>,
    pub f_psi: AdmissibleControl<f64>,
    pub u_phi_terminal: RadialField<f64>,
    pub u_psi_terminal: RadialField<f64>,
}

pub fn run_counterexample(config: &ExperimentConfig) -> Result<CounterexampleReport> {
    Ok(run_counterexample_full(config)?.report)
}

fn certified(label: &str, sol: &BathtubSolution<f64>) -> Result<()> {
    let err = sol.certificate_error();
    if !(err <= CERTIFICATE_TOLERANCE) {
        return Err(Error::Contract(format!(
            "bathtub certificate failed for {label}: bisection {} vs exact {} (relative {err:e})",
            sol.objective, sol.exact_objective
        )));
    }
    Ok(())
}

fn range(v: &[f64]) -> [f64; 2] {
    [v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max)]
}

pub fn run_counterexample_full(config: &ExperimentConfig) -> Result<CounterexampleRun> {
    let (grid, tgrid) = config.grids()?;
    let big_r = config.radius;
    let volume = config.volume(&grid);
    let (cut_phi, cut_psi) = (CutoffSpec::phi(big_r), CutoffSpec::psi(big_r));
    let phi = cut_phi.sample(grid.clone())?;
    let psi = cut_psi.sample(grid.clone())?;

    let (opt_phi, opt_psi) = rayon::join(
        || bathtub_optimize(&phi, tgrid.clone(), volume),
        || bathtub_optimize(&psi, tgrid.clone(), volume),
    );
    let ((sol_phi, adj_phi), (sol_psi, adj_psi)) = (opt_phi?, opt_psi?);
    certified("phi", &sol_phi)?;
    certified("psi", &sol_psi)?;

    let stepper = HeatStepper::new(grid.clone(), tgrid.clone(), config.scheme)?;
    let (u_phi, u_psi) = rayon::join(
        || solve_heat_with(&stepper, sol_phi.control_field()),
        || solve_heat_with(&stepper, sol_psi.control_field()),
    );
    let (u_phi, u_psi) = (u_phi?.terminal(), u_psi?.terminal());
    let cross = CrossObjectives {
        phi_of_f_phi: u_phi.inner(&phi)?,
        phi_of_f_psi: u_psi.inner(&phi)?,
        psi_of_f_psi: u_psi.inner(&psi)?,
        psi_of_f_phi: u_phi.inner(&psi)?,
    };
    // adjoint-side values of the same four numbers
    let adjoint_side = [
        sol_phi.objective,
        sol_psi.control_field().integrate_product(&adj_phi.p)?,
        sol_psi.objective,
        sol_phi.control_field().integrate_product(&adj_psi.p)?,
    ];
    let forward_side = [cross.phi_of_f_phi, cross.phi_of_f_psi, cross.psi_of_f_psi, cross.psi_of_f_phi];
    let duality_gap = forward_side.iter().zip(&adjoint_side).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let n_t = tgrid.n_steps();
    let times = tgrid.times()[1..].to_vec();
    let hood = config.neighbourhood_levels();
    let r_phi = sol_phi.radius_curve.clone();
    let r_psi = sol_psi.radius_curve.clone();
    let separation =
        (n_t - hood..n_t).map(|i| r_psi[i] - r_phi[i]).fold(f64::INFINITY, f64::min);

    let dt = tgrid.step();
    let symmetric_difference: f64 = (1..=n_t)
        .map(|l| {
            let (a, b) = (sol_phi.control_field().row(l), sol_psi.control_field().row(l));
            a.iter().zip(b).zip(grid.cell_volumes()).map(|((x, y), w)| (x - y).abs() * w).sum::<f64>()
        })
        .sum::<f64>()
        * dt;
    let distance = symmetric_difference / (config.horizon * grid.total_volume());

    let phi_margin = cross.phi_of_f_phi - cross.phi_of_f_psi;
    let psi_margin = cross.psi_of_f_psi - cross.psi_of_f_phi;
    let checks = Checks {
        r_phi_below_quarter: r_phi[n_t - 1] < big_r / 4.0,
        r_psi_above_half: r_psi[n_t - 1] > big_r / 2.0,
        radii_separated_near_terminal: separation > 0.0,
        controls_differ: distance > 0.0,
        phi_strict: phi_margin > 0.0,
        psi_strict: psi_margin > 0.0,
        margins_exceed_ten_duality_gaps: phi_margin.min(psi_margin) >= 10.0 * duality_gap,
        certificates_hold: true,
    };
    let report = CounterexampleReport {
        config: config.clone(),
        volume,
        c_phi: sol_phi.multiplier,
        c_psi: sol_psi.multiplier,
        c_phi_interval: [sol_phi.multiplier_interval.0, sol_phi.multiplier_interval.1],
        c_psi_interval: [sol_psi.multiplier_interval.0, sol_psi.multiplier_interval.1],
        times,
        r_phi_terminal: r_phi[n_t - 1],
        r_psi_terminal: r_psi[n_t - 1],
        r_phi_previous: r_phi[n_t.saturating_sub(2)],
        r_psi_previous: r_psi[n_t.saturating_sub(2)],
        neighbourhood_levels: hood,
        neighbourhood_min_separation: separation,
        r_phi_range: range(&r_phi),
        r_psi_range: range(&r_psi),
        r_phi_curve: r_phi,
        r_psi_curve: r_psi,
        control_distance: distance,
        cross_objectives: cross,
        phi_margin,
        psi_margin,
        duality_gap,
        certificate_error_phi: sol_phi.certificate_error(),
        certificate_error_psi: sol_psi.certificate_error(),
        feasibility_residual_phi: sol_phi.feasibility_residual,
        feasibility_residual_psi: sol_psi.feasibility_residual,
        cutoff_phi: cut_phi.into(),
        cutoff_psi: cut_psi.into(),
        notes: vec![
            "psi is taken decreasing on the annulus R/2 < r < 3R/4 (plateau 1 inside, 0 outside)".into(),
            "radius curves are volume-equivalent radii of {f(t, .) = 1}, fractional cell included".into(),
            "T- is the last interval (T - dt, T]; the neighbourhood of T is the last max(2, n_t/16) intervals".into(),
            "a radius of 0 means the control vanishes on that interval (the multiplier exceeds p(t, 0))".into(),
        ],
        checks,
    };
    Ok(CounterexampleRun {
        report,
        phi,
        psi,
        f_phi: sol_phi.control,
        f_psi: sol_psi.control,
        u_phi_terminal: u_phi,
        u_psi_terminal: u_psi,
    })
}

/// Writes `radius_curves.csv` and `terminal_profiles.csv` into `dir`.
pub fn write_profiles(run: &CounterexampleRun, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let r = &run.report;
    let mut curves = String::from("t,r_phi,r_psi\n");
    for ((t, a), b) in r.times.iter().zip(&r.r_phi_curve).zip(&r.r_psi_curve) {
        curves.push_str(&format!("{t},{a},{b}\n"));
    }
    write_atomic(dir.join("radius_curves.csv"), curves.as_bytes())?;

    let p_phi = concentration_profile(&run.u_phi_terminal)?;
    let p_psi = concentration_profile(&run.u_psi_terminal)?;
    let mut prof = String::from("r,mass_within_r_phi,mass_within_r_psi\n");
    for ((rad, a), b) in p_phi.grid().nodes().iter().zip(p_phi.cumulative()).zip(p_psi.cumulative()) {
        prof.push_str(&format!("{rad},{a},{b}\n"));
    }
    write_atomic(dir.join("terminal_profiles.csv"), prof.as_bytes())
}
