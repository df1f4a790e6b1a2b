//! Falsification harness for maximality: a candidate `f*` is maximal only if
//! `u_f(T) ≺ u_{f*}(T)` for every admissible `f`. Each adversary whose
//! terminal state escapes domination is reported as a witness.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::control::{bathtub_on_weights, AdmissibleControl};
use crate::error::Result;
use crate::field::{FieldKind, SpaceTimeField};
use crate::grid::{RadialGrid, TimeGrid};
use crate::heat::{solve_heat_with, HeatStepper, Scheme};
use crate::rearrange::{concentration_profile, dominates_profiles};

use super::random::{random_bang_bang, sample_rng};

/// Relative slack (scaled by the candidate's terminal mass) below which a
/// profile excess is not counted as a failure.
pub const SWEEP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Adversary {
    pub label: String,
    pub control: AdmissibleControl<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub sample: usize,
    pub label: String,
    pub node: usize,
    pub radius: f64,
    /// `integral_{B(0, r)} u_f(T)# - integral_{B(0, r)} u_{f*}(T)#` at the worst node.
    pub margin: f64,
}

fn from_weights(label: String, w: SpaceTimeField<f64>, volume: f64) -> Result<Adversary> {
    Ok(Adversary { label, control: bathtub_on_weights(&w, volume)?.control })
}

/// Deterministic adversaries: balls switched on during three half-horizon
/// windows, three annuli (time-constant), then `n_random` random bang-bang
/// controls drawn from `seed`. `known` is prepended unchanged.
pub fn adversarial_set(
    grid: Arc<RadialGrid<f64>>,
    tgrid: Arc<TimeGrid<f64>>,
    volume: f64,
    seed: u64,
    n_random: usize,
    known: Vec<Adversary>,
) -> Result<Vec<Adversary>> {
    let (big_r, horizon) = (grid.radius(), tgrid.horizon());
    let mut out = known;
    for start in [0.0, 0.25, 0.5] {
        let (a, b) = (start * horizon, (start + 0.5) * horizon);
        let w = SpaceTimeField::from_fn(grid.clone(), tgrid.clone(), FieldKind::Adjoint, |t, r| {
            let lift = if t >= a && t < b { 2.0 } else { 1.0 };
            lift - r / big_r
        })?;
        out.push(from_weights(format!("ball on [{a}, {b})"), w, volume)?);
    }
    for centre in [0.25, 0.5, 0.75] {
        let c = centre * big_r;
        let w = SpaceTimeField::from_fn(grid.clone(), tgrid.clone(), FieldKind::Adjoint, |_, r| {
            1.0 + 1e-3 - (r - c).abs() / big_r
        })?;
        out.push(from_weights(format!("annulus around r = {c}"), w, volume)?);
    }
    for k in 0..n_random {
        let mut rng = sample_rng(seed, k);
        let control = random_bang_bang(grid.clone(), tgrid.clone(), &mut rng, volume)?;
        out.push(Adversary { label: format!("random bang-bang #{k}"), control });
    }
    Ok(out)
}

/// Returns every adversary whose terminal state is not dominated by the
/// candidate's, with the node of largest excess.
pub fn maximality_sweep(
    candidate: &AdmissibleControl<f64>,
    adversaries: &[Adversary],
    scheme: Scheme,
) -> Result<Vec<SweepFailure>> {
    let f = candidate.field();
    let stepper = HeatStepper::new(f.grid().clone(), f.tgrid().clone(), scheme)?;
    let target = concentration_profile(&solve_heat_with(&stepper, f)?.terminal())?;
    let tol = SWEEP_TOLERANCE * target.total_mass().abs().max(f64::MIN_POSITIVE);
    let nodes = f.grid().nodes().to_vec();
    let outcomes: Vec<Result<Option<SweepFailure>>> = adversaries
        .par_iter()
        .enumerate()
        .map(|(sample, adv)| {
            let u = solve_heat_with(&stepper, adv.control.field())?.terminal();
            let d = dominates_profiles(&concentration_profile(&u)?, &target, tol)?;
            Ok((!d.holds).then(|| SweepFailure {
                sample,
                label: adv.label.clone(),
                node: d.node,
                radius: nodes[d.node],
                margin: d.margin,
            }))
        })
        .collect();
    let mut failures = Vec::new();
    for o in outcomes {
        if let Some(f) = o? {
            failures.push(f);
        }
    }
    Ok(failures)
}

/// `(f + g) / 2`, admissible with the common mass of `f` and `g`.
pub fn blend(f: &AdmissibleControl<f64>, g: &AdmissibleControl<f64>) -> Result<AdmissibleControl<f64>> {
    let mixed = f.field().combine(0.5, g.field(), 0.5)?;
    AdmissibleControl::new(mixed, 0.5 * (f.volume() + g.volume()))
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateOutcome {
    pub candidate: String,
    pub falsified: bool,
    /// True when `f_phi` or `f_psi` itself is among the witnesses.
    pub witnessed_by_optimum: bool,
    pub failures: Vec<SweepFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: super::ExperimentConfig,
    pub adversaries: Vec<String>,
    pub candidates: Vec<CandidateOutcome>,
}

impl SweepReport {
    pub fn all_falsified(&self) -> bool {
        self.candidates.iter().all(|c| c.falsified)
    }
}

/// Runs the counterexample, then sweeps the candidates `f_phi`, `f_psi` and
/// their average against `f_phi`, `f_psi` and the deterministic and random
/// adversaries.
pub fn run_sweep(config: &super::ExperimentConfig, n_random: usize) -> Result<SweepReport> {
    let run = super::counterexample::run_counterexample_full(config)?;
    let (grid, tgrid) = config.grids()?;
    let known = vec![
        Adversary { label: "f_phi".into(), control: run.f_phi.clone() },
        Adversary { label: "f_psi".into(), control: run.f_psi.clone() },
    ];
    let adversaries = adversarial_set(grid.clone(), tgrid, config.volume(&grid), config.seed, n_random, known)?;
    let candidates = [
        ("f_phi", run.f_phi.clone()),
        ("f_psi", run.f_psi.clone()),
        ("(f_phi + f_psi) / 2", blend(&run.f_phi, &run.f_psi)?),
    ];
    let mut outcomes = Vec::new();
    for (name, cand) in candidates {
        let failures = maximality_sweep(&cand, &adversaries, config.scheme)?;
        outcomes.push(CandidateOutcome {
            candidate: name.into(),
            falsified: !failures.is_empty(),
            witnessed_by_optimum: failures.iter().any(|f| f.sample < 2),
            failures,
        });
    }
    Ok(SweepReport {
        config: config.clone(),
        adversaries: adversaries.into_iter().map(|a| a.label).collect(),
        candidates: outcomes,
    })
}
