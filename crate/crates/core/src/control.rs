//! Maximization of `J_phi(f) = integral u_f(T) phi` over controls
//! `0 <= f <= 1` with prescribed space-time mass `V0`.
//!
//! By duality `J_phi(f) = double integral f p_phi`, a linear functional, so the
//! maximizer fills the super-level set `{p_phi > c}` up to volume `V0`
//! (bathtub principle). The multiplier `c` is located by bisection on the
//! volume function `G(c) = Vol({p > c})`; an independent sort-and-prefix-sum
//! solution of the same discrete problem serves as a certificate.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldKind, RadialField, SpaceTimeField};
use crate::grid::TimeGrid;
use crate::heat::{solve_adjoint, solve_heat, AdjointSolution, Scheme};
use crate::rearrange::{DecreasingProfile, NEGATIVE_SLACK};
use crate::scalar::Scalar;

/// Relative tolerance on `double integral f = V0`.
pub const VOLUME_TOLERANCE: f64 = 1e-9;

/// Cap on bisection steps; adjacency of two floats is reached long before.
const MAX_BISECTIONS: usize = 4096;

/// Fill fractions within this distance of 0 or 1 are rounded to it.
const FRACTION_SNAP: f64 = 1e-12;

/// A control in the admissible class: `0 <= f <= 1`, `double integral f = V0`.
#[derive(Debug, Clone)]
pub struct AdmissibleControl<T> {
    f: SpaceTimeField<T>,
    volume: T,
}

impl<T: Scalar> AdmissibleControl<T> {
    pub fn new(f: SpaceTimeField<T>, volume: T) -> Result<Self> {
        let f = f.with_kind(FieldKind::Control)?;
        let total = f.domain_volume();
        if !(volume > T::zero() && volume < total) {
            return Err(Error::Domain(format!("V0 = {volume} outside (0, {total})")));
        }
        let mass = f.integrate();
        if (mass - volume).abs() > T::lit(VOLUME_TOLERANCE) * volume {
            return Err(Error::Validation(format!("control mass {mass} differs from V0 = {volume}")));
        }
        Ok(Self { f, volume })
    }

    /// Wraps a control, taking its own mass as `V0`.
    pub fn from_mass(f: SpaceTimeField<T>) -> Result<Self> {
        let volume = f.integrate();
        Self::new(f, volume)
    }

    pub fn field(&self) -> &SpaceTimeField<T> {
        &self.f
    }

    pub fn into_field(self) -> SpaceTimeField<T> {
        self.f
    }

    pub fn volume(&self) -> T {
        self.volume
    }
}

/// Optimal control for a terminal weight, with its multiplier and level-set radii.
#[derive(Debug, Clone)]
pub struct BathtubSolution<T> {
    pub control: AdmissibleControl<T>,
    /// Lagrange multiplier `c`: the control is 1 where `p > c`, 0 where `p < c`.
    pub multiplier: T,
    /// Interval of valid multipliers (a single point unless `V0` falls exactly
    /// on a cell boundary, in which case `multiplier` is its midpoint).
    pub multiplier_interval: (T, T),
    /// Entry `n - 1` is the radius of the ball `{f = 1}` on the interval
    /// `(t_{n-1}, t_n]`, `n = 1..=n_t` (volume-equivalent, counting the
    /// fractional cell). The last entry is the left limit at `T`.
    pub radius_curve: Vec<T>,
    /// `double integral f p` for the returned control.
    pub objective: T,
    /// Optimum of the same discrete problem from the sort-based solver.
    pub exact_objective: T,
    /// `|double integral f - V0|`.
    pub feasibility_residual: T,
    pub bisection_steps: usize,
}

impl<T: Scalar> BathtubSolution<T> {
    pub fn control_field(&self) -> &SpaceTimeField<T> {
        self.control.field()
    }

    /// Relative mismatch between bisection and sort-based optima.
    pub fn certificate_error(&self) -> T {
        (self.objective - self.exact_objective).abs() / self.exact_objective.abs().max(T::min_positive_value())
    }

    /// Number of cells with `0 < f < 1` on each interval.
    pub fn fractional_cells_per_level(&self) -> Vec<usize> {
        let f = self.control.field();
        (1..=f.tgrid().n_steps())
            .map(|l| f.row(l).iter().filter(|&&v| v > T::zero() && v < T::one()).count())
            .collect()
    }
}

/// `J_phi(f) = double integral f p_phi`, using a precomputed adjoint.
pub fn objective<T: Scalar>(f: &SpaceTimeField<T>, adjoint: &AdjointSolution<T>) -> Result<T> {
    f.integrate_product(&adjoint.p)
}

/// `J_phi(f)` from scratch: solves the adjoint for `phi` on the control's time grid.
pub fn objective_for<T: Scalar>(f: &SpaceTimeField<T>, phi: &RadialField<T>) -> Result<T> {
    if f.kind() == FieldKind::Control {
        f.validate()?;
    }
    if let Some(j) = phi.values().iter().position(|&v| v < -T::lit(NEGATIVE_SLACK)) {
        return Err(Error::Domain(format!("weight negative in cell {j}")));
    }
    let adj = solve_adjoint(phi, f.tgrid().clone())?;
    objective(f, &adj)
}

#[derive(Debug, Clone, Copy)]
struct Entry<T> {
    value: T,
    weight: T,
    level: usize,
    cell: usize,
}

fn active_entries<T: Scalar>(p: &SpaceTimeField<T>) -> Vec<Entry<T>> {
    let dt = p.tgrid().step();
    let vols = p.grid().cell_volumes();
    let mut out = Vec::with_capacity(p.tgrid().n_steps() * vols.len());
    for level in 1..=p.tgrid().n_steps() {
        for (cell, (&value, &v)) in p.row(level).iter().zip(vols).enumerate() {
            out.push(Entry { value, weight: dt * v, level, cell });
        }
    }
    out
}

fn check_volume<T: Scalar>(p: &SpaceTimeField<T>, volume: T) -> Result<()> {
    let total = p.domain_volume();
    if !(volume > T::zero() && volume < total) {
        return Err(Error::Domain(format!("V0 = {volume} outside (0, {total})")));
    }
    Ok(())
}

/// Exact discrete bathtub value: sort entries by `p` (descending, ties by
/// level then cell), fill whole entries until the next would overshoot `V0`,
/// then a fraction of it.
pub fn exact_bathtub_value<T: Scalar>(p: &SpaceTimeField<T>, volume: T) -> Result<T> {
    check_volume(p, volume)?;
    let mut entries = active_entries(p);
    entries.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(Ordering::Equal)
            .then(a.level.cmp(&b.level))
            .then(a.cell.cmp(&b.cell))
    });
    let mut filled = T::zero();
    let mut value = T::zero();
    for e in &entries {
        let room = volume - filled;
        if room <= T::zero() {
            break;
        }
        let take = e.weight.min(room);
        value = value + take * e.value;
        filled = filled + take;
    }
    Ok(value)
}

/// Bathtub maximizer of `double integral f p` for an arbitrary weight field `p`
/// (only rows `1..=n_t` carry weight).
pub fn bathtub_on_weights<T: Scalar>(p: &SpaceTimeField<T>, volume: T) -> Result<BathtubSolution<T>> {
    check_volume(p, volume)?;
    let entries = active_entries(p);
    let volume_above = |c: T| -> T {
        entries.iter().filter(|e| e.value > c).fold(T::zero(), |a, e| a + e.weight)
    };
    let mut lo = T::zero();
    let mut hi = entries.iter().fold(T::neg_infinity(), |m, e| m.max(e.value));
    let g_lo = volume_above(lo);
    if g_lo < volume {
        let smallest_positive =
            entries.iter().filter(|e| e.value > T::zero()).fold(T::infinity(), |m, e| m.min(e.value));
        return Err(Error::DegenerateLevel { lo: 0.0, hi: smallest_positive.as_f64() });
    }
    // invariant: G(lo) >= V0 > G(hi)
    let mut steps = 0;
    let straddle_value = loop {
        let (mut min_in, mut max_in) = (T::infinity(), T::neg_infinity());
        for e in entries.iter().filter(|e| e.value > lo && e.value <= hi) {
            min_in = min_in.min(e.value);
            max_in = max_in.max(e.value);
        }
        if min_in == max_in {
            break max_in;
        }
        if steps == MAX_BISECTIONS {
            return Err(Error::DegenerateLevel { lo: lo.as_f64(), hi: hi.as_f64() });
        }
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            return Err(Error::DegenerateLevel { lo: lo.as_f64(), hi: hi.as_f64() });
        }
        if volume_above(mid) >= volume {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    };

    let full = volume_above(straddle_value);
    let straddle_weight = volume_above(lo) - full;
    let mut fraction = ((volume - full) / straddle_weight).min(T::one());
    // V0 on a cell boundary up to rounding: the fill is bang-bang
    let snap = T::lit(FRACTION_SNAP);
    if fraction > T::one() - snap {
        fraction = T::one();
    } else if fraction < snap {
        fraction = T::zero();
    }

    let grid = p.grid().clone();
    let tgrid = p.tgrid().clone();
    let n_r = grid.n_cells();
    let n_t = tgrid.n_steps();
    let mut values = vec![T::zero(); tgrid.n_levels() * n_r];
    for e in &entries {
        let idx = e.level * n_r + e.cell;
        if e.value > straddle_value {
            values[idx] = T::one();
        } else if e.value == straddle_value {
            values[idx] = fraction;
        }
    }
    // row 0 has no quadrature weight; repeat the first interval
    let (head, tail) = values.split_at_mut(n_r);
    head.copy_from_slice(&tail[..n_r]);

    let multiplier_interval = if fraction == T::one() {
        let below = entries.iter().filter(|e| e.value < straddle_value).fold(T::zero(), |m, e| m.max(e.value));
        (below, straddle_value)
    } else if fraction == T::zero() {
        let above =
            entries.iter().filter(|e| e.value > straddle_value).fold(T::infinity(), |m, e| m.min(e.value));
        (straddle_value, above)
    } else {
        (straddle_value, straddle_value)
    };
    let multiplier = (multiplier_interval.0 + multiplier_interval.1) * T::lit(0.5);

    let field = SpaceTimeField::new(grid.clone(), tgrid, FieldKind::Control, values)?;
    let vols = grid.cell_volumes();
    let radius_curve = (1..=n_t)
        .map(|l| {
            let filled = field.row(l).iter().zip(vols).fold(T::zero(), |a, (&f, &v)| a + f * v);
            grid.radius_of_volume(filled).min(grid.radius())
        })
        .collect();
    let objective = field.integrate_product(p)?;
    let feasibility_residual = (field.integrate() - volume).abs();
    let exact_objective = exact_bathtub_value(p, volume)?;
    let control = AdmissibleControl::new(field, volume)?;
    Ok(BathtubSolution {
        control,
        multiplier,
        multiplier_interval,
        radius_curve,
        objective,
        exact_objective,
        feasibility_residual,
        bisection_steps: steps,
    })
}

/// Checks the structural preconditions on a terminal weight.
fn check_terminal<T: Scalar>(phi: &RadialField<T>) -> Result<()> {
    let v = phi.values();
    if let Some(j) = v.iter().position(|&x| x < -T::lit(NEGATIVE_SLACK)) {
        return Err(Error::Domain(format!("terminal weight negative in cell {j}")));
    }
    if let Some(j) = v.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::Domain(format!("terminal weight increases between cells {j} and {}", j + 1)));
    }
    if v.iter().all(|&x| x == v[0]) {
        return Err(Error::Domain("terminal weight is constant".into()));
    }
    Ok(())
}

/// Solves `max_f integral u_f(T) phi` over the admissible class with mass `V0`.
///
/// `phi` must be non-negative, radially non-increasing and non-constant.
/// Returns the adjoint alongside the solution.
pub fn bathtub_optimize<T: Scalar>(
    phi: &RadialField<T>,
    tgrid: Arc<TimeGrid<T>>,
    volume: T,
) -> Result<(BathtubSolution<T>, AdjointSolution<T>)> {
    check_terminal(phi)?;
    let adjoint = solve_adjoint(phi, tgrid)?;
    let solution = bathtub_on_weights(&adjoint.p, volume)?;
    Ok((solution, adjoint))
}

/// Radius where the radial profile of `p(t_index, .)` crosses `level`.
///
/// The profile is the piecewise-linear interpolant through the cell-centre
/// values, closed by `p(R) = 0` and by the even extension
/// `p(0) = p_0 + (p_0 - p_1) / 8` (exact for `a + b r^2`). It must be
/// strictly decreasing.
pub fn level_radius<T: Scalar>(adjoint: &AdjointSolution<T>, t_index: usize, level: T) -> Result<T> {
    let p = &adjoint.p;
    let n_t = p.tgrid().n_steps();
    if t_index >= n_t {
        return Err(Error::Domain(format!("time level {t_index} is not before T (n_t = {n_t})")));
    }
    let grid = p.grid();
    let row = p.row(t_index);
    let n = row.len();
    let mut pts: Vec<(T, T)> = Vec::with_capacity(n + 2);
    if n > 1 {
        pts.push((T::zero(), row[0] + (row[0] - row[1]) * T::lit(0.125)));
    }
    pts.extend(grid.centers().into_iter().zip(row.iter().copied()));
    pts.push((grid.radius(), T::zero()));
    for (k, w) in pts.windows(2).enumerate() {
        if !(w[1].1 < w[0].1) {
            let cell = if n > 1 { k.saturating_sub(1) } else { k };
            return Err(Error::Monotonicity { level: t_index, cell: cell.min(n - 1) });
        }
    }
    let top = pts[0].1;
    if !(level >= T::zero() && level <= top) {
        return Err(Error::Range { level: level.as_f64(), lo: 0.0, hi: top.as_f64() });
    }
    if level == top {
        return Ok(pts[0].0);
    }
    for w in pts.windows(2) {
        let ((r0, p0), (r1, p1)) = (w[0], w[1]);
        if level < p0 && level >= p1 {
            return Ok(r0 + (r1 - r0) * (p0 - level) / (p0 - p1));
        }
    }
    Ok(grid.radius())
}

/// Diagnostic value of `max_f sup_{Vol(E) = Vol(B(0, r))} integral_E u_f(T)`.
///
/// The outer maximum is approximated by the bathtub optimum for the terminal
/// weight `1` on `B(0, r)` with a linear ramp to `0` over two cells; the inner
/// supremum is evaluated exactly as the mass of `u_f(T)#` in `B(0, r)`.
pub fn solve_p_r<T: Scalar>(
    grid: Arc<crate::grid::RadialGrid<T>>,
    tgrid: Arc<TimeGrid<T>>,
    r: T,
    volume: T,
    scheme: Scheme,
) -> Result<T> {
    let big_r = grid.radius();
    if !(r > T::zero() && r < big_r) {
        return Err(Error::Domain(format!("radius {r} outside (0, {big_r})")));
    }
    let width = grid.spacing() * T::lit(2.0);
    let ramp_end = (r + width).min(big_r);
    let phi = RadialField::from_fn(grid, |rho| {
        if rho <= r {
            T::one()
        } else if rho >= ramp_end {
            T::zero()
        } else {
            (ramp_end - rho) / (ramp_end - r)
        }
    })?;
    let (sol, _) = bathtub_optimize(&phi, tgrid, volume)?;
    let u = solve_heat(sol.control.field(), scheme)?;
    Ok(DecreasingProfile::of(&u.terminal())?.mass_within_radius(r))
}
