//! Radial heat equation `u_t - Delta u = f` with `u = 0` on `|x| = R` and
//! `u(0, .) = 0`, and its backward adjoint `p_t + Delta p = 0`, `p(T) = phi`.
//!
//! Row `n >= 1` of a source holds its value on `(t_{n-1}, t_n]`. Implicit
//! Euler treats diffusion implicitly and adds the source at the end of the
//! step (`B = M + dt K`, `A = B^{-1} M`):
//!
//! ```text
//! u^n = A u^{n-1} + dt f^n                n = 1 .. n_t
//! p^n = A p^{n+1},  p^{n_t} = phi
//! ```
//!
//! `A` is self-adjoint for `<., .>_M`, so the discrete duality
//! `<u^{n_t}, phi>_M = sum_{n=1..n_t} dt <f^n, p^n>_M` holds exactly, and the
//! last interval is weighted by `p^{n_t} = phi` itself.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldKind, RadialField, SpaceTimeField};
use crate::grid::{RadialGrid, TimeGrid};
use crate::operator::Stiffness;
use crate::rearrange::NEGATIVE_SLACK;
use crate::scalar::Scalar;
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Monotone: the implicit matrix is an M-matrix.
    #[default]
    ImplicitEuler,
    /// Second order in time, not monotone. For accuracy studies.
    CrankNicolson,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit-euler",
            Scheme::CrankNicolson => "crank-nicolson",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit-euler" => Ok(Scheme::ImplicitEuler),
            "crank-nicolson" => Ok(Scheme::CrankNicolson),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Factored time stepper for one `(grid, time grid, scheme)` triple.
#[derive(Debug, Clone)]
pub struct HeatStepper<T> {
    grid: Arc<RadialGrid<T>>,
    tgrid: Arc<TimeGrid<T>>,
    scheme: Scheme,
    stiffness: Stiffness<T>,
    implicit: Tridiagonal<T>,
    // bands of the implicit matrix, kept for residual checks
    bands: (Vec<T>, Vec<T>, Vec<T>),
}

impl<T: Scalar> HeatStepper<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, tgrid: Arc<TimeGrid<T>>, scheme: Scheme) -> Result<Self> {
        let stiffness = Stiffness::new(&grid);
        let theta = match scheme {
            Scheme::ImplicitEuler => T::one(),
            Scheme::CrankNicolson => T::lit(0.5),
        };
        let dt = tgrid.step() * theta;
        let (l, d, u) = stiffness.bands();
        let mass = grid.cell_volumes();
        let lower: Vec<T> = l.iter().map(|&x| dt * x).collect();
        let upper: Vec<T> = u.iter().map(|&x| dt * x).collect();
        let diag: Vec<T> = d.iter().zip(mass).map(|(&x, &m)| m + dt * x).collect();
        let implicit = Tridiagonal::factor(&lower, &diag, &upper)?;
        Ok(Self { grid, tgrid, scheme, stiffness, implicit, bands: (lower, diag, upper) })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Right-hand side of the linear system of one step from `u^{n-1}`.
    fn rhs(&self, u: &[T], source: Option<&[T]>) -> Vec<T> {
        let dt = self.tgrid.step();
        let mass = self.grid.cell_volumes();
        match self.scheme {
            Scheme::ImplicitEuler => mass.iter().zip(u).map(|(&m, &v)| m * v).collect(),
            Scheme::CrankNicolson => {
                let half_dt = T::lit(0.5) * dt;
                let ku = self.stiffness.apply(u);
                let mut out: Vec<T> = mass.iter().zip(u).zip(&ku).map(|((&m, &v), &k)| m * v - half_dt * k).collect();
                if let Some(f) = source {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = *o + mass[j] * dt * f[j];
                    }
                }
                out
            }
        }
    }

    /// Advances `u` by one step with the interval's source row; returns the
    /// relative residual of the linear solve.
    fn advance(&self, u: &mut Vec<T>, source: Option<&[T]>) -> T {
        let rhs = self.rhs(u, source);
        let mut next = rhs.clone();
        self.implicit.solve_in_place(&mut next);
        let residual = self.residual(&rhs, &next);
        if let (Scheme::ImplicitEuler, Some(f)) = (self.scheme, source) {
            let dt = self.tgrid.step();
            for (v, &s) in next.iter_mut().zip(f) {
                *v = *v + dt * s;
            }
        }
        *u = next;
        residual
    }

    /// Advances `u` by one step.
    pub fn step(&self, u: &mut Vec<T>, source: Option<&[T]>) {
        self.advance(u, source);
    }

    /// Max-norm of `(implicit matrix) x - rhs` relative to the max-norm of `rhs`.
    fn residual(&self, rhs: &[T], x: &[T]) -> T {
        let (l, d, u) = &self.bands;
        let n = x.len();
        let mut worst = T::zero();
        let mut scale = T::min_positive_value();
        for i in 0..n {
            let mut a = d[i] * x[i];
            if i > 0 {
                a = a + l[i] * x[i - 1];
            }
            if i + 1 < n {
                a = a + u[i] * x[i + 1];
            }
            worst = worst.max((a - rhs[i]).abs());
            scale = scale.max(rhs[i].abs());
        }
        worst / scale
    }
}

fn check_row<T: Scalar>(row: &[T], level: usize) -> Result<()> {
    if row.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical { level, msg: "non-finite value while time stepping".into() })
    }
}

/// Forward solve together with its discrete residual.
#[derive(Debug, Clone)]
pub struct HeatSolution<T> {
    pub u: SpaceTimeField<T>,
    pub scheme: Scheme,
    /// Largest relative residual of the per-step linear systems.
    pub residual_norm: T,
}

impl<T: Scalar> HeatSolution<T> {
    pub fn terminal(&self) -> RadialField<T> {
        self.u.slice(self.u.n_levels() - 1)
    }
}

/// Solves the forward problem with zero initial data.
pub fn solve_heat<T: Scalar>(f: &SpaceTimeField<T>, scheme: Scheme) -> Result<HeatSolution<T>> {
    let stepper = HeatStepper::new(f.grid().clone(), f.tgrid().clone(), scheme)?;
    solve_heat_with(&stepper, f)
}

/// Forward solve reusing a factored stepper (grids must match).
pub fn solve_heat_with<T: Scalar>(stepper: &HeatStepper<T>, f: &SpaceTimeField<T>) -> Result<HeatSolution<T>> {
    let grid = f.grid().clone();
    let tgrid = f.tgrid().clone();
    if !grid.same_as(&stepper.grid) || *tgrid != *stepper.tgrid {
        return Err(Error::GridMismatch("stepper built for different grids".into()));
    }
    let n = grid.n_cells();
    let mut values = Vec::with_capacity(tgrid.n_levels() * n);
    let mut u = vec![T::zero(); n];
    values.extend_from_slice(&u);
    let mut residual_norm = T::zero();
    for level in 1..=tgrid.n_steps() {
        let r = stepper.advance(&mut u, Some(f.row(level)));
        check_row(&u, level)?;
        residual_norm = residual_norm.max(r);
        values.extend_from_slice(&u);
    }
    let u = SpaceTimeField::new(grid, tgrid, FieldKind::State, values)?;
    Ok(HeatSolution { u, scheme: stepper.scheme, residual_norm })
}

/// Free implicit-Euler evolution of `initial`: row `k` is the state after `k` steps.
pub fn heat_semigroup<T: Scalar>(initial: &RadialField<T>, tgrid: Arc<TimeGrid<T>>) -> Result<SpaceTimeField<T>> {
    let grid = initial.grid().clone();
    let stepper = HeatStepper::new(grid.clone(), tgrid.clone(), Scheme::ImplicitEuler)?;
    let mut values = Vec::with_capacity(tgrid.n_levels() * grid.n_cells());
    let mut w = initial.values().to_vec();
    values.extend_from_slice(&w);
    for k in 0..tgrid.n_steps() {
        stepper.step(&mut w, None);
        check_row(&w, k + 1)?;
        values.extend_from_slice(&w);
    }
    SpaceTimeField::new(grid, tgrid, FieldKind::State, values)
}

/// Backward solve and radial derivative.
#[derive(Debug, Clone)]
pub struct AdjointSolution<T> {
    pub p: SpaceTimeField<T>,
    pub terminal: RadialField<T>,
    /// `q = dp/dr`: centred differences between cell centres in the interior,
    /// one-sided in the first and last cell.
    pub radial_derivative: SpaceTimeField<T>,
}

impl<T: Scalar> AdjointSolution<T> {
    /// Strictness threshold for `q < 0`: `1e-12 * |phi|_inf / R`.
    pub fn derivative_threshold(&self) -> T {
        T::lit(1e-12) * self.terminal.max_abs() / self.terminal.grid().radius()
    }

    /// First `(level, cell)` with `t < T` where `q > -threshold`, if any.
    pub fn first_nonnegative_derivative(&self) -> Option<(usize, usize)> {
        let eps = self.derivative_threshold();
        let q = &self.radial_derivative;
        (0..q.n_levels() - 1).find_map(|level| q.row(level).iter().position(|&v| v > -eps).map(|cell| (level, cell)))
    }
}

fn radial_derivative<T: Scalar>(row: &[T], h: T) -> Vec<T> {
    let n = row.len();
    if n == 1 {
        // single cell: difference against the Dirichlet value half a cell out
        return vec![-row[0] / (h * T::lit(0.5))];
    }
    let two_h = h + h;
    (0..n)
        .map(|i| {
            if i == 0 {
                (row[1] - row[0]) / h
            } else if i + 1 == n {
                (row[n - 1] - row[n - 2]) / h
            } else {
                (row[i + 1] - row[i - 1]) / two_h
            }
        })
        .collect()
}

/// Solves `p_t + Delta p = 0`, `p(T) = phi`, backward in time.
///
/// Row `n` equals row `n_t - n` of [`heat_semigroup`] of `phi`, bit for bit.
pub fn solve_adjoint<T: Scalar>(phi: &RadialField<T>, tgrid: Arc<TimeGrid<T>>) -> Result<AdjointSolution<T>> {
    if let Some(j) = phi.values().iter().position(|&v| v < -T::lit(NEGATIVE_SLACK)) {
        return Err(Error::Domain(format!("terminal datum negative in cell {j}")));
    }
    let forward = heat_semigroup(phi, tgrid.clone())?;
    let grid = phi.grid().clone();
    let n_levels = tgrid.n_levels();
    let h = grid.spacing();
    let mut p = Vec::with_capacity(forward.values().len());
    let mut q = Vec::with_capacity(forward.values().len());
    for level in 0..n_levels {
        let row = forward.row(n_levels - 1 - level);
        p.extend_from_slice(row);
        q.extend(radial_derivative(row, h));
    }
    let p = SpaceTimeField::new(grid.clone(), tgrid.clone(), FieldKind::Adjoint, p)?;
    let radial_derivative = SpaceTimeField::new(grid, tgrid, FieldKind::Adjoint, q)?;
    Ok(AdjointSolution { p, terminal: phi.clone(), radial_derivative })
}

/// Both sides of `integral u_f(T) phi = double integral f p_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duality<T> {
    /// `integral u_f(T) phi` from the forward solve.
    pub state_side: T,
    /// `double integral f p_phi` from the adjoint solve, row `n` weighted by `p^n`.
    pub adjoint_side: T,
    /// Same product with `p` averaged over each interval's end points,
    /// `sum_n dt <f^n, (p^{n-1} + p^n) / 2>_M`. Differs from `state_side` by `O(dt)`.
    pub adjoint_side_trapezoid: T,
}

impl<T: Scalar> Duality<T> {
    pub fn gap(&self) -> T {
        (self.state_side - self.adjoint_side).abs()
    }

    pub fn trapezoid_gap(&self) -> T {
        (self.state_side - self.adjoint_side_trapezoid).abs()
    }
}

/// Evaluates both sides of the duality identity with implicit Euler.
pub fn duality<T: Scalar>(f: &SpaceTimeField<T>, phi: &RadialField<T>) -> Result<Duality<T>> {
    crate::field::ensure_same_grid(f.grid(), phi.grid())?;
    let u = solve_heat(f, Scheme::ImplicitEuler)?;
    let state_side = u.terminal().inner(phi)?;
    let adj = solve_adjoint(phi, f.tgrid().clone())?;
    let adjoint_side = f.integrate_product(&adj.p)?;
    let dt = f.tgrid().step();
    let mut shift = T::zero();
    for n in 1..f.n_levels() {
        let fs = f.slice(n);
        shift = shift + fs.inner(&adj.p.slice(n - 1))? - fs.inner(&adj.p.slice(n))?;
    }
    Ok(Duality { state_side, adjoint_side, adjoint_side_trapezoid: adjoint_side + shift * dt * T::lit(0.5) })
}

/// `|integral u_f(T) phi - double integral f p_phi|`.
pub fn duality_gap<T: Scalar>(f: &SpaceTimeField<T>, phi: &RadialField<T>) -> Result<T> {
    Ok(duality(f, phi)?.gap())
}

/// Minimum of the state over all levels and cells.
pub fn maximum_principle_check<T: Scalar>(sol: &HeatSolution<T>) -> T {
    sol.u.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids(d: usize, n_r: usize, horizon: f64, n_t: usize) -> (Arc<RadialGrid<f64>>, Arc<TimeGrid<f64>>) {
        (
            Arc::new(RadialGrid::new(1.0, d, n_r).unwrap()),
            Arc::new(TimeGrid::new(horizon, n_t).unwrap()),
        )
    }

    #[test]
    fn zero_source_zero_state() {
        let (g, tg) = grids(2, 16, 1.0, 8);
        let f = SpaceTimeField::zeros(g.clone(), tg.clone(), FieldKind::Control);
        let sol = solve_heat(&f, Scheme::ImplicitEuler).unwrap();
        assert!(sol.u.values().iter().all(|&v| v == 0.0));
        assert_eq!(maximum_principle_check(&sol), 0.0);
        let adj = solve_adjoint(&RadialField::constant(g, 0.0), tg).unwrap();
        assert!(adj.p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_source_min_is_zero() {
        let (g, tg) = grids(2, 16, 1.0, 8);
        let f = SpaceTimeField::from_fn(g, tg, FieldKind::Control, |_, _| 1.0).unwrap();
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let sol = solve_heat(&f, scheme).unwrap();
            assert_eq!(maximum_principle_check(&sol), 0.0);
            assert!(sol.residual_norm < 1e-12);
        }
    }

    #[test]
    fn scheme_names() {
        for s in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("euler".parse::<Scheme>().is_err());
    }

    #[test]
    fn adjoint_terminal_and_reversal() {
        let (g, tg) = grids(3, 24, 0.5, 10);
        let phi = RadialField::from_fn(g, |r| (1.0 - r * r).max(0.0)).unwrap();
        let adj = solve_adjoint(&phi, tg.clone()).unwrap();
        assert_eq!(adj.p.row(10), phi.values());
        let free = heat_semigroup(&phi, tg).unwrap();
        for n in 0..=10 {
            assert_eq!(adj.p.row(n), free.row(10 - n));
        }
        assert!(adj.first_nonnegative_derivative().is_none());
    }

    #[test]
    fn negative_terminal_rejected() {
        let (g, tg) = grids(2, 4, 1.0, 2);
        let phi = RadialField::new(g, vec![1.0, 0.5, -0.1, 0.0]).unwrap();
        assert!(matches!(solve_adjoint(&phi, tg), Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_stepper() {
        let (g, tg) = grids(2, 4, 1.0, 2);
        let (g2, _) = grids(2, 5, 1.0, 2);
        let stepper = HeatStepper::new(g2, tg.clone(), Scheme::ImplicitEuler).unwrap();
        let f = SpaceTimeField::zeros(g, tg, FieldKind::Control);
        assert!(solve_heat_with(&stepper, &f).is_err());
    }
}
