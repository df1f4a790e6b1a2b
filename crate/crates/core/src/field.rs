//! Cell-averaged radial fields and space-time fields, with their quadratures.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, TimeGrid};
use crate::scalar::Scalar;

/// Role of a space-time field; controls must stay in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Control,
    State,
    Adjoint,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Control => "control",
            FieldKind::State => "state",
            FieldKind::Adjoint => "adjoint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "control" => Some(FieldKind::Control),
            "state" => Some(FieldKind::State),
            "adjoint" => Some(FieldKind::Adjoint),
            _ => None,
        }
    }
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Validation(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// A function of radius at a fixed time, one value per radial cell.
#[derive(Debug, Clone)]
pub struct RadialField<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> RadialField<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<RadialGrid<T>>, value: T) -> Self {
        let values = vec![value; grid.n_cells()];
        Self { grid, values }
    }

    /// Samples `g` at the cell centres.
    pub fn from_fn(grid: Arc<RadialGrid<T>>, g: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.centers().into_iter().map(g).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, g: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| g(v)).collect())
    }

    /// `integral over B(0, r)` of the field.
    ///
    /// Exact for piecewise-constant cell data: the cell cut by the sphere of
    /// radius `r` contributes `value * w_d (r^d - r_i^d)`.
    pub fn integrate_ball(&self, r: T) -> Result<T> {
        let grid = &*self.grid;
        if !(r >= T::zero() && r <= grid.radius()) {
            return Err(Error::Domain(format!(
                "radius {r} outside [0, {}]",
                grid.radius()
            )));
        }
        let nodes = grid.nodes();
        let mut acc = T::zero();
        for (i, (&v, &vol)) in self.values.iter().zip(grid.cell_volumes()).enumerate() {
            if nodes[i + 1] <= r {
                acc = acc + v * vol;
            } else {
                if r > nodes[i] {
                    acc = acc + v * (grid.ball_volume(r) - grid.ball_volume(nodes[i]));
                }
                break;
            }
        }
        Ok(acc)
    }

    /// Integral over the whole ball.
    pub fn total(&self) -> T {
        self.values.iter().zip(self.grid.cell_volumes()).map(|(&v, &w)| v * w).sum()
    }

    /// `integral of self * other` over the ball.
    pub fn inner(&self, other: &Self) -> Result<T> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.cell_volumes())
            .map(|((&a, &b), &w)| a * b * w)
            .sum())
    }
}

pub(crate) fn ensure_same_grid<T: Scalar>(a: &RadialGrid<T>, b: &RadialGrid<T>) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "(R={}, d={}, n_r={}) vs (R={}, d={}, n_r={})",
            a.radius(),
            a.dim(),
            a.n_cells(),
            b.radius(),
            b.dim(),
            b.n_cells()
        )))
    }
}

/// A function on `(0, T) x B(0, R)`, radial in space.
///
/// Stored row-major: row `i` is time level `t_i`, column `j` radial cell `j`.
/// For time integration, row `n >= 1` stands for the interval
/// `(t_{n-1}, t_n]`; row 0 carries no quadrature weight.
#[derive(Debug, Clone)]
pub struct SpaceTimeField<T> {
    grid: Arc<RadialGrid<T>>,
    tgrid: Arc<TimeGrid<T>>,
    kind: FieldKind,
    values: Vec<T>,
}

impl<T: Scalar> SpaceTimeField<T> {
    pub fn new(
        grid: Arc<RadialGrid<T>>,
        tgrid: Arc<TimeGrid<T>>,
        kind: FieldKind,
        values: Vec<T>,
    ) -> Result<Self> {
        let expected = tgrid.n_levels() * grid.n_cells();
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} space-time grid",
                values.len(),
                tgrid.n_levels(),
                grid.n_cells()
            )));
        }
        check_finite(&values)?;
        let field = Self { grid, tgrid, kind, values };
        field.validate()?;
        Ok(field)
    }

    pub fn zeros(grid: Arc<RadialGrid<T>>, tgrid: Arc<TimeGrid<T>>, kind: FieldKind) -> Self {
        let values = vec![T::zero(); tgrid.n_levels() * grid.n_cells()];
        Self { grid, tgrid, kind, values }
    }

    /// Samples `g(t, r)` at every time level and cell centre.
    pub fn from_fn(
        grid: Arc<RadialGrid<T>>,
        tgrid: Arc<TimeGrid<T>>,
        kind: FieldKind,
        g: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        let centers = grid.centers();
        let mut values = Vec::with_capacity(tgrid.n_levels() * centers.len());
        for &t in tgrid.times() {
            values.extend(centers.iter().map(|&r| g(t, r)));
        }
        Self::new(grid, tgrid, kind, values)
    }

    /// Samples a function of time and radius on intervals: row `n >= 1` takes
    /// `g` at the midpoint of `(t_{n-1}, t_n]`, row 0 repeats row 1.
    pub fn from_interval_fn(
        grid: Arc<RadialGrid<T>>,
        tgrid: Arc<TimeGrid<T>>,
        kind: FieldKind,
        g: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        let centers = grid.centers();
        let times = tgrid.times();
        let half = T::lit(0.5);
        let mut values = Vec::with_capacity(tgrid.n_levels() * centers.len());
        for n in 1..times.len() {
            let mid = half * (times[n - 1] + times[n]);
            values.extend(centers.iter().map(|&r| g(mid, r)));
        }
        let first = values[..centers.len()].to_vec();
        values.splice(0..0, first);
        Self::new(grid, tgrid, kind, values)
    }

    /// Repeats one radial profile at every time level.
    pub fn time_constant(field: &RadialField<T>, tgrid: Arc<TimeGrid<T>>, kind: FieldKind) -> Result<Self> {
        let mut values = Vec::with_capacity(tgrid.n_levels() * field.values().len());
        for _ in 0..tgrid.n_levels() {
            values.extend_from_slice(field.values());
        }
        Self::new(field.grid().clone(), tgrid, kind, values)
    }

    /// Checks the invariants of the field's kind.
    pub fn validate(&self) -> Result<()> {
        if self.kind == FieldKind::Control {
            let n_r = self.n_cells();
            if let Some(k) = self.values.iter().position(|&v| v < T::zero() || v > T::one()) {
                return Err(Error::Validation(format!(
                    "control value {} outside [0, 1] at time level {}, cell {}",
                    self.values[k],
                    k / n_r,
                    k % n_r
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn tgrid(&self) -> &Arc<TimeGrid<T>> {
        &self.tgrid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Result<Self> {
        self.kind = kind;
        self.validate()?;
        Ok(self)
    }

    pub fn n_levels(&self) -> usize {
        self.tgrid.n_levels()
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, level: usize) -> &[T] {
        let n = self.n_cells();
        &self.values[level * n..(level + 1) * n]
    }

    pub fn row_mut(&mut self, level: usize) -> &mut [T] {
        let n = self.n_cells();
        &mut self.values[level * n..(level + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks(self.n_cells())
    }

    /// The radial profile at one time level.
    pub fn slice(&self, level: usize) -> RadialField<T> {
        RadialField { grid: self.grid.clone(), values: self.row(level).to_vec() }
    }

    pub fn get(&self, level: usize, cell: usize) -> T {
        self.values[level * self.n_cells() + cell]
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// `a * self + b * other`, keeping the kind of `self` (validated).
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.ensure_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Self::new(self.grid.clone(), self.tgrid.clone(), self.kind, values)
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        ensure_same_grid(&self.grid, &other.grid)?;
        if *self.tgrid != *other.tgrid {
            return Err(Error::GridMismatch("time grids differ".into()));
        }
        Ok(())
    }

    /// `Vol((0, T) x B(0, R))`.
    pub fn domain_volume(&self) -> T {
        self.tgrid.horizon() * self.grid.total_volume()
    }

    /// Space-time integral: rows `1..=n_t` with weight `dt` each (one per
    /// interval) times exact cell volumes in space.
    pub fn integrate(&self) -> T {
        let dt = self.tgrid.step();
        let vols = self.grid.cell_volumes();
        let mut acc = T::zero();
        for level in 1..=self.tgrid.n_steps() {
            let row: T = self.row(level).iter().zip(vols).map(|(&v, &w)| v * w).sum();
            acc = acc + row;
        }
        acc * dt
    }

    /// Space-time integral of the pointwise product with `other`.
    pub fn integrate_product(&self, other: &Self) -> Result<T> {
        self.ensure_compatible(other)?;
        let dt = self.tgrid.step();
        let vols = self.grid.cell_volumes();
        let mut acc = T::zero();
        for level in 1..=self.tgrid.n_steps() {
            let row: T = self
                .row(level)
                .iter()
                .zip(other.row(level))
                .zip(vols)
                .map(|((&a, &b), &w)| a * b * w)
                .sum();
            acc = acc + row;
        }
        Ok(acc * dt)
    }
}
