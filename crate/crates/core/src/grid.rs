//! Radial and temporal discretizations of `(0, T) x B(0, R)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Volume of the unit ball in `R^d`.
///
/// Uses `w_1 = 2`, `w_2 = pi` and `w_d = 2 pi w_{d-2} / d`.
pub fn unit_ball_volume<T: Scalar>(d: usize) -> T {
    assert!(d >= 1, "dimension must be at least 1");
    let two_pi = T::PI() + T::PI();
    let mut w = if d % 2 == 1 { T::lit(2.0) } else { T::PI() };
    let mut k = if d % 2 == 1 { 1 } else { 2 };
    while k < d {
        k += 2;
        w = w * two_pi / T::of_usize(k);
    }
    w
}

/// Uniform radial discretization of the ball `B(0, R)` in `R^d`.
///
/// Cell `i` is the annulus `r_i <= |x| < r_{i+1}`; fields store one value
/// per cell.
#[derive(Debug, Clone)]
pub struct RadialGrid<T> {
    radius: T,
    dim: usize,
    nodes: Vec<T>,
    cell_volumes: Vec<T>,
    // cumulative_volumes[i] = sum of cell_volumes[..i]
    cumulative_volumes: Vec<T>,
    unit_volume: T,
}

impl<T: Scalar> RadialGrid<T> {
    pub fn new(radius: T, dim: usize, n_cells: usize) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
        }
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if n_cells == 0 {
            return Err(Error::Config("radial grid needs at least one cell".into()));
        }
        let h = radius / T::of_usize(n_cells);
        let mut nodes: Vec<T> = (0..=n_cells).map(|i| T::of_usize(i) * h).collect();
        nodes[n_cells] = radius;
        let unit_volume = unit_ball_volume::<T>(dim);
        let cell_volumes: Vec<T> = nodes
            .windows(2)
            .map(|w| unit_volume * (w[1].powi(dim as i32) - w[0].powi(dim as i32)))
            .collect();
        let mut cumulative_volumes = Vec::with_capacity(n_cells + 1);
        let mut acc = T::zero();
        cumulative_volumes.push(acc);
        for &v in &cell_volumes {
            acc = acc + v;
            cumulative_volumes.push(acc);
        }
        Ok(Self { radius, dim, nodes, cell_volumes, cumulative_volumes, unit_volume })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cell_volumes.len()
    }

    pub fn spacing(&self) -> T {
        self.radius / T::of_usize(self.n_cells())
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn cell_volumes(&self) -> &[T] {
        &self.cell_volumes
    }

    /// Running sums of cell volumes, `n_cells + 1` entries starting at zero.
    pub fn cumulative_volumes(&self) -> &[T] {
        &self.cumulative_volumes
    }

    pub fn centers(&self) -> Vec<T> {
        let half = T::lit(0.5);
        self.nodes.windows(2).map(|w| half * (w[0] + w[1])).collect()
    }

    /// Volume of the unit ball in this dimension.
    pub fn unit_volume(&self) -> T {
        self.unit_volume
    }

    /// `Vol(B(0, r))`.
    pub fn ball_volume(&self, r: T) -> T {
        self.unit_volume * r.powi(self.dim as i32)
    }

    /// `Vol(B(0, R))`.
    pub fn total_volume(&self) -> T {
        self.ball_volume(self.radius)
    }

    /// Radius of the centred ball with the given volume.
    pub fn radius_of_volume(&self, volume: T) -> T {
        if volume <= T::zero() {
            return T::zero();
        }
        (volume / self.unit_volume).powf(T::one() / T::of_usize(self.dim))
    }

    /// Area of the sphere `S(0, r)`.
    pub fn sphere_area(&self, r: T) -> T {
        T::of_usize(self.dim) * self.unit_volume * r.powi(self.dim as i32 - 1)
    }

    /// True when both grids discretize the same ball with the same cells.
    pub fn same_as(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n_cells() == other.n_cells() && self.radius == other.radius
    }
}

/// Uniform time grid `0 = t_0 < ... < t_{n_t} = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    times: Vec<T>,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(horizon: T, n_steps: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::Config(format!("time horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        let dt = horizon / T::of_usize(n_steps);
        let mut times: Vec<T> = (0..=n_steps).map(|i| T::of_usize(i) * dt).collect();
        times[n_steps] = horizon;
        Ok(Self { horizon, times })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_levels(&self) -> usize {
        self.times.len()
    }

    pub fn step(&self) -> T {
        self.horizon / T::of_usize(self.n_steps())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }
}
