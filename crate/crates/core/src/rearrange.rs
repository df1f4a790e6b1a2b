//! Schwarz rearrangement on the radial grid and the concentration preorder.
//!
//! A cell field is a step function on the discrete measure space of cells.
//! Its decreasing rearrangement is the list of `(value, volume)` layers sorted
//! by value, laid out from the centre outward in enclosed-volume coordinates
//! ([`DecreasingProfile`]). Layer boundaries generally fall inside cells, so
//! the grid representation ([`DecreasingProfile::project`]) stores cell
//! averages; every node integral `integral over B(0, r_i)` is preserved.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{ensure_same_grid, RadialField, SpaceTimeField};
use crate::grid::RadialGrid;
use crate::operator::Stiffness;
use crate::scalar::Scalar;

/// Values in `[-NEGATIVE_SLACK, 0)` are treated as zero; anything lower is rejected.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// One sorted piece of a rearranged field: the value of source cell `cell`,
/// occupying that cell's volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer<T> {
    pub value: T,
    pub volume: T,
    pub cell: usize,
}

/// Exact radially non-increasing rearrangement of a cell field.
#[derive(Debug, Clone)]
pub struct DecreasingProfile<T> {
    grid: Arc<RadialGrid<T>>,
    layers: Vec<Layer<T>>,
}

fn clamp_nonnegative<T: Scalar>(v: T, cell: usize) -> Result<T> {
    if v >= T::zero() {
        Ok(v)
    } else if v >= -T::lit(NEGATIVE_SLACK) {
        Ok(T::zero())
    } else {
        Err(Error::Domain(format!("negative value {v} in cell {cell}")))
    }
}

impl<T: Scalar> DecreasingProfile<T> {
    /// Sorts the cells by decreasing value; ties keep the original cell order.
    pub fn of(field: &RadialField<T>) -> Result<Self> {
        Self::from_values(field.grid().clone(), field.values())
    }

    fn from_values(grid: Arc<RadialGrid<T>>, values: &[T]) -> Result<Self> {
        let mut layers = values
            .iter()
            .zip(grid.cell_volumes())
            .enumerate()
            .map(|(cell, (&v, &volume))| Ok(Layer { value: clamp_nonnegative(v, cell)?, volume, cell }))
            .collect::<Result<Vec<_>>>()?;
        layers.sort_by(|a, b| b.value.partial_cmp(&a.value).expect("finite values").then(a.cell.cmp(&b.cell)));
        Ok(Self { grid, layers })
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn total_mass(&self) -> T {
        self.layers.iter().map(|l| l.value * l.volume).sum()
    }

    /// `sup { integral_E g : Vol(E) = volume }`, i.e. the mass of the rearranged
    /// field inside the centred ball of that volume.
    pub fn mass_within(&self, volume: T) -> T {
        let mut acc = T::zero();
        let mut start = T::zero();
        for l in &self.layers {
            if volume <= start {
                break;
            }
            let end = start + l.volume;
            acc = acc + l.value * (end.min(volume) - start);
            start = end;
        }
        acc
    }

    pub fn mass_within_radius(&self, r: T) -> T {
        self.mass_within(self.grid.ball_volume(r))
    }

    /// `Vol({g# >= level})`; volumes are summed in source-cell order, so the
    /// result is bit-identical to [`distribution_function`] of the source.
    pub fn distribution(&self, level: T) -> T {
        let mut cells: Vec<usize> = self.layers.iter().take_while(|l| l.value >= level).map(|l| l.cell).collect();
        cells.sort_unstable();
        let vols = self.grid.cell_volumes();
        cells.into_iter().map(|c| vols[c]).fold(T::zero(), |a, v| a + v)
    }

    /// Value of the rearranged function at enclosed volume `volume`.
    pub fn value_at_volume(&self, volume: T) -> T {
        let mut end = T::zero();
        for l in &self.layers {
            end = end + l.volume;
            if volume < end {
                return l.value;
            }
        }
        self.layers.last().map_or(T::zero(), |l| l.value)
    }

    /// Cell averages of the rearranged function on the grid.
    ///
    /// Layers are poured into cells from the centre outward; a cell covered by
    /// a single layer takes its value exactly.
    pub fn project(&self) -> RadialField<T> {
        let grid = &*self.grid;
        let n = grid.n_cells();
        let cum = grid.cumulative_volumes();
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        let mut s_start = T::zero();
        let mut s_end = self.layers.first().map_or(T::zero(), |l| l.volume);
        for i in 0..n {
            let c_start = cum[i];
            let c_end = if i + 1 == n { T::infinity() } else { cum[i + 1] };
            // layer and cell boundaries come from different running sums;
            // ignore overlaps that are pure roundoff
            let sliver = T::lit(1e-12) * grid.cell_volumes()[i];
            let (mut acc, mut covered, mut pieces) = (T::zero(), T::zero(), 0usize);
            let (mut hi_val, mut lo_val) = (T::neg_infinity(), T::infinity());
            while k < self.layers.len() {
                let l = &self.layers[k];
                let overlap = s_end.min(c_end) - s_start.max(c_start);
                if overlap > sliver {
                    acc = acc + l.value * overlap;
                    covered = covered + overlap;
                    pieces += 1;
                    hi_val = hi_val.max(l.value);
                    lo_val = lo_val.min(l.value);
                }
                if s_end <= c_end {
                    k += 1;
                    s_start = s_end;
                    if k < self.layers.len() {
                        s_end = s_end + self.layers[k].volume;
                    }
                } else {
                    break;
                }
            }
            let mut v = match pieces {
                0 => out.last().copied().unwrap_or(T::zero()),
                1 => hi_val,
                _ => (acc / covered).max(lo_val).min(hi_val),
            };
            if let Some(&prev) = out.last() {
                v = v.min(prev);
            }
            out.push(v);
        }
        RadialField::new(self.grid.clone(), out).expect("projection keeps grid shape")
    }

    /// `integral over B(0, r_i) of g#` at every node.
    pub fn cumulative_at_nodes(&self) -> Vec<T> {
        let cum = self.grid.cumulative_volumes();
        let n = cum.len() - 1;
        let mut out = Vec::with_capacity(n + 1);
        out.push(T::zero());
        let mut acc = T::zero();
        let mut k = 0;
        let mut start = T::zero();
        for i in 1..n {
            let target = cum[i];
            while k < self.layers.len() {
                let l = &self.layers[k];
                let end = start + l.volume;
                if end <= target {
                    acc = acc + l.value * l.volume;
                    start = end;
                    k += 1;
                } else {
                    break;
                }
            }
            let partial = match self.layers.get(k) {
                Some(l) if target > start => l.value * (target - start),
                _ => T::zero(),
            };
            out.push(acc + partial);
        }
        out.push(self.total_mass());
        out
    }
}

/// Schwarz rearrangement of radial or space-time fields.
pub trait SchwarzRearrange: Sized {
    fn schwarz_rearrange(&self) -> Result<Self>;
}

impl<T: Scalar> SchwarzRearrange for RadialField<T> {
    fn schwarz_rearrange(&self) -> Result<Self> {
        Ok(DecreasingProfile::of(self)?.project())
    }
}

impl<T: Scalar> SchwarzRearrange for SpaceTimeField<T> {
    /// Rearranges each time level independently: `(t, x) -> (f(t, .))#(x)`.
    fn schwarz_rearrange(&self) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values().len());
        for row in self.rows() {
            let p = DecreasingProfile::from_values(self.grid().clone(), row)?;
            values.extend(p.project().into_values());
        }
        SpaceTimeField::new(self.grid().clone(), self.tgrid().clone(), self.kind(), values)
    }
}

pub fn schwarz_rearrange<F: SchwarzRearrange>(g: &F) -> Result<F> {
    g.schwarz_rearrange()
}

/// `Vol({g >= level})`.
pub fn distribution_function<T: Scalar>(g: &RadialField<T>, level: T) -> T {
    g.values()
        .iter()
        .zip(g.grid().cell_volumes())
        .filter(|(&v, _)| v >= level)
        .fold(T::zero(), |a, (_, &w)| a + w)
}

/// Node values `r_i -> integral over B(0, r_i) of g#`.
#[derive(Debug, Clone)]
pub struct ConcentrationProfile<T> {
    grid: Arc<RadialGrid<T>>,
    cumulative: Vec<T>,
}

impl<T: Scalar> ConcentrationProfile<T> {
    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    pub fn total_mass(&self) -> T {
        *self.cumulative.last().expect("non-empty")
    }
}

pub fn concentration_profile<T: Scalar>(g: &RadialField<T>) -> Result<ConcentrationProfile<T>> {
    let p = DecreasingProfile::of(g)?;
    Ok(ConcentrationProfile { grid: g.grid().clone(), cumulative: p.cumulative_at_nodes() })
}

/// Outcome of a `f < g` test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domination<T> {
    pub holds: bool,
    /// `max_i (profile_f[i] - profile_g[i])`; never negative since both vanish at the origin.
    pub margin: T,
    /// Node where the margin is attained.
    pub node: usize,
}

/// Compares two concentration profiles node by node.
pub fn dominates_profiles<T: Scalar>(
    f: &ConcentrationProfile<T>,
    g: &ConcentrationProfile<T>,
    tol: T,
) -> Result<Domination<T>> {
    ensure_same_grid(&f.grid, &g.grid)?;
    let (node, margin) = f
        .cumulative
        .iter()
        .zip(&g.cumulative)
        .map(|(&a, &b)| a - b)
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, m)| if m > best.1 { (i, m) } else { best });
    Ok(Domination { holds: margin <= tol, margin, node })
}

/// Is `f < g`, i.e. does `g` dominate `f` in concentration?
pub fn dominates<T: Scalar>(f: &RadialField<T>, g: &RadialField<T>, tol: T) -> Result<Domination<T>> {
    ensure_same_grid(f.grid(), g.grid())?;
    dominates_profiles(&concentration_profile(f)?, &concentration_profile(g)?, tol)
}

/// `integral f# g# - integral f g`, non-negative by the Hardy-Littlewood inequality.
///
/// The first integral is evaluated exactly on the sorted layers.
pub fn hardy_littlewood_gap<T: Scalar>(f: &RadialField<T>, g: &RadialField<T>) -> Result<T> {
    ensure_same_grid(f.grid(), g.grid())?;
    let pf = DecreasingProfile::of(f)?;
    let pg = DecreasingProfile::of(g)?;
    let (a, b) = (pf.layers(), pg.layers());
    let (mut i, mut j) = (0, 0);
    let (mut a_end, mut b_end) = (a[0].volume, b[0].volume);
    let mut pos = T::zero();
    let mut rearranged = T::zero();
    while i < a.len() && j < b.len() {
        let next = a_end.min(b_end);
        rearranged = rearranged + a[i].value * b[j].value * (next - pos);
        pos = next;
        if a_end <= next {
            i += 1;
            if i < a.len() {
                a_end = a_end + a[i].volume;
            }
        }
        if b_end <= next {
            j += 1;
            if j < b.len() {
                b_end = b_end + b[j].volume;
            }
        }
    }
    let plain = f.inner(g)?;
    Ok(rearranged - plain)
}

/// Discrete Dirichlet energy `integral |grad f|^2` (surface-weighted squared
/// radial differences, zero Dirichlet value at `r = R`).
pub fn dirichlet_energy<T: Scalar>(f: &RadialField<T>) -> T {
    Stiffness::new(f.grid()).energy(f.values())
}

/// `integral |grad f|^2 - integral |grad f#|^2` for a non-negative field
/// vanishing in the outermost cell.
///
/// Non-negative for the continuum inequality; on the grid it may dip below
/// zero by a discretization error that shrinks with the cell size.
pub fn polya_szego_gap<T: Scalar>(f: &RadialField<T>) -> Result<T> {
    let last = *f.values().last().expect("non-empty grid");
    if last.abs() > T::lit(NEGATIVE_SLACK) {
        return Err(Error::Domain(format!("field must vanish in the outermost cell, found {last}")));
    }
    let rearranged = f.schwarz_rearrange()?;
    Ok(dirichlet_energy(f) - dirichlet_energy(&rearranged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(d: usize, n: usize) -> Arc<RadialGrid<f64>> {
        Arc::new(RadialGrid::new(1.0, d, n).unwrap())
    }

    fn field(d: usize, values: Vec<f64>) -> RadialField<f64> {
        RadialField::new(grid(d, values.len()), values).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let f = RadialField::constant(grid(2, 10), 0.3);
        assert_eq!(f.schwarz_rearrange().unwrap().values(), f.values());
    }

    #[test]
    fn annulus_becomes_ball() {
        let g = grid(2, 20);
        let annulus = RadialField::from_fn(g.clone(), |r| if (0.4..0.7).contains(&r) { 1.0 } else { 0.0 }).unwrap();
        let p = DecreasingProfile::of(&annulus).unwrap();
        let rho = g.radius_of_volume(g.ball_volume(0.7) - g.ball_volume(0.4));
        // exact step: 1 inside the ball of radius rho, 0 outside
        assert_eq!(p.value_at_volume(g.ball_volume(rho) * (1.0 - 1e-9)), 1.0);
        assert_eq!(p.value_at_volume(g.ball_volume(rho) * (1.0 + 1e-9)), 0.0);
        let proj = p.project();
        assert!(proj.values().windows(2).all(|w| w[0] >= w[1]));
        for &r in g.nodes() {
            let expect = g.ball_volume(r.min(rho));
            assert!((proj.integrate_ball(r).unwrap() - expect).abs() < 1e-12, "r={r}");
        }
        // the cell straddling rho carries the fractional fill
        let fractional = proj.values().iter().filter(|&&v| v > 0.0 && v < 1.0).count();
        assert!(fractional <= 1);
    }

    #[test]
    fn distribution_function_examples() {
        let g = grid(2, 64);
        let c = RadialField::constant(g.clone(), 0.4);
        assert!((distribution_function(&c, 0.4) - std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(distribution_function(&c, 0.41), 0.0);
        let ball = RadialField::from_fn(g, |r| if r < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!((distribution_function(&ball, 0.5) - std::f64::consts::PI / 4.0).abs() < 1e-13);
    }

    #[test]
    fn negative_values() {
        let f = field(1, vec![0.5, -1e-13, 0.1]);
        assert_eq!(f.schwarz_rearrange().unwrap().values()[2], 0.0);
        assert!(matches!(field(2, vec![0.5, -1e-9]).schwarz_rearrange(), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_examples() {
        let g = grid(3, 16);
        let one = RadialField::constant(g.clone(), 1.0);
        let prof = concentration_profile(&one).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((prof.cumulative()[i] - g.ball_volume(r)).abs() < 1e-13);
        }
        let rho = g.nodes()[5];
        let ball = RadialField::from_fn(g.clone(), |r| if r < rho { 1.0 } else { 0.0 }).unwrap();
        let prof = concentration_profile(&ball).unwrap();
        for i in 5..=16 {
            assert!((prof.cumulative()[i] - g.ball_volume(rho)).abs() < 1e-13);
        }
    }

    #[test]
    fn half_height_wide_ball_is_dominated() {
        let g = grid(2, 64);
        let rho_wide = 0.75_f64;
        let rho = rho_wide / 2f64.sqrt();
        let wide = RadialField::from_fn(g.clone(), |r| if r < rho_wide { 0.5 } else { 0.0 }).unwrap();
        let tall = RadialField::from_fn(g, |r| if r < rho { 1.0 } else { 0.0 }).unwrap();
        assert!(dominates(&wide, &tall, 1e-12).unwrap().holds);
        assert!(!dominates(&tall, &wide, 1e-12).unwrap().holds);
        let refl = dominates(&wide, &wide, 0.0).unwrap();
        assert!(refl.holds && refl.margin == 0.0);
    }

    #[test]
    fn hardy_littlewood_disjoint_supports() {
        let g = grid(2, 64);
        let inner = RadialField::from_fn(g.clone(), |r| if r < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let outer = inner.map(|v| 1.0 - v).unwrap();
        let gap = hardy_littlewood_gap(&inner, &outer).unwrap();
        // after rearrangement both indicators are centred: overlap = smaller volume
        let expect = g.ball_volume(0.5).min(g.total_volume() - g.ball_volume(0.5));
        assert!((gap - expect).abs() < 1e-12, "{gap} vs {expect}");
        let dec = RadialField::from_fn(g, |r| 1.0 - r).unwrap();
        assert!(hardy_littlewood_gap(&dec, &inner).unwrap().abs() < 1e-14);
    }

    #[test]
    fn polya_szego_examples() {
        let g = grid(2, 32);
        let dec = RadialField::from_fn(g.clone(), |r| (1.0 - r).max(0.0).powi(2)).unwrap().map(|v| v).unwrap();
        let mut v = dec.values().to_vec();
        *v.last_mut().unwrap() = 0.0;
        let dec = RadialField::new(g, v).unwrap();
        assert_eq!(polya_szego_gap(&dec).unwrap(), 0.0);
        assert!(polya_szego_gap(&RadialField::constant(grid(2, 4), 1.0)).is_err());
    }

    #[test]
    fn polya_szego_reversed_profile_1d() {
        // reversed copy of a decreasing profile, then zero in the last cell
        let base = [5.0, 4.0, 2.5, 1.0, 0.5];
        let mut v: Vec<f64> = base.iter().rev().copied().collect();
        v.push(0.0);
        let f = field(1, v.clone());
        // d = 1, h = 1/6: every interior face has area 2, conductance 2/h;
        // boundary face 2/(h/2). Explicit sums:
        let h = 1.0 / 6.0;
        let energy = |w: &[f64]| {
            let inner: f64 = w.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() * 2.0 / h;
            inner + w[w.len() - 1].powi(2) * 4.0 / h
        };
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expect = energy(&v) - energy(&sorted);
        let gap = polya_szego_gap(&f).unwrap();
        assert!((gap - expect).abs() < 1e-9 * expect.abs().max(1.0));
        assert!(gap >= 0.0);
    }

    fn random_values() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (1usize..=4, proptest::collection::vec(prop_oneof![Just(0.0), Just(0.25), 0.0f64..2.0], 1..48))
    }

    proptest! {
        #[test]
        fn rearrangement_invariants((d, v) in random_values()) {
            let f = field(d, v);
            let p = DecreasingProfile::of(&f).unwrap();
            // equimeasurable at every level in the value set
            for &tau in f.values() {
                prop_assert_eq!(distribution_function(&f, tau), p.distribution(tau));
            }
            let once = p.project();
            prop_assert!(once.values().windows(2).all(|w| w[0] >= w[1]));
            let twice = once.schwarz_rearrange().unwrap();
            prop_assert_eq!(once.values(), twice.values());
            let (m0, m1) = (f.total(), once.total());
            prop_assert!((m0 - m1).abs() <= 1e-12 * m0.abs().max(1e-300));
            let prof = concentration_profile(&f).unwrap();
            let c = prof.cumulative();
            prop_assert_eq!(c[0], 0.0);
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0] - 1e-14));
            prop_assert!((c[c.len() - 1] - f.integrate_ball(1.0).unwrap()).abs() <= 1e-12 * m0.max(1e-300));
            // node values agree with integrate_ball of the projection
            for (i, &r) in f.grid().nodes().iter().enumerate() {
                prop_assert!((c[i] - once.integrate_ball(r).unwrap()).abs() <= 1e-12 * m0.max(1.0));
            }
            // concave in enclosed volume
            let vols = f.grid().cell_volumes();
            let slopes: Vec<f64> = c.windows(2).zip(vols).map(|(w, v)| (w[1] - w[0]) / v).collect();
            prop_assert!(slopes.windows(2).all(|s| s[1] <= s[0] * (1.0 + 1e-12) + 1e-14));
        }

        #[test]
        fn one_dimensional_rearrangement_is_a_permutation(v in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let f = field(1, v.clone());
            let mut sorted = v;
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let r = f.schwarz_rearrange().unwrap();
            prop_assert_eq!(r.values(), &sorted[..]);
        }

        #[test]
        fn preorder_properties(
            (d, a) in random_values(),
            seed in proptest::collection::vec(0.0f64..1.0, 48),
            bump in proptest::collection::vec(0.0f64..0.5, 48),
        ) {
            let n = a.len();
            let f = field(d, a.clone());
            let g = field(d, (0..n).map(|i| seed[i]).collect());
            let above = field(d, (0..n).map(|i| a[i] + bump[i]).collect());
            prop_assert!(dominates(&f, &above, 1e-12).unwrap().holds);
            let refl = dominates(&f, &f, 0.0).unwrap();
            prop_assert!(refl.holds);
            prop_assert_eq!(refl.margin, 0.0);
            let h = field(d, (0..n).map(|i| seed[(i + 7) % 48] * 1.5).collect());
            if dominates(&f, &g, 0.0).unwrap().holds && dominates(&g, &h, 0.0).unwrap().holds {
                prop_assert!(dominates(&f, &h, 1e-14).unwrap().holds);
            }
            prop_assert!(hardy_littlewood_gap(&f, &g).unwrap() >= -1e-12);
        }
    }
}
