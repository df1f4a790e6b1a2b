use std::sync::Arc;

use proptest::prelude::*;
use talenti_core::control::{bathtub_optimize, objective};
use talenti_core::experiments::random::{random_cells, sample_rng};
use talenti_core::experiments::{
    random_bang_bang, random_block_control, smooth_dirichlet_field, verify_talenti, CutoffSpec,
};
use talenti_core::field::{RadialField, SpaceTimeField};
use talenti_core::grid::{RadialGrid, TimeGrid};
use talenti_core::heat::{duality, heat_semigroup, solve_adjoint, solve_heat, Scheme};
use talenti_core::rearrange::{dominates, hardy_littlewood_gap};
use talenti_core::{FieldKind, SchwarzRearrange};

fn grids(d: usize, n_r: usize, n_t: usize) -> (Arc<RadialGrid<f64>>, Arc<TimeGrid<f64>>) {
    (Arc::new(RadialGrid::new(1.0, d, n_r).unwrap()), Arc::new(TimeGrid::new(0.5, n_t).unwrap()))
}

fn block(d: usize, seed: u64, fraction: f64) -> SpaceTimeField<f64> {
    let (g, tg) = grids(d, 32, 24);
    let vol = fraction * 0.5 * g.total_volume();
    random_block_control(g, tg, &mut sample_rng(seed, 0), vol, (4, 4)).unwrap().into_field()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_is_linear(d in 1usize..=3, s1 in 0u64..1000, s2 in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = block(d, s1, 0.3).with_kind(FieldKind::State).unwrap();
        let g = block(d, s2, 0.6).with_kind(FieldKind::State).unwrap();
        let mix = f.combine(a, &g, b).unwrap();
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let uf = solve_heat(&f, scheme).unwrap().u;
            let ug = solve_heat(&g, scheme).unwrap().u;
            let um = solve_heat(&mix, scheme).unwrap().u;
            let scale = uf.values().iter().chain(ug.values()).fold(0.0f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs() + 1.0);
            for ((x, y), z) in uf.values().iter().zip(ug.values()).zip(um.values()) {
                prop_assert!((a * x + b * y - z).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn ordered_sources_give_ordered_states(d in 1usize..=3, seed in 0u64..1000) {
        let f = block(d, seed, 0.3);
        let bigger: Vec<f64> = f.values().iter().map(|&v| (v + 0.2).min(1.0)).collect();
        let g = SpaceTimeField::new(f.grid().clone(), f.tgrid().clone(), FieldKind::Control, bigger).unwrap();
        let uf = solve_heat(&f, Scheme::ImplicitEuler).unwrap().u;
        let ug = solve_heat(&g, Scheme::ImplicitEuler).unwrap().u;
        for (x, y) in uf.values().iter().zip(ug.values()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn adjoint_is_the_reversed_semigroup(d in 1usize..=3, seed in 0u64..1000) {
        let (g, tg) = grids(d, 24, 16);
        let phi = smooth_dirichlet_field(g, &mut sample_rng(seed, 0)).unwrap();
        let adj = solve_adjoint(&phi, tg.clone()).unwrap();
        let fwd = heat_semigroup(&phi, tg).unwrap();
        let n = fwd.n_levels();
        for level in 0..n {
            prop_assert_eq!(adj.p.row(level), fwd.row(n - 1 - level));
        }
    }

    #[test]
    fn discrete_duality_is_exact(d in 1usize..=3, seed in 0u64..1000) {
        let f = block(d, seed, 0.4);
        let phi = smooth_dirichlet_field(f.grid().clone(), &mut sample_rng(seed, 1)).unwrap();
        let dual = duality(&f, &phi).unwrap();
        prop_assert!(dual.gap() <= 1e-13 * dual.state_side.abs().max(1e-300));
    }

    #[test]
    fn bathtub_beats_admissible_competitors(d in 1usize..=3, seed in 0u64..1000, fraction in 0.05f64..0.95) {
        let (g, tg) = grids(d, 32, 24);
        let phi = random_cells(g.clone(), &mut sample_rng(seed, 0)).unwrap().schwarz_rearrange().unwrap();
        prop_assume!(phi.values().iter().any(|&v| v != phi.values()[0]));
        let vol = fraction * 0.5 * g.total_volume();
        let (sol, adj) = bathtub_optimize(&phi, tg.clone(), vol).unwrap();
        let best = sol.objective;
        let mut rng = sample_rng(seed, 1);
        for _ in 0..4 {
            let a = random_bang_bang(g.clone(), tg.clone(), &mut rng, vol).unwrap();
            let b = random_block_control(g.clone(), tg.clone(), &mut rng, vol, (4, 4)).unwrap();
            prop_assert!(objective(a.field(), &adj).unwrap() <= best * (1.0 + 1e-12));
            prop_assert!(objective(b.field(), &adj).unwrap() <= best * (1.0 + 1e-12));
        }
        prop_assert!(sol.certificate_error() <= 1e-10);
    }

    #[test]
    fn rearranged_source_dominates(d in 1usize..=3, seed in 0u64..1000) {
        let (g, tg) = grids(d, 32, 24);
        let vol = 0.3 * 0.5 * g.total_volume();
        let f = random_block_control(g, tg, &mut sample_rng(seed, 0), vol, (4, 4)).unwrap();
        let check = verify_talenti(&f, Scheme::ImplicitEuler).unwrap();
        prop_assert!(check.worst_margin <= 1e-12);
    }

    #[test]
    fn concentration_order_basics(d in 1usize..=3, seed in 0u64..1000) {
        let g = Arc::new(RadialGrid::new(1.0, d, 40).unwrap());
        let mut rng = sample_rng(seed, 0);
        let f = random_cells(g.clone(), &mut rng).unwrap();
        let h = random_cells(g, &mut rng).unwrap();
        prop_assert!(dominates(&f, &f, 0.0).unwrap().holds);
        // f and f# carry the same profile up to the projection's roundoff
        let sharp = f.schwarz_rearrange().unwrap();
        prop_assert!(dominates(&f, &sharp, 1e-12).unwrap().holds);
        prop_assert!(dominates(&sharp, &f, 1e-12).unwrap().holds);
        prop_assert!(hardy_littlewood_gap(&f, &h).unwrap() >= 0.0);
        // scaling by 2 dominates
        let twice = f.map(|v| 2.0 * v).unwrap();
        prop_assert!(dominates(&f, &twice, 0.0).unwrap().holds);
    }
}

#[test]
fn cutoff_adjoints_decrease_in_r() {
    for d in 1..=3 {
        let (g, tg) = grids(d, 128, 128);
        for cut in [CutoffSpec::phi(1.0), CutoffSpec::psi(1.0)] {
            let adj = solve_adjoint(&cut.sample(g.clone()).unwrap(), tg.clone()).unwrap();
            assert_eq!(adj.first_nonnegative_derivative(), None, "d = {d}, {cut:?}");
        }
    }
}

#[test]
fn radial_fields_round_trip_through_rearrangement_once() {
    let g = Arc::new(RadialGrid::<f64>::new(1.0, 2, 64).unwrap());
    let f = RadialField::from_fn(g, |r| (1.0 - r) * (1.0 + (6.0 * r).sin())).unwrap();
    let once = f.schwarz_rearrange().unwrap();
    assert_eq!(once.schwarz_rearrange().unwrap().values(), once.values());
    assert!(once.values().windows(2).all(|w| w[1] <= w[0]));
}
