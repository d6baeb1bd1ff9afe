use std::sync::Arc;

use crate::optimize::{brute_force_oracle, local_search, SearchOptions, TIE_TOL};
use crate::verify::{layer_cake_profile, Tolerances};
use crate::{
    build_grid, evaluate_set, evaluate_v, rc_quotient, solve_eigen, solve_harmonic_replacement,
    solve_torsion, CellSet, DomainSpec, FunctionalParams, Grid, MeasureKind, ProblemKind,
    ScalarField,
};
use proptest::prelude::*;

const RES: f64 = 12.0;

fn square() -> Arc<Grid> {
    build_grid(&DomainSpec::square(1.0), RES).unwrap()
}

fn set_from(grid: &Arc<Grid>, bits: &[bool]) -> CellSet {
    let mut active = vec![false; grid.len()];
    for (&p, &b) in grid.inside_nodes().iter().zip(bits) {
        active[p] = b;
    }
    CellSet::new(Arc::clone(grid), active).unwrap()
}

fn bits() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.7), 121)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn measure_is_bounded_by_the_design_region(b in bits()) {
        let g = square();
        let s = set_from(&g, &b);
        let full = CellSet::full(&g);
        prop_assert!(s.is_subset_of(&full));
        prop_assert!(s.measure() <= full.measure());
        prop_assert_eq!(s.count(), b.iter().filter(|&&x| x).count());
    }

    #[test]
    fn reflection_preserves_perimeter_and_compliance(b in bits(), axis in 0usize..2) {
        let s = set_from(&square(), &b);
        prop_assume!(!s.is_empty());
        let r = s.reflect(axis).unwrap();
        prop_assert_eq!(r.reflect(axis).unwrap(), s.clone());
        prop_assert_eq!(r.perimeter(), s.perimeter());
        let c = solve_torsion(&s, 1e-12).unwrap().compliance;
        let cr = solve_torsion(&r, 1e-12).unwrap().compliance;
        prop_assert!(rel(c, cr) < 1e-9, "{} vs {}", c, cr);
    }

    #[test]
    fn domain_monotonicity(b in bits(), extra in bits()) {
        let g = square();
        let small = set_from(&g, &b);
        prop_assume!(!small.is_empty());
        let union: Vec<bool> = b.iter().zip(&extra).map(|(x, y)| *x || *y).collect();
        let big = set_from(&g, &union);
        let (cs, cb) = (
            solve_torsion(&small, 1e-12).unwrap().compliance,
            solve_torsion(&big, 1e-12).unwrap().compliance,
        );
        prop_assert!(cs <= cb * (1.0 + 1e-9));
        let (ls, lb) = (
            solve_eigen(&small, 1e-10).unwrap().lambda1,
            solve_eigen(&big, 1e-10).unwrap().lambda1,
        );
        prop_assert!(ls >= lb * (1.0 - 1e-7), "{} < {}", ls, lb);
    }

    #[test]
    fn quotient_never_exceeds_compliance(b in bits(), vals in prop::collection::vec(0.0f64..1.0, 121)) {
        let g = square();
        let s = set_from(&g, &b);
        let mut field = vec![0.0; g.len()];
        for ((&p, &on), &x) in g.inside_nodes().iter().zip(&b).zip(&vals) {
            if on {
                field[p] = x;
            }
        }
        prop_assume!(field.iter().any(|&x| x > 0.0));
        let v = ScalarField::new(Arc::clone(&g), field).unwrap();
        let c = solve_torsion(&s, 1e-12).unwrap().compliance;
        prop_assert!(rc_quotient(&v).unwrap() <= c * (1.0 + 1e-9));
    }

    #[test]
    fn relaxed_cost_is_scale_invariant(
        vals in prop::collection::vec(0.0f64..1.0, 121),
        c in 0.01f64..100.0,
        alpha in 0.0f64..1.99,
    ) {
        let g = square();
        let mut field = vec![0.0; g.len()];
        for (&p, &x) in g.inside_nodes().iter().zip(&vals) {
            field[p] = x;
        }
        prop_assume!(field.iter().any(|&x| x > 0.0));
        let v = ScalarField::new(Arc::clone(&g), field).unwrap();
        let params = FunctionalParams::new(ProblemKind::Compliance, 2, alpha)
            .unwrap()
            .with_measure(MeasureKind::Exact);
        let a = evaluate_v(&v, &params).unwrap().value;
        let b = evaluate_v(&v.scaled(c), &params).unwrap().value;
        prop_assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn replacement_dominates_subsolutions(b in bits(), cx in 0.35f64..0.65, cy in 0.35f64..0.65, r in 0.1f64..0.3) {
        let g = square();
        let s = set_from(&g, &b);
        prop_assume!(!s.is_empty());
        let w = solve_torsion(&s, 1e-12).unwrap().w;
        let vh = solve_harmonic_replacement(&w, &s, &[cx, cy], r, 1e-12).unwrap();
        for p in 0..g.len() {
            prop_assert!(vh.get(p) >= w.get(p) - 1e-8, "node {}", p);
        }
    }

    #[test]
    fn layer_cake_identity_holds(vals in prop::collection::vec(0.0f64..1.0, 121)) {
        let g = square();
        let mut field = vec![0.0; g.len()];
        for (&p, &x) in g.inside_nodes().iter().zip(&vals) {
            field[p] = x;
        }
        let v = ScalarField::new(Arc::clone(&g), field).unwrap();
        let prof = layer_cake_profile(&v, 2001, &Tolerances::default()).unwrap();
        prop_assert!(prof.pass, "{}", prof.max_error);
        prop_assert!(prof.d_of_t.windows(2).all(|w| w[1] <= w[0]));
    }
}

fn tiny(bits: &[bool]) -> Arc<Grid> {
    let mut inside = vec![false; 36];
    for j in 0..4 {
        for i in 0..4 {
            inside[(i + 1) + 6 * (j + 1)] = bits[i + 4 * j];
        }
    }
    Arc::new(Grid::from_mask(2, &[6, 6], 0.2, &[0.0, 0.0], inside).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_is_flip_optimal_and_never_beats_the_oracle(
        b in prop::collection::vec(prop::bool::weighted(0.8), 16),
        alpha in 0.0f64..1.9,
    ) {
        prop_assume!(b.iter().any(|&x| x));
        let g = tiny(&b);
        let params = FunctionalParams::new(ProblemKind::Compliance, 2, alpha).unwrap();
        let run = local_search(&CellSet::full(&g), &params, &SearchOptions::default()).unwrap();
        let again = local_search(&run.omega_star, &params, &SearchOptions::default()).unwrap();
        prop_assert_eq!(again.flips, 0);
        let direct = evaluate_set(&run.omega_star, &params).unwrap().value;
        prop_assert_eq!(direct, run.value);
        let oracle = brute_force_oracle(&g, &params).unwrap();
        prop_assert!(oracle.value <= run.value * (1.0 + TIE_TOL));
    }
}
