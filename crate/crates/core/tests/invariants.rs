use proptest::collection::vec;
use proptest::prelude::*;

use unfold_homog::cell::{solve_cell, CellProblem, SolverConfig};
use unfold_homog::field::{Boundary, BoxDomain, Grid, GridField, Location};
use unfold_homog::integrand::{convex_envelope_1d, IntegrandSpec};
use unfold_homog::seed::derive_seed;
use unfold_homog::unfold::{decompose, modular_identity_report, unfold};
use unfold_homog::young::{luxemburg_norm, YoungFunction};

fn cells(grid: &Grid, values: Vec<f64>) -> GridField {
    GridField::from_values(grid.clone(), 1, Boundary::Free, Location::Cell, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unfolding_is_linear(
        u in vec(-5.0f64..5.0, 64),
        v in vec(-5.0f64..5.0, 64),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        k in 0usize..3,
    ) {
        let grid = Grid::uniform(BoxDomain::unit(2), 8).unwrap();
        let (fu, fv) = (cells(&grid, u), cells(&grid, v));
        let dec = decompose(&grid, [0.5, 0.25, 0.125][k]).unwrap();
        let y = dec.natural_y_res().unwrap();
        let lhs = unfold(&fu.combine(a, &fv, b).unwrap(), &dec, y).unwrap();
        let (tu, tv) = (unfold(&fu, &dec, y).unwrap(), unfold(&fv, &dec, y).unwrap());
        for ((l, x), z) in lhs.values().iter().zip(tu.values()).zip(tv.values()) {
            prop_assert!((l - (a * x + b * z)).abs() <= 1e-12 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn modular_identity_on_random_fields(u in vec(-4.0f64..4.0, 32), p in 1.2f64..4.0) {
        let grid = Grid::uniform(BoxDomain::unit(1), 32).unwrap();
        let w = cells(&grid, u);
        let b = YoungFunction::power(p).unwrap();
        for eps in [0.5, 0.25, 0.125, 0.0625] {
            let dec = decompose(&grid, eps).unwrap();
            let r = modular_identity_report(&b, &w, &dec, 1e-10).unwrap();
            prop_assert!(r.relative_defect <= 1e-12);
            prop_assert!(r.contraction_holds);
        }
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(u in vec(-4.0f64..4.0, 16), c in 0.1f64..10.0) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3));
        let grid = Grid::uniform(BoxDomain::unit(1), 16).unwrap();
        let b = YoungFunction::power_log(1.0).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let n1 = luxemburg_norm(&b, &cells(&grid, u), 1e-12).unwrap();
        let n2 = luxemburg_norm(&b, &cells(&grid, scaled), 1e-12).unwrap();
        prop_assert!((n2 - c * n1).abs() <= 1e-8 * n2.max(1.0));
    }

    #[test]
    fn envelope_is_convex_and_below(c3 in -2.0f64..2.0, c2 in -3.0f64..3.0, c1 in -1.0f64..1.0) {
        let w = move |x: f64| x.powi(4) + c3 * x.powi(3) + c2 * x * x + c1 * x;
        let env = convex_envelope_1d(w, -3.0, 3.0, 301).unwrap();
        for d in env.second_differences() {
            prop_assert!(d >= -1e-9);
        }
        for (x, h) in env.sample_points().iter().zip(env.hull_values()) {
            prop_assert!(h <= w(*x) + 1e-12);
        }
    }

    #[test]
    fn seeds_separate_tags(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        prop_assert_eq!(derive_seed(seed, &[a]), derive_seed(seed, &[a]));
        prop_assert_ne!(derive_seed(seed, &[a]), derive_seed(seed, &[b]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // harmonic mean <= f_1(xi) / xi^2 <= arithmetic mean
    #[test]
    fn layered_cell_value_is_bracketed(values in vec(0.5f64..6.0, 2..5), xi in 0.2f64..2.0) {
        let spec = IntegrandSpec::layered_quadratic(values.clone()).unwrap();
        let solver = SolverConfig { restarts: 2, ..SolverConfig::default() };
        let sol = solve_cell(&CellProblem::new(spec, vec![xi], 1, 48).with_solver(solver)).unwrap();
        let k = values.len() as f64;
        let harmonic = k / values.iter().map(|v| 1.0 / v).sum::<f64>();
        let mean = values.iter().sum::<f64>() / k;
        let scaled = sol.f_t / (xi * xi);
        prop_assert!(scaled >= harmonic * (1.0 - 1e-9), "{scaled} < {harmonic}");
        prop_assert!(scaled <= mean * (1.0 + 1e-9), "{scaled} > {mean}");
        prop_assert!(sol.f_t <= sol.zero_energy + 1e-12);
    }
}
