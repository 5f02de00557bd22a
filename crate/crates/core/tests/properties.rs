mod common;

use houghfit::excess_mass::{excess_mass_convex, excess_mass_empirical, level_set, sym_diff_distance};
use houghfit::grid::LatticeField;
use houghfit::{fit_ht, fit_strip, objective_field, objective_value, Dataset, GridSpec, Theta};
use proptest::prelude::*;

fn dyadic(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo * 8..=hi * 8).prop_map(|k| k as f64 / 8.0)
}

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec((dyadic(-3, 3), dyadic(-4, 4)), 1..25)
        .prop_map(|pts| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            Dataset::from_xy(&xs, &ys).unwrap()
        })
}

fn small_grid() -> impl Strategy<Value = GridSpec> {
    (dyadic(-3, 0), dyadic(-3, 0), 2usize..30, 2usize..30)
        .prop_map(|(a, b, ra, rb)| GridSpec::planar((a, a + 3.0), (b, b + 4.0), (ra, rb)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_matches_pointwise_counts(data in dataset(), grid in small_grid(), r in 0.05f64..1.5) {
        let field = objective_field(&data, &grid, r).unwrap();
        let zs = common::planar_rows(&data.xs());
        let ys = data.ys();
        for (k, node) in common::nodes(&grid).iter().enumerate() {
            let want = common::count_cover(node, &zs, &ys, r, false);
            prop_assert_eq!(field.counts[k], want);
            let direct = objective_value(&data, &Theta::planar(node[0], node[1]), r).unwrap();
            prop_assert_eq!(direct, want as f64 / data.len() as f64);
        }
    }

    #[test]
    fn fits_match_brute_force(data in dataset(), grid in small_grid(), r in 0.05f64..1.5) {
        let zs = common::planar_rows(&data.xs());
        let ys = data.ys();
        for (strip, fit) in [(false, fit_ht(&data, &grid, r).unwrap()), (true, fit_strip(&data, &grid, r).unwrap())] {
            let (best, idx) = common::brute_argmax(&grid, &zs, &ys, r, strip);
            prop_assert_eq!(fit.max_count, Some(best));
            prop_assert_eq!(fit.solution_nodes.len(), idx.len());
            let mean = common::mean_of(&grid, &idx);
            prop_assert!((fit.theta_hat.a() - mean[0]).abs() < 1e-12);
            prop_assert!((fit.theta_hat.b() - mean[1]).abs() < 1e-12);
            prop_assert_eq!(fit.n_components, common::component_count(&grid, &idx));
        }
    }

    #[test]
    fn excess_mass_identities(data in dataset(), grid in small_grid(), r in 0.05f64..1.5, lambda in 0.05f64..0.95) {
        let field = objective_field(&data, &grid, r).unwrap();
        let values = field.values();
        let cell = grid.cell_volume();
        let want: f64 = values.iter().map(|v| (v - lambda).max(0.0) * cell).sum();
        let en = excess_mass_empirical(&field, lambda).unwrap();
        prop_assert!((en - want).abs() <= 1e-9 * want.max(1.0));
        let ec = excess_mass_convex(&field, lambda).unwrap();
        prop_assert!(ec.value <= en);
        prop_assert!(ec.value >= 0.0);

        let set = level_set(&field, lambda).unwrap();
        let members = values.iter().filter(|&&v| v >= lambda).count();
        prop_assert_eq!(set.count(), members);
        prop_assert_eq!(set.area(), members as f64 * cell);
        prop_assert_eq!(sym_diff_distance(&set, &set).unwrap(), 0.0);
        let higher = level_set(&field, (lambda + 0.3).min(0.99)).unwrap();
        prop_assert!(higher.member.iter().zip(&set.member).all(|(&h, &s)| !h || s));
        let d = sym_diff_distance(&set, &higher).unwrap();
        prop_assert_eq!(d, (set.count() - higher.count()) as f64 * cell);
    }
}
