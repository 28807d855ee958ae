use std::sync::OnceLock;

use lsv_core::inducing::{
    branch_inverse, induced_apply, return_time, return_time_direct, MarkerTable,
};
use lsv_core::sweep::{fd_derivative, uniform_grid, Column, SweepTable};
use lsv_core::transfer::{pullback_sequence, Histogram};
use lsv_core::{MapParams, Observable};
use proptest::prelude::*;

fn markers(alpha_idx: usize) -> &'static MarkerTable {
    static TABLES: OnceLock<Vec<MarkerTable>> = OnceLock::new();
    &TABLES.get_or_init(|| {
        ALPHAS
            .iter()
            .map(|&a| MarkerTable::new(&MapParams::new(a).unwrap(), 100_000).unwrap())
            .collect()
    })[alpha_idx]
}

const ALPHAS: [f64; 5] = [0.0, 0.1, 0.25, 0.4, 0.49];

proptest! {
    #[test]
    fn left_inverse_round_trip(alpha in 0.0..0.5f64, y in 0.0..=1.0f64) {
        let p = MapParams::new(alpha).unwrap();
        let x = p.left_inverse(y).unwrap();
        prop_assert!((0.0..=0.5).contains(&x));
        prop_assert!((p.apply(x).unwrap() - y).abs() <= 1e-13 * y.max(1e-300) + 1e-300);
    }

    #[test]
    fn left_inverse_is_increasing(alpha in 0.0..0.5f64, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let p = MapParams::new(alpha).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.left_inverse(lo).unwrap() <= p.left_inverse(hi).unwrap());
    }

    #[test]
    fn return_time_lookup_matches_iteration(i in 0usize..5, x in 0.500_001..=1.0f64) {
        let p = MapParams::new(ALPHAS[i]).unwrap();
        let m = markers(i);
        let n = return_time(&p, x, m).unwrap();
        let direct = return_time_direct(&p, x, 1_000_000).unwrap();
        // Orbits sitting on a marker to rounding may disagree by one step.
        prop_assert!(n.abs_diff(direct) <= 1, "table {n}, iteration {direct}");
    }

    #[test]
    fn branch_inverse_undoes_induced_map(i in 1usize..5, x in 0.5001..0.9999f64) {
        let p = MapParams::new(ALPHAS[i]).unwrap();
        let m = markers(i);
        let n = return_time(&p, x, m).unwrap();
        let z = induced_apply(&p, x, m).unwrap();
        prop_assert!(z > 0.5 && z <= 1.0);
        let back = branch_inverse(&p, n, z).unwrap();
        prop_assert!((back - x).abs() < 1e-9, "x = {x}, n = {n}, back = {back}");
    }

    #[test]
    fn pullback_derivatives_shrink(alpha in 0.01..0.49f64, z0 in 0.5001..=1.0f64) {
        let p = MapParams::new(alpha).unwrap();
        let seq = pullback_sequence(&p, z0, 200).unwrap();
        for w in seq.windows(2) {
            prop_assert!(w[1].dz > 0.0 && w[1].dz <= w[0].dz);
            prop_assert!(w[1].z < w[0].z && w[1].z <= 0.5);
        }
    }

    #[test]
    fn histogram_bins_contain_their_points(bins in 10usize..300, x in 0.0..=1.0f64) {
        let e = Histogram::graded_edges(bins);
        let b = Histogram::bin_of(&e, x);
        prop_assert!(e[b] <= x);
        prop_assert!(x < e[b + 1] || (b == bins - 1 && x <= 1.0));
    }

    #[test]
    fn polynomial_selector_round_trip(c in prop::collection::vec(-10.0..10.0f64, 1..5), x in 0.0..=1.0f64) {
        let text = format!("poly:{}", c.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        let obs: Observable = text.parse().unwrap();
        let expected: f64 = c.iter().rev().fold(0.0, |acc, a| acc * x + a);
        prop_assert!((obs.value(x) - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        let again: Observable = obs.label().parse().unwrap();
        prop_assert_eq!(again.value(x), obs.value(x));
    }

    #[test]
    fn central_differences_exact_on_affine_data(
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
        n in 5usize..25,
    ) {
        let alphas = uniform_grid(0.05, 0.45, n);
        let col: Vec<f64> = alphas.iter().map(|x| a * x + b).collect();
        let t = SweepTable::from_columns(&alphas, &col, &col, &col);
        for d in fd_derivative(&t, Column::Kac).unwrap() {
            prop_assert!((d.slope - a).abs() <= 1e-9 * (1.0 + a.abs()));
            if let Some(g) = d.two_scale_gap {
                prop_assert!(g < 1e-6 || a.abs() < 1e-9);
            }
        }
    }
}
