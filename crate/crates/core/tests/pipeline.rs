use lsv_core::green_kubo::{
    center_observable, correlation_mc_with, correlation_operator, density_for, drift_coefficient,
    nu_y_orbit, sigma_sq, SigmaSettings,
};
use lsv_core::sweep::{fd_derivative, sweep_sigma, uniform_grid, Column};
use lsv_core::transfer::{invariant_density_induced, MeshSpec};
use lsv_core::{MapParams, Observable};

fn p(a: f64) -> MapParams {
    MapParams::new(a).unwrap()
}

fn quick() -> SigmaSettings {
    SigmaSettings {
        discretization_check: false,
        ..SigmaSettings::default()
    }
}

#[test]
fn operator_and_mc_correlations_agree() {
    for alpha in [0.1, 0.2, 0.3] {
        let q = p(alpha);
        let d = invariant_density_induced(&q, &MeshSpec::default(), 1e-13, 2000).unwrap();
        let psi = center_observable(&q, Observable::identity(), &d).unwrap();
        let op = correlation_operator(&q, &psi, 20, 1e-300, &d).unwrap();
        let mc = correlation_mc_with(&q, &psi, 20, 1_000_000, 1000, 7, Some(psi.center())).unwrap();
        for (a, b) in op.terms.iter().zip(&mc.series.terms).take(21) {
            let se = b.stderr.unwrap();
            assert!(
                (a.value - b.value).abs() <= 3.0 * (se + 1e-6),
                "alpha {alpha}, k {}: operator {} vs MC {} ± {se}",
                a.k,
                a.value,
                b.value
            );
        }
    }
}

#[test]
fn doubling_k_max_and_branches_is_stable() {
    for alpha in [0.1, 0.25, 0.4] {
        let q = p(alpha);
        let base = sigma_sq(&q, &Observable::identity(), &SigmaSettings::default()).unwrap();
        let mut fine = quick();
        fine.k_max *= 2;
        fine.mesh.n_branch *= 2;
        let refined = sigma_sq(&q, &Observable::identity(), &fine).unwrap();
        let d = density_for(&q, &quick()).unwrap();
        let allowed = base.series.remainder_bound() + d.tail_deficit;
        let change = (refined.sigma_tilde_sq - base.sigma_tilde_sq).abs();
        assert!(
            change <= allowed + base.sigma_sq_error * base.kac,
            "alpha {alpha}: {change} vs {allowed}"
        );
        // The σ² bracket must cover the move.
        let moved = (refined.sigma_sq - base.sigma_sq).abs();
        assert!(
            moved < base.sigma_sq_error,
            "alpha {alpha}: moved {moved}, bracket {}",
            base.sigma_sq_error
        );
    }
}

#[test]
fn kac_matches_orbit_fraction() {
    for alpha in [0.1, 0.3] {
        let q = p(alpha);
        let d = invariant_density_induced(&q, &MeshSpec::default(), 1e-13, 2000).unwrap();
        assert!((d.kac * d.nu_y - 1.0).abs() < 1e-15);
        let (nu, se) = nu_y_orbit(&q, 10_000_000, 1000, 3).unwrap();
        assert!(
            (d.kac * nu - 1.0).abs() < 1e-3,
            "alpha {alpha}: {} ± {se}",
            d.kac * nu
        );
    }
}

#[test]
fn fd_derivative_is_stable_under_step_halving() {
    let fine = uniform_grid(0.1, 0.3, 21);
    let table = sweep_sigma(
        &fine,
        &Observable::identity(),
        &Observable::cos_two_pi(),
        &quick(),
    )
    .unwrap();
    let d_fine = fd_derivative(&table, Column::SigmaSq).unwrap();
    let mut coarse = table.clone();
    coarse.rows = table.rows.iter().step_by(2).cloned().collect();
    let d_coarse = fd_derivative(&coarse, Column::SigmaSq).unwrap();
    for c in &d_coarse {
        let f = d_fine
            .iter()
            .find(|f| (f.alpha - c.alpha).abs() < 1e-12)
            .unwrap();
        let rel = (f.slope - c.slope).abs() / f.slope.abs();
        assert!(rel <= 0.05, "alpha {}: {} vs {}", c.alpha, f.slope, c.slope);
    }
    let drift = fd_derivative(&table, Column::Drift).unwrap();
    assert!(drift.iter().all(|d| d.slope.is_finite()));
}

#[test]
fn drift_slope_is_stable_under_step_halving() {
    let s = quick();
    let drift = |a: f64| {
        let q = p(a);
        drift_coefficient(&q, &Observable::cos_two_pi(), &density_for(&q, &s).unwrap()).unwrap()
    };
    let d0 = drift(0.1);
    let slope_h = (drift(0.11) - d0) / 0.01;
    let slope_half = (drift(0.105) - d0) / 0.005;
    let rel = (slope_h - slope_half).abs() / slope_half.abs();
    assert!(rel <= 0.05, "{slope_h} vs {slope_half}");
}

#[test]
fn constant_observable_sweeps_to_zero() {
    let grid = uniform_grid(0.1, 0.4, 4);
    let c = Observable::constant(3.0);
    let t = sweep_sigma(&grid, &c, &c, &quick()).unwrap();
    assert!(t
        .rows
        .iter()
        .all(|r| r.valid && r.sigma_sq == 0.0 && r.drift == 3.0));
}
