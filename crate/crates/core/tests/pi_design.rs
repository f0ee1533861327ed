//! Weighted PI synthesis against a directly evaluated objective.

use loewner_lab::descriptor::{DescriptorRealization, TransferMap};
use loewner_lab::pi::{self, PIController, PiOptions, WeightingFilters};
use loewner_lab::plant::log_grid;
use loewner_lab::Complex64;
use nalgebra::{DMatrix, DVector, RowDVector};
use proptest::prelude::*;

/// `1 / (s + 1)^2`.
fn lag2() -> DescriptorRealization<f64> {
    DescriptorRealization::from_state_space(
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0]),
        DVector::from_vec(vec![1.0, 0.0]),
        RowDVector::from_vec(vec![0.0, 1.0]),
        0.0,
    )
    .unwrap()
}

fn objective(kp: f64, ki: f64, w: f64) -> f64 {
    let s = Complex64::new(0.0, w);
    let h = 1.0 / ((s + 1.0) * (s + 1.0));
    let k = kp + ki / s;
    let sens = 1.0 / (1.0 + h * k);
    let we = 10.0 * (s + 1.0) / s;
    let wu = (s + 10.0) / (s + 1000.0);
    (we * sens).norm().hypot((wu * k * sens).norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn performance_matches_direct_formula(kp in 0.01..5.0f64, ki in 0.01..5.0f64) {
        let grid = log_grid(120, 1e-3, 1e3).unwrap();
        let got = pi::eval_weighted_performance(&TransferMap::from_realization("G", lag2()), &PIController::new(kp, ki), &WeightingFilters::default(), &grid).unwrap();
        let want = grid.iter().map(|&w| objective(kp, ki, w)).fold(0.0, f64::max);
        prop_assert!((got.gamma - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn sensitivities_sum_to_one(kp in 0.01..5.0f64, ki in 0.01..5.0f64) {
        let pts = pi::sensitivity_sweep(&TransferMap::from_realization("G", lag2()), &PIController::new(kp, ki), &log_grid(30, 1e-2, 1e2).unwrap()).unwrap();
        for p in pts {
            prop_assert!((p.s + p.t - 1.0).norm() <= 1e-14);
        }
    }
}

#[test]
fn optimum_improves_on_start_and_is_stable() {
    let g = TransferMap::from_realization("G", lag2());
    let grid = log_grid(120, 1e-3, 1e3).unwrap();
    let start = PIController::new(0.5, 0.5);
    let d = pi::optimize_pi(&g, &WeightingFilters::default(), &grid, start, &PiOptions::default()).unwrap();
    assert!(d.performance.gamma <= d.start_gamma);
    assert_eq!(d.stable, Some(true));
    // Local optimality on a coarse stencil in log space.
    let (kp, ki) = (d.controller.kp, d.controller.ki);
    let at = |a: f64, b: f64| grid.iter().map(|&w| objective(a, b, w)).fold(0.0, f64::max);
    let best = at(kp, ki);
    for (da, db) in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)] {
        assert!(at(kp * da, ki * db) >= best * (1.0 - 1e-6), "better at ({}, {})", kp * da, ki * db);
    }
}
