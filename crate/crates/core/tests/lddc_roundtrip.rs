//! Ideal-controller identification on rational loops where the answer is
//! known: the reference model is built from a chosen controller, which the
//! reduction must then return.

use loewner_lab::data::FrequencyDataset;
use loewner_lab::descriptor::{DescriptorRealization, TransferMap};
use loewner_lab::lddc::{self, ReferenceModelSpec, SafetyVerdict};
use loewner_lab::plant::log_grid;
use loewner_lab::{Complex64, Error};
use nalgebra::{DMatrix, DVector, RowDVector};
use proptest::prelude::*;

/// `g / ((s + a)(s + b))`, realized in companion form.
fn second_order(a: f64, b: f64, g: f64) -> DescriptorRealization<f64> {
    DescriptorRealization::from_state_space(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -a * b, -(a + b)]),
        DVector::from_vec(vec![0.0, 1.0]),
        RowDVector::from_vec(vec![g, 0.0]),
        0.0,
    )
    .unwrap()
}

fn plant_eval(a: f64, b: f64, g: f64, s: Complex64) -> Complex64 {
    g / ((s + a) * (s + b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pi_controller_is_recovered(a in 0.2..3.0f64, b in 0.2..3.0f64, g in 0.5..4.0f64, kp in 0.05..2.0f64, ki in 0.01..1.0f64) {
        let plant = second_order(a, b, g);
        let m = ReferenceModelSpec::closed_loop(&plant, &DescriptorRealization::pi(kp, ki)).unwrap();
        let data = FrequencyDataset::from_transfer(&TransferMap::from_realization("P", plant), &log_grid(60, 0.01, 100.0).unwrap()).unwrap();
        let ach = lddc::check_achievability(&m).unwrap();
        prop_assert!(ach.achievable);
        let kstar = lddc::ideal_controller_response(&data, &m).unwrap();
        for smp in kstar.samples() {
            let want = kp + ki / smp.z;
            prop_assert!((smp.phi - want).norm() <= 1e-9 * want.norm());
        }
        let sweep = lddc::reduce_controller(&kstar, &[1, 2]).unwrap();
        let k1 = sweep.row(1).unwrap().realization.clone().unwrap().deflate(1e-10).unwrap();
        prop_assert_eq!(k1.order(), 1);
        let e = k1.e()[(0, 0)];
        let pole = k1.a()[(0, 0)] / e;
        let ki_hat = k1.c()[0] * k1.b()[0] / e;
        prop_assert!(pole.abs() <= 1e-8, "pole {}", pole);
        prop_assert!((k1.d() - kp).abs() <= 1e-7 * kp, "kp {} vs {}", k1.d(), kp);
        prop_assert!((ki_hat - ki).abs() <= 1e-7 * ki, "ki {} vs {}", ki_hat, ki);
        prop_assert!(sweep.row(1).unwrap().error.unwrap() <= 1e-8 * (kp + ki * 100.0));
    }

    #[test]
    fn small_gain_matches_direct_evaluation(a in 0.2..3.0f64, b in 0.2..3.0f64, g in 0.5..4.0f64, kp in 0.05..2.0f64, ki in 0.01..1.0f64) {
        let plant = second_order(a, b, g);
        let m = ReferenceModelSpec::closed_loop(&plant, &DescriptorRealization::pi(kp, ki)).unwrap();
        let grid = log_grid(50, 0.01, 100.0).unwrap();
        let data = FrequencyDataset::from_transfer(&TransferMap::from_realization("P", plant), &grid).unwrap();
        let bound = lddc::small_gain_bound(&data, &m).unwrap();
        // 1 - M = 1/(1 + P K), so gamma = max |P/(1 + P K)|.
        let want = grid
            .iter()
            .map(|&w| {
                let s = Complex64::new(0.0, w);
                let p = plant_eval(a, b, g, s);
                (p / (1.0 + p * (kp + ki / s))).norm()
            })
            .fold(0.0, f64::max);
        prop_assert!((bound.gamma - want).abs() <= 1e-10 * want);
        prop_assert!(!bound.vacuous);
    }
}

#[test]
fn sweep_marks_orders_below_threshold_safe() {
    let plant = second_order(1.0, 2.0, 2.0);
    let m = ReferenceModelSpec::closed_loop(&plant, &DescriptorRealization::pi(0.5, 0.2)).unwrap();
    let data = FrequencyDataset::from_transfer(&TransferMap::from_realization("P", plant), &log_grid(40, 0.01, 100.0).unwrap()).unwrap();
    let kstar = lddc::ideal_controller_response(&data, &m).unwrap();
    let mut sweep = lddc::reduce_controller(&kstar, &[1, 2, 3]).unwrap();
    let bound = lddc::small_gain_bound(&data, &m).unwrap();
    sweep.apply_bound(bound);
    for row in &sweep.rows {
        let safe = row.error.unwrap() < bound.threshold();
        assert_eq!(row.verdict == SafetyVerdict::Safe, safe);
    }
    assert_eq!(sweep.smallest_safe_order(), Some(1));
}

#[test]
fn reference_equal_to_one_is_rejected() {
    let data = FrequencyDataset::from_transfer(&TransferMap::from_realization("P", second_order(1.0, 2.0, 1.0)), &[0.1, 1.0]).unwrap();
    let m = ReferenceModelSpec::new(TransferMap::constant(1.0));
    assert!(matches!(lddc::ideal_controller_response(&data, &m), Err(Error::DivisionByZero { .. })));
    let rep = lddc::check_achievability(&m).unwrap();
    assert!(!rep.achievable);
}
