use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};

use eprb_core::quantum::{
    bell_state, dephase, expectation, joint_probabilities, max_abs_diff, measure_collapse,
    partial_dephase, polarizer_observable, rotated_bell_state, Angle, DensityOperator, Observable,
    Subsystem,
};
use eprb_core::rng;
use proptest::prelude::*;
use rand::Rng;

fn bell() -> DensityOperator {
    bell_state().density()
}

fn corr(theta_a: f64, theta_b: f64) -> f64 {
    let obs = Observable::tensor(
        &polarizer_observable(Angle::new(theta_a)),
        &polarizer_observable(Angle::new(theta_b)),
    )
    .unwrap();
    expectation(&bell(), &obs).unwrap()
}

/// ⟨ψ|A⊗B|ψ⟩ for ψ = (h, 0, 0, h), summed element by element from the 2×2
/// analyzer entries [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]].
fn corr_by_hand(theta_a: f64, theta_b: f64) -> f64 {
    let m = |t: f64| {
        let (s, c) = (2.0 * t).sin_cos();
        [[c, s], [s, -c]]
    };
    let (a, b) = (m(theta_a), m(theta_b));
    // only the |++⟩ and |−−⟩ amplitudes are nonzero, each 1/√2
    let mut e = 0.0;
    for i in [0, 1] {
        for k in [0, 1] {
            e += 0.5 * a[i][k] * b[i][k];
        }
    }
    e
}

#[test]
fn dephasing_is_idempotent_and_trace_preserving() {
    let mut r = rng::stream(11, 0);
    for dim in [2, 4] {
        for _ in 0..100 {
            let rho = DensityOperator::random(&mut r, dim);
            let obs = Observable::random(&mut r, dim);
            let once = dephase(&rho, &obs).unwrap();
            let twice = dephase(&once, &obs).unwrap();
            assert!(once.max_abs_diff(&twice) <= 1e-12);
            assert!((once.trace().re - 1.0).abs() <= 1e-12);
            assert!(once.trace().im.abs() <= 1e-12);
            assert!(once.hermiticity_defect() <= 1e-12);
        }
    }
}

#[test]
fn partial_channels_preserve_trace_and_hermiticity() {
    let mut r = rng::stream(12, 0);
    for _ in 0..100 {
        let rho = DensityOperator::random(&mut r, 4);
        let obs = Observable::random(&mut r, 2);
        let theta = r.random_range(0.0..PI);
        for out in [
            partial_dephase(&rho, &obs, Subsystem::First).unwrap(),
            partial_dephase(&rho, &obs, Subsystem::Second).unwrap(),
            measure_collapse(&rho, Angle::new(theta)).unwrap(),
        ] {
            assert!((out.trace().re - 1.0).abs() <= 1e-12);
            assert!(out.hermiticity_defect() <= 1e-12);
        }
    }
}

#[test]
fn rotated_bell_state_is_invariant() {
    let reference = rotated_bell_state(Angle::new(0.0));
    assert!(reference.max_abs_diff(&bell()) <= 1e-12);
    let mut r = rng::stream(13, 0);
    for _ in 0..100 {
        let theta = r.random_range(-10.0..10.0);
        assert!(rotated_bell_state(Angle::new(theta)).max_abs_diff(&reference) <= 1e-12);
    }
    let half_turn = rotated_bell_state(Angle::new(PI / 2.0));
    assert!(half_turn.max_abs_diff(&reference) <= 1e-12);
}

#[test]
fn collapse_of_bell_at_zero_is_diagonal_half() {
    let c = measure_collapse(&bell(), Angle::new(0.0)).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j && (i == 0 || i == 3) {
                0.5
            } else {
                0.0
            };
            assert!((c.matrix()[(i, j)].re - want).abs() <= 1e-12);
            assert!(c.matrix()[(i, j)].im.abs() <= 1e-12);
        }
    }
}

#[test]
fn collapse_on_one_side_reveals_full_distribution_for_bell() {
    let mut r = rng::stream(14, 0);
    for _ in 0..20 {
        let theta = Angle::new(r.random_range(0.0..PI));
        let obs = polarizer_observable(theta);
        let one_sided = measure_collapse(&bell(), theta).unwrap();
        let first = partial_dephase(&bell(), &obs, Subsystem::First).unwrap();
        let both = partial_dephase(&first, &obs, Subsystem::Second).unwrap();
        assert!(one_sided.max_abs_diff(&both) <= 1e-12);
        let ev = one_sided.eigenvalues();
        for (got, want) in ev.iter().zip([0.0, 0.0, 0.5, 0.5]) {
            assert!((got - want).abs() <= 1e-10, "{ev:?}");
        }
    }
}

#[test]
fn effective_distributions_of_non_commuting_analyzers_differ() {
    let mut r = rng::stream(15, 0);
    let mut checked = 0;
    while checked < 100 {
        let t1 = r.random_range(0.0..PI);
        let t2 = r.random_range(0.0..PI);
        if (2.0 * (t1 - t2)).sin().abs() < 0.1 {
            continue;
        }
        let rho = DensityOperator::random(&mut r, 2);
        let d1 = dephase(&rho, &polarizer_observable(Angle::new(t1))).unwrap();
        let d2 = dephase(&rho, &polarizer_observable(Angle::new(t2))).unwrap();
        assert!(d1.max_abs_diff(&d2) > 1e-6);
        checked += 1;
    }
}

#[test]
fn bell_correlation_follows_cosine_law_on_grid() {
    for i in 0..32 {
        for j in 0..32 {
            let (ta, tb) = (i as f64 * PI / 32.0, j as f64 * PI / 32.0);
            let e = corr(ta, tb);
            assert!((e - corr_by_hand(ta, tb)).abs() <= 1e-10);
            assert!((e - (2.0 * (ta - tb)).cos()).abs() <= 1e-10);
        }
    }
}

#[test]
fn tsirelson_value() {
    let (a, ap, b, bp) = (0.0, FRAC_PI_4, FRAC_PI_8, 3.0 * FRAC_PI_8);
    let s = corr(a, b) - corr(a, bp) + corr(ap, b) + corr(ap, bp);
    assert!((s - 2.0 * SQRT_2).abs() <= 1e-10);
}

proptest! {
    #[test]
    fn joint_probabilities_are_a_distribution(seed in any::<u64>(), ta in -4.0f64..4.0, tb in -4.0f64..4.0) {
        let mut r = rng::stream(seed, 0);
        let rho = DensityOperator::random(&mut r, 4);
        let p = joint_probabilities(&rho, Angle::new(ta), Angle::new(tb)).unwrap();
        prop_assert!(p.as_array().iter().all(|v| *v >= 0.0));
        prop_assert!((p.as_array().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        let obs = Observable::tensor(
            &polarizer_observable(Angle::new(ta)),
            &polarizer_observable(Angle::new(tb)),
        ).unwrap();
        let e = expectation(&rho, &obs).unwrap();
        prop_assert!((p.correlation() - e).abs() <= 1e-10);
        prop_assert!(e.abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn angles_are_half_turn_periodic(theta in -20.0f64..20.0, k in -5i32..5) {
        let a = polarizer_observable(Angle::new(theta));
        let b = polarizer_observable(Angle::new(theta + f64::from(k) * PI));
        prop_assert!(max_abs_diff(a.matrix(), b.matrix()) <= 1e-10);
        let canon = Angle::new(theta).radians();
        prop_assert!((0.0..PI).contains(&canon));
    }
}
