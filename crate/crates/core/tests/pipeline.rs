use gsmp_core::exec::Sequential;
use gsmp_core::fixpoint::{Estimator, FixpointParams};
use gsmp_core::j2::{j2_traces, PropMetric};
use gsmp_core::logic::{FExpr, GExpr, Logic};
use gsmp_core::observables::{expected_observable, Observable, ObservableParams};
use gsmp_core::{advance, sample_trace, validate_model, GeneralizedState, GsmpModel, ResetDistribution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Queue with a breakdown state; all resets exponential.
fn queue() -> GsmpModel {
    let exp = |rate| ResetDistribution::Exponential { rate };
    GsmpModel::builder()
        .state("idle", &[], &[("arrive", 2.0)])
        .state("busy", &["busy"], &[("serve", 3.0), ("fail", 0.5)])
        .state("down", &["down"], &[("repair", 1.0)])
        .next("idle", "arrive", &[("busy", 1.0)])
        .next("busy", "serve", &[("idle", 1.0)])
        .next("busy", "fail", &[("down", 1.0)])
        .next("down", "repair", &[("idle", 1.0)])
        .reset("idle", "arrive", "busy", "serve", exp(1.0))
        .reset("idle", "arrive", "busy", "fail", exp(1.0))
        .reset("busy", "serve", "idle", "arrive", exp(1.0))
        .reset("busy", "fail", "down", "repair", exp(1.0))
        .reset("down", "repair", "idle", "arrive", exp(1.0))
        .build()
        .unwrap()
}

fn params() -> FixpointParams {
    FixpointParams {
        depth: 2,
        samples: 12,
        inner_samples: 4,
        grid: 0.05,
        horizon: 2.0,
        bootstrap: 10,
        ..Default::default()
    }
}

#[test]
fn fixture_model_is_valid() {
    assert!(validate_model(&queue()).is_valid());
}

#[test]
fn same_seed_same_trace() {
    let m = queue();
    let gs = GeneralizedState::from_named(&m, "idle", &[("arrive", 0.4)]).unwrap();
    let draw = || sample_trace(&m, &gs, 5.0, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let (f, g) = (draw(), draw());
    assert_eq!(f, g);
    assert_eq!(j2_traces(&m, &f, &g, &PropMetric(&m), 0.01).unwrap().value, 0.0);
}

#[test]
fn hitting_busy_from_idle_is_first_arrival() {
    let m = queue();
    let gs = GeneralizedState::from_named(&m, "idle", &[("arrive", 1.0)]).unwrap();
    let p = ObservableParams {
        samples: 20,
        horizon: 3.0,
        bootstrap: 10,
        ..Default::default()
    };
    let e = expected_observable(&m, &gs, &Observable::HittingTime("busy".into()), &p, &Sequential).unwrap();
    assert_eq!(e.mean, Some(0.5));
    assert_eq!(e.miss_fraction, 0.0);
}

#[test]
fn integral_of_busy_separates_time_shift() {
    let m = queue();
    let x = GeneralizedState::from_named(&m, "idle", &[("arrive", 1.0)]).unwrap();
    let y = advance(&x, 0.3, &m).unwrap();
    let l = Logic::new(&m, params(), &Sequential).unwrap();
    // Arrival at 0.5 versus 0.2: 𝓛 at t = 0 sees 1 − 0.5 and 1 − 0.2.
    let f = FExpr::integral(GExpr::l(FExpr::prop("busy"), 0.0));
    let (fx, fy) = (l.eval_f(&f, &x).unwrap(), l.eval_f(&f, &y).unwrap());
    assert!((fy - fx - 0.5 * 0.3).abs() < 1e-9, "{fx} {fy}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_is_a_bounded_symmetric_premetric(
        c1 in 0.05f64..2.0, c2 in 0.05f64..2.0, s1 in 0.05f64..2.0, s2 in 0.05f64..2.0,
    ) {
        let m = queue();
        let x = GeneralizedState::from_named(&m, "busy", &[("serve", c1), ("fail", s1)]);
        let y = GeneralizedState::from_named(&m, "busy", &[("serve", c2), ("fail", s2)]);
        prop_assume!(x.is_ok() && y.is_ok());
        let (x, y) = (x.unwrap(), y.unwrap());
        let est = Estimator::new(&m, params(), &Sequential).unwrap();
        let xy = est.value_at_depth(&x, &y, 2).unwrap();
        prop_assert!((0.0..=1.0).contains(&xy));
        prop_assert_eq!(xy, est.value_at_depth(&y, &x, 2).unwrap());
        prop_assert_eq!(est.value_at_depth(&x, &x, 2).unwrap(), 0.0);
        let levels: Vec<f64> = (0..=2).map(|n| est.value_at_depth(&x, &y, n).unwrap()).collect();
        prop_assert!(levels.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{:?}", levels);
    }
}
