use lwf_core::dual_process::{
    capped_deviation_constant, capped_sup_deviation, detect_renewal, detect_renewal_general, simulate_y, RenewalWindow,
};
use lwf_core::estimators::{
    decay_rate_experiment, estimate_fixation_renewal, estimate_stationary_y, DecayMode, StationaryMethod,
};
use lwf_core::flow::DriftFlow;
use lwf_core::forward_process::{observe_x, simulate_x};
use lwf_core::levy_bounds::{mean_increment, passage_tail, LevySpec};
use lwf_core::measure_spec::{MeasureSpec, ModelParams, SelectionFn, Support};
use lwf_core::random_background::{build_background, BackgroundConfig, FilterSide, RandomBackground};
use lwf_core::stats::{ks_uniform, replicate, z_score, EstimateWithCI};
use lwf_core::trajectory::{SampleKind, SimOptions};
use lwf_core::Error;

fn model_one() -> ModelParams {
    ModelParams::new(
        MeasureSpec::atomic(Support::Unit, &[(0.5, 1.0)]).unwrap(),
        MeasureSpec::atomic(Support::Symmetric, &[(0.3, 0.2), (-0.3, 0.2)]).unwrap(),
        SelectionFn::new(vec![1.0, -2.0]).unwrap(),
    )
    .unwrap()
}

fn neutral(loc: f64, w: f64) -> ModelParams {
    ModelParams::new(MeasureSpec::atomic(Support::Unit, &[(loc, w)]).unwrap(), MeasureSpec::zero(Support::Symmetric), SelectionFn::zero())
        .unwrap()
}

fn balancing() -> ModelParams {
    ModelParams::new(
        MeasureSpec::atomic(Support::Unit, &[(0.5, 0.25)]).unwrap(),
        MeasureSpec::zero(Support::Symmetric),
        SelectionFn::new(vec![1.0, -2.0]).unwrap(),
    )
    .unwrap()
}

fn bg(p: &ModelParams, seed: u64) -> RandomBackground {
    build_background(p, BackgroundConfig { seed, ..Default::default() }).unwrap()
}

#[test]
fn neutral_forward_process_is_a_martingale() {
    let p = neutral(0.5, 1.0);
    let b = bg(&p, 11);
    let flow = DriftFlow::forward(p.sigma(), None).unwrap();
    let ends = replicate(20_000, |k| Ok(observe_x(&flow, &b.replica(1, k), 0.3, &[2.0])?[0])).unwrap();
    let e = EstimateWithCI::from_samples(&ends, "mean");
    assert!((e.point - 0.3).abs() <= 4.0 * e.std_error, "{e:?}");
}

#[test]
fn neutral_fixation_equals_initial_frequency() {
    // bounded martingale: h(x) = x, hence also h(x) + h(1 - x) = 1
    let p = neutral(0.5, 1.0);
    let xs = [0.25, 0.5, 0.75];
    let c = estimate_fixation_renewal(&p, &bg(&p, 12), &xs, 0.2, 0.2, 20_000, None).unwrap();
    for (k, &x) in xs.iter().enumerate() {
        assert!((c.h[k].point - x).abs() <= 3.0 * c.h[k].std_error, "h({x}) = {:?}", c.h[k]);
    }
    let se = (c.h[0].std_error.powi(2) + c.h[2].std_error.powi(2)).sqrt();
    assert!((c.h[0].point + c.h[2].point - 1.0).abs() <= 3.0 * se);
}

#[test]
fn fixation_curve_is_monotone_in_unit_interval() {
    let p = model_one();
    let xs: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
    let c = estimate_fixation_renewal(&p, &bg(&p, 13), &xs, 0.2, 0.2, 5_000, None).unwrap();
    assert!(c.h.windows(2).all(|w| w[0].point <= w[1].point));
    assert!(c.h.iter().all(|e| (0.0..=1.0).contains(&e.point)));
}

#[test]
fn renewal_estimator_needs_theta2() {
    let p = balancing();
    let e = estimate_fixation_renewal(&p, &bg(&p, 1), &[0.5], 0.2, 0.2, 10, None).unwrap_err();
    assert!(matches!(e, Error::WrongRegime { .. }), "{e}");
}

#[test]
fn centered_renewal_at_half_matches_symmetric() {
    let p = model_one();
    let b = bg(&p, 14);
    for k in 0..200 {
        let r = b.replica(2, k);
        let sym = detect_renewal(&p, &r, 0.3, 0.2, 0.2, None).unwrap();
        let gen = detect_renewal_general(&p, &r, 0.3, 0.5, 0.2, 0.2, None).unwrap();
        assert_eq!(sym, gen);
    }
}

#[test]
fn off_centre_renewal_states_are_uniform() {
    let p = model_one();
    let b = bg(&p, 15);
    for a in [0.3, 0.7] {
        let w = RenewalWindow::centered(&p, a, 0.1, 0.1).unwrap();
        let (lo, hi) = w.uniform_window();
        assert!(((lo + hi) / 2.0 - a).abs() < 1e-12);
        let states = replicate(4_000, |k| Ok(detect_renewal_general(&p, &b.replica(3, k), 0.5, a, 0.1, 0.1, None)?.state)).unwrap();
        let ks = ks_uniform(&states, lo, hi);
        assert!(ks.p_value > 0.001, "a = {a}: {ks:?}");
    }
}

#[test]
fn capped_deviation_respects_bound() {
    let p = ModelParams::new(
        MeasureSpec::atomic(Support::Unit, &[(0.2, 0.05), (0.8, 0.05)]).unwrap(),
        MeasureSpec::atomic(Support::Symmetric, &[(0.5, 0.5)]).unwrap(),
        SelectionFn::new(vec![0.5, -1.0]).unwrap(),
    )
    .unwrap();
    let k_star = capped_deviation_constant(&p).unwrap();
    let b = bg(&p, 16).filtered(0.3, FilterSide::AtMost);
    let flow = DriftFlow::dual(p.sigma(), None).unwrap();
    for t in [0.05, 0.2, 1.0] {
        let devs = replicate(5_000, |k| capped_sup_deviation(&flow, &b.replica(4, k), 0.5, t)).unwrap();
        for l in [0.02, 0.05, 0.1] {
            let frac = devs.iter().filter(|&&d| d >= l).count() as f64 / devs.len() as f64;
            let se = (frac * (1.0 - frac) / devs.len() as f64).sqrt();
            assert!(frac - 3.0 * se <= k_star * t.sqrt() / l, "t={t} l={l}: {frac} vs {}", k_star * t.sqrt() / l);
        }
    }
}

#[test]
fn stationary_estimators_agree_and_forget_start() {
    let p = model_one();
    let b = bg(&p, 17);
    let grid = [0.25, 0.5, 0.75, 1.0];
    let ren = estimate_stationary_y(&p, &b, &grid, StationaryMethod::Renewal { kappa: 0.2, eta: 0.2, cycles: 10_000 }).unwrap();
    let erg = |y0| {
        estimate_stationary_y(&p, &b, &grid, StationaryMethod::Ergodic { y0, burn_in: 20.0, window: 100.0, reps: 400 }).unwrap()
    };
    let (lo, hi) = (erg(0.1), erg(0.9));
    assert!((ren[3].point - 1.0).abs() < 1e-9 && (lo[3].point - 1.0).abs() < 1e-9);
    for k in 0..3 {
        assert!(z_score(&ren[k], &lo[k]).abs() <= 4.0, "{k}: {:?} vs {:?}", ren[k], lo[k]);
        assert!(z_score(&lo[k], &hi[k]).abs() <= 4.0, "{k}: {:?} vs {:?}", lo[k], hi[k]);
    }
}

#[test]
fn coexistence_keeps_forward_process_interior() {
    let p = balancing();
    let b = bg(&p, 18);
    let flow = DriftFlow::forward(p.sigma(), None).unwrap();
    for x0 in [0.05, 0.95] {
        let ends = replicate(4_000, |k| Ok(observe_x(&flow, &b.replica(5, k), x0, &[50.0])?[0])).unwrap();
        let inside = ends.iter().filter(|x| (0.1..=0.9).contains(*x)).count() as f64 / ends.len() as f64;
        assert!(inside > 0.5, "x0 = {x0}: {inside}");
    }
}

#[test]
fn trajectories_replay_and_record_events() {
    let p = model_one();
    let b = bg(&p, 19).replica(6, 0);
    let opts = SimOptions { drift_step: None, record_events: true };
    let a = simulate_x(&p, &b, 0.4, &[1.0, 2.0, 3.0], &opts).unwrap();
    let c = simulate_x(&p, &b, 0.4, &[1.0, 2.0, 3.0], &opts).unwrap();
    assert_eq!(a, c);
    assert_eq!(a.observations().count(), 3);
    assert!(a.samples.iter().any(|s| s.kind == SampleKind::Event));
    assert!(a.samples.windows(2).all(|w| w[0].time <= w[1].time));
    let y = simulate_y(&p, &b, 0.4, &[3.0], &SimOptions::default()).unwrap();
    assert!((0.0..=1.0).contains(&y.final_state));
}

#[test]
fn passage_tail_is_a_decreasing_probability() {
    let p = neutral(0.5, 1.0);
    let spec = LevySpec::lower(4f64.ln()).unwrap();
    let m = mean_increment(&spec, &p).unwrap() - 1.0;
    let t: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let r = passage_tail(&spec, &p, &bg(&p, 20), m, 2.0, &t, 50.0, 5_000, 1.0).unwrap();
    assert!(r.tail.windows(2).all(|w| w[1].point <= w[0].point));
    assert!(r.hit_fraction.point > 0.0 && r.hit_fraction.point < 1.0);
    assert_eq!(r.preferred, "exponential");
    assert!(passage_tail(&spec, &p, &bg(&p, 20), m + 2.0, 2.0, &t, 50.0, 10, 1.0).is_err());
}

#[test]
fn decay_guards() {
    let p = neutral(0.5, 0.2);
    let b = bg(&p, 21);
    let e = decay_rate_experiment(&p, &b, 0.5, 0.01, &[5.0, 10.0], 10, DecayMode::Theta2).unwrap_err();
    assert!(matches!(e, Error::Precondition(_)), "{e}");
    let e = decay_rate_experiment(&p, &b, 0.5, 0.2, &[5.0], 0, DecayMode::Theta2).unwrap_err();
    assert!(matches!(e, Error::InvalidParameter(_)), "{e}");
    let e = decay_rate_experiment(&p, &b, 0.5, 0.2, &[5.0], 10, DecayMode::Theta3).unwrap_err();
    assert!(matches!(e, Error::WrongRegime { .. }), "{e}");
}
