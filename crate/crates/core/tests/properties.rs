use lwf_core::dual_process::{m_map, s_map};
use lwf_core::forward_process::{step_x_env, step_x_neutral};
use lwf_core::measure_spec::{
    compute_c0, compute_c1, integrability_report, Density, MeasureSpec, ModelParams, SelectionFn, Support,
};
use lwf_core::random_background::{build_background, BackgroundConfig};
use proptest::prelude::*;

fn open_unit() -> impl Strategy<Value = f64> {
    1e-6f64..1.0 - 1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn neutral_step_and_median_are_generalized_inverses(x in 0.0f64..=1.0, y in 0.0f64..=1.0, r in open_unit(), u in 0.0f64..=1.0) {
        let fx = step_x_neutral(x, r, u);
        let my = m_map(y, r, u);
        prop_assume!((fx - y).abs() > 1e-12 && (my - x).abs() > 1e-12);
        prop_assert_eq!(fx >= y, my <= x);
    }

    #[test]
    fn maps_are_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, r in open_unit(), s in -0.999f64..0.999, u in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(step_x_neutral(lo, r, u) <= step_x_neutral(hi, r, u));
        prop_assert!(step_x_env(lo, s) <= step_x_env(hi, s));
        prop_assert!(m_map(lo, r, u) <= m_map(hi, r, u));
        prop_assert!(s_map(lo, s) <= s_map(hi, s) + 1e-15);
    }

    #[test]
    fn maps_stay_in_unit_interval(y in 0.0f64..=1.0, r in open_unit(), s in -0.999f64..0.999, u in 0.0f64..=1.0) {
        for v in [step_x_neutral(y, r, u), step_x_env(y, s), m_map(y, r, u), s_map(y, s)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn selection_inverse_identity(y in 0.0f64..=1.0, s in -0.9999f64..0.9999) {
        let x = s_map(y, s);
        prop_assert!((x + s * x * (1.0 - x) - y).abs() <= 1e-12);
    }

    #[test]
    fn selection_inverse_bounds(y in 0.0f64..=1.0, r in open_unit()) {
        let e = 1e-15;
        let up = s_map(y, r);
        prop_assert!(y / 2.0 <= y / (1.0 + r) + e && y / (1.0 + r) <= up + e && up <= y + e);
        let down = s_map(y, -r);
        prop_assert!(y <= down + e && down <= (y + r) / (1.0 + r) + e && (y + r) / (1.0 + r) <= (y + 1.0) / 2.0 + e);
    }

    #[test]
    fn c1_bound_dominates_value_and_slope(c in proptest::collection::vec(-5.0f64..5.0, 1..5), x in 0.0f64..=1.0) {
        let s = SelectionFn::new(c).unwrap();
        prop_assert!(s.eval(x).abs() <= s.c1_bound() + 1e-12);
        prop_assert!(s.derivative(x).abs() <= s.c1_bound() + 1e-12);
    }

    #[test]
    fn constant_selection_gives_negative_sum(s in -5.0f64..5.0, w in 0.01f64..2.0, loc in 0.05f64..0.95, m in 0.0f64..1.0, z in -0.9f64..0.9) {
        prop_assume!(z.abs() > 1e-3);
        let mu = if m > 0.0 { MeasureSpec::atomic(Support::Symmetric, &[(z, m)]).unwrap() } else { MeasureSpec::zero(Support::Symmetric) };
        let p = ModelParams::new(MeasureSpec::atomic(Support::Unit, &[(loc, w)]).unwrap(), mu, SelectionFn::constant(s)).unwrap();
        prop_assert!(compute_c0(&p).unwrap() + compute_c1(&p).unwrap() < 0.0);
    }

    #[test]
    fn impact_is_linear_in_lambda(w in 0.01f64..2.0, loc in 0.05f64..0.95, c in 0.1f64..10.0) {
        let base = ModelParams::new(MeasureSpec::atomic(Support::Unit, &[(loc, w)]).unwrap(), MeasureSpec::zero(Support::Symmetric), SelectionFn::zero()).unwrap();
        let scaled = ModelParams::new(base.lambda().scaled(c), MeasureSpec::zero(Support::Symmetric), SelectionFn::zero()).unwrap();
        let (a, b) = (base.coalescence_impact(), scaled.coalescence_impact());
        prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn mirror_swaps_boundary_constants(c in proptest::collection::vec(-3.0f64..3.0, 1..4), z in 0.05f64..0.9, m in 0.01f64..1.0) {
        let p = ModelParams::new(
            MeasureSpec::atomic(Support::Unit, &[(0.5, 0.3)]).unwrap(),
            MeasureSpec::atomic(Support::Symmetric, &[(z, m), (-z / 2.0, m / 2.0)]).unwrap(),
            SelectionFn::new(c).unwrap(),
        ).unwrap();
        let q = p.mirrored();
        prop_assert!((compute_c0(&q).unwrap() - compute_c1(&p).unwrap()).abs() <= 1e-12);
        prop_assert!((compute_c1(&q).unwrap() - compute_c0(&p).unwrap()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn finite_s_implies_finite_w(a in 2.5f64..4.0, b in 0.5f64..3.0, gamma in 0.2f64..2.0) {
        let lambda = MeasureSpec::new(Support::Unit, vec![], Some(Density::beta(a, b, 1.0, 0.0, 1.0).unwrap())).unwrap();
        let p = ModelParams::new(lambda, MeasureSpec::zero(Support::Symmetric), SelectionFn::zero()).unwrap();
        let tails = integrability_report(&p, gamma).unwrap().lambda;
        if tails.s.is_finite() {
            prop_assert!(tails.w.is_finite());
        }
    }

    #[test]
    fn background_replays_identically(seed in any::<u64>(), index in 0u64..1000) {
        let p = ModelParams::new(
            MeasureSpec::atomic(Support::Unit, &[(0.5, 1.0)]).unwrap(),
            MeasureSpec::atomic(Support::Symmetric, &[(0.3, 0.2)]).unwrap(),
            SelectionFn::zero(),
        ).unwrap();
        let bg = build_background(&p, BackgroundConfig { seed, ..Default::default() }).unwrap();
        let a: Vec<_> = bg.replica(3, index).events().take(50).collect();
        let b: Vec<_> = bg.replica(3, index).events().take(50).collect();
        prop_assert_eq!(a, b);
    }
}
