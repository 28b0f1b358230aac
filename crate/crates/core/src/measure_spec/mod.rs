//! Parameter triples `(Lambda, mu, sigma)`, admissibility checks and regime classification.

mod measure;
mod regime;
mod selection;

pub use measure::{integrate_against, Atom, Density, DensityKind, Interval, MeasureSpec, Support, DEFAULT_QUAD_TOL};
pub use regime::{
    classify, compute_c0, compute_c1, integrability_report, integrability_report_with, ModelParams, Regime,
    RegimeReport, TailFunctionals, DEFAULT_CRITICAL_TOL,
};
pub use selection::SelectionFn;

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: &[(f64, f64)], mu: &[(f64, f64)], sigma: Vec<f64>) -> ModelParams {
        ModelParams::new(
            MeasureSpec::atomic(Support::Unit, lambda).unwrap(),
            MeasureSpec::atomic(Support::Symmetric, mu).unwrap(),
            SelectionFn::new(sigma).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn impact_of_half_atom() {
        let p = params(&[(0.5, 1.0)], &[], vec![]);
        assert!((p.coalescence_impact() - 4.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn abs_moment_of_mixed_mu() {
        let mu = MeasureSpec::atomic(Support::Symmetric, &[(0.25, 0.3), (-0.5, 0.2)]).unwrap();
        let v = mu.integrate(f64::abs, Interval::open(-1.0, 1.0)).unwrap();
        assert!((v - 0.175).abs() < 1e-14);
    }

    #[test]
    fn balanced_model_is_coexistence() {
        let p = params(&[(0.5, 0.5)], &[], vec![4.0, -8.0]);
        let r = integrability_report(&p, 1.0).unwrap();
        let expect = 4.0 - 2.0 * 2f64.ln();
        assert!((r.c0 - expect).abs() < 1e-12 && (r.c1 - expect).abs() < 1e-12);
        assert_eq!(r.regime, Regime::Theta3);
    }

    #[test]
    fn environmental_shift_of_c0() {
        let p = params(&[(0.5, 1.0)], &[(0.5, 1.0)], vec![]);
        let c0 = compute_c0(&p).unwrap();
        assert!((c0 - (1.5f64.ln() - 4.0 * 2f64.ln())).abs() < 1e-12);
        assert!((c0 + 2.367124).abs() < 1e-6);
    }

    #[test]
    fn tail_functional_of_three_quarter_atom() {
        let p = params(&[(0.75, 1.0)], &[], vec![]);
        let r = integrability_report(&p, 1.0).unwrap();
        assert!((r.lambda.w - 16.0 / 9.0 * 4f64.ln().powi(2)).abs() < 1e-12);
        assert!((r.lambda.s - 16.0 / 9.0 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn mirror_swaps_c0_and_c1() {
        let p = params(&[(0.3, 0.7), (0.8, 0.1)], &[(0.4, 0.2), (-0.6, 0.5)], vec![0.5, -1.5, 0.25]);
        let m = p.mirrored();
        assert!((compute_c0(&m).unwrap() - compute_c1(&p).unwrap()).abs() < 1e-12);
        assert!((compute_c1(&m).unwrap() - compute_c0(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn invalid_gamma() {
        let p = params(&[(0.5, 1.0)], &[], vec![]);
        assert_eq!(integrability_report(&p, 0.0).unwrap_err(), crate::Error::InvalidGamma(0.0));
    }

    #[test]
    fn atom_outside_support_rejected() {
        assert!(MeasureSpec::atomic(Support::Unit, &[(1.5, 1.0)]).is_err());
        assert!(MeasureSpec::atomic(Support::Symmetric, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn density_quadrature() {
        let d = Density::constant(2.0, 0.2, 0.6).unwrap();
        let lambda = MeasureSpec::new(Support::Unit, vec![], Some(d)).unwrap();
        let mass = lambda.total_mass().unwrap();
        assert!((mass - 0.8).abs() < 1e-12);
        let beta = Density::beta(2.0, 3.0, 0.5, 0.0, 1.0).unwrap();
        let m = MeasureSpec::new(Support::Unit, vec![], Some(beta)).unwrap();
        assert!((m.total_mass().unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn heavy_tail_density_gives_infinite_s() {
        // density (1-r)^{-1/2} near 1: w_1 finite, s_1 infinite
        let d = Density::beta(3.0, 0.5, 1.0, 0.0, 1.0).unwrap();
        let lambda = MeasureSpec::new(Support::Unit, vec![], Some(d)).unwrap();
        let p = ModelParams::new(lambda, MeasureSpec::zero(Support::Symmetric), SelectionFn::zero()).unwrap();
        let r = integrability_report(&p, 1.0).unwrap();
        assert!(r.lambda.w.is_finite());
        assert!(r.lambda.s.is_infinite());
        assert!(r.to_json().contains("\"inf\""));
    }
}
