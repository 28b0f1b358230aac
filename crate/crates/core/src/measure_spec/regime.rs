use std::fmt;

use serde::{Serialize, Serializer};

use super::measure::{Interval, MeasureSpec, Support};
use super::selection::SelectionFn;
use crate::error::{Error, Result};

pub const DEFAULT_CRITICAL_TOL: f64 = 1e-9;

/// Parameters `(Lambda, mu, sigma)` that passed the admissibility checks.
#[derive(Debug, Clone)]
pub struct ModelParams {
    lambda: MeasureSpec,
    mu: MeasureSpec,
    sigma: SelectionFn,
    impact: f64,
}

impl ModelParams {
    pub fn new(lambda: MeasureSpec, mu: MeasureSpec, sigma: SelectionFn) -> Result<Self> {
        if lambda.support() != Support::Unit {
            return Err(Error::InvalidMeasure("the neutral measure must live on (0,1)".into()));
        }
        if mu.support() != Support::Symmetric {
            return Err(Error::InvalidMeasure("the environmental measure must live on (-1,1)".into()));
        }
        if lambda.is_zero() {
            return Err(Error::InvalidMeasure("the neutral measure must be non-zero".into()));
        }
        let impact = coalescence_impact(&lambda)?;
        let abs_moment = mu
            .integrate(f64::abs, Interval::open(-1.0, 1.0))
            .map_err(|_| theta("integral of |r| against mu"))?;
        if !abs_moment.is_finite() {
            return Err(theta("integral of |r| against mu"));
        }
        let log_moment = mu
            .integrate(|r| -(-r * r).ln_1p(), Interval::open(-1.0, 1.0))
            .map_err(|_| theta("integral of log(1/(1-r^2)) against mu"))?;
        if !log_moment.is_finite() {
            return Err(theta("integral of log(1/(1-r^2)) against mu"));
        }
        Ok(ModelParams { lambda, mu, sigma, impact })
    }

    pub fn lambda(&self) -> &MeasureSpec {
        &self.lambda
    }
    pub fn mu(&self) -> &MeasureSpec {
        &self.mu
    }
    pub fn sigma(&self) -> &SelectionFn {
        &self.sigma
    }

    /// `integral of log(1/(1-r)) r^-2 Lambda(dr)`.
    pub fn coalescence_impact(&self) -> f64 {
        self.impact
    }

    /// Parameters of `1 - X`: `(Lambda, mu reflected, -sigma(1 - .))`.
    pub fn mirrored(&self) -> ModelParams {
        ModelParams {
            lambda: self.lambda.clone(),
            mu: self.mu.reflected(),
            sigma: self.sigma.reflected(),
            impact: self.impact,
        }
    }
}

fn theta(what: &str) -> Error {
    Error::ThetaViolation { integral: what.to_string() }
}

fn coalescence_impact(lambda: &MeasureSpec) -> Result<f64> {
    let what = "coalescence impact (integral of log(1/(1-r)) r^-2 against Lambda)";
    let v = lambda
        .integrate(|r| -(-r).ln_1p() / (r * r), Interval::open(0.0, 1.0))
        .map_err(|_| theta(what))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(theta(what))
    }
}

fn mu_log_term(params: &ModelParams, sign: f64) -> Result<f64> {
    // integral of log(1 + sign * r) mu(dr)
    params
        .mu
        .integrate(|r| (sign * r).ln_1p(), Interval::open(-1.0, 1.0))
}

/// `C_0 = sigma(0) - int log(1/(1-r)) mu_bar(dr) - impact`.
pub fn compute_c0(params: &ModelParams) -> Result<f64> {
    Ok(params.sigma.eval(0.0) + mu_log_term(params, 1.0)? - params.impact)
}

/// `C_1 = -sigma(1) - int log(1/(1-r)) mu(dr) - impact`.
pub fn compute_c1(params: &ModelParams) -> Result<f64> {
    Ok(-params.sigma.eval(1.0) + mu_log_term(params, -1.0)? - params.impact)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Theta0,
    Theta1,
    Theta2,
    Theta3,
    Critical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Theta0 => "Theta0",
            Regime::Theta1 => "Theta1",
            Regime::Theta2 => "Theta2",
            Regime::Theta3 => "Theta3",
            Regime::Critical => "Critical",
        };
        f.write_str(s)
    }
}

fn extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// Tail functionals `w_gamma` and `s_gamma` of one measure, restricted to `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFunctionals {
    #[serde(serialize_with = "extended")]
    pub w: f64,
    #[serde(serialize_with = "extended")]
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub c0: f64,
    pub c1: f64,
    pub regime: Regime,
    pub gamma: f64,
    /// For `r^-2 Lambda(dr)`.
    pub lambda: TailFunctionals,
    pub mu: TailFunctionals,
    pub mu_bar: TailFunctionals,
    pub predicted_behavior: String,
}

/// `C_i` counts as zero when `|C_i| <= tol * (1 + scale)`, `scale` being the size of its summands.
pub fn classify(c0: f64, c1: f64, scale0: f64, scale1: f64, tol: f64) -> Regime {
    let zero0 = c0.abs() <= tol * (1.0 + scale0);
    let zero1 = c1.abs() <= tol * (1.0 + scale1);
    if zero0 || zero1 {
        return Regime::Critical;
    }
    match (c0 < 0.0, c1 < 0.0) {
        (true, false) => Regime::Theta0,
        (false, true) => Regime::Theta1,
        (true, true) => Regime::Theta2,
        (false, false) => Regime::Theta3,
    }
}

fn tail_functionals(m: &MeasureSpec, weight: impl Fn(f64) -> f64 + Copy, map: impl Fn(f64) -> f64 + Copy, gamma: f64) -> TailFunctionals {
    // `map` sends the integration variable to the point whose tail is measured (identity or reflection)
    let (lo, hi) = match m.support() {
        Support::Unit => (0.5, 1.0),
        Support::Symmetric => (-1.0, 1.0),
    };
    let in_tail = move |r: f64| {
        let q = map(r);
        q > 0.5 && q < 1.0
    };
    let w = m
        .integrate(
            |r| if in_tail(r) { weight(r) * (-(-map(r)).ln_1p()).powf(1.0 + gamma) } else { 0.0 },
            Interval::open(lo, hi),
        )
        .unwrap_or(f64::INFINITY);
    let s = m
        .integrate(
            |r| if in_tail(r) { weight(r) * (1.0 / (1.0 - map(r))).powf(gamma) } else { 0.0 },
            Interval::open(lo, hi),
        )
        .unwrap_or(f64::INFINITY);
    TailFunctionals { w, s }
}

/// Computes `C_0`, `C_1`, the regime and the tail functionals at exponent `gamma`.
pub fn integrability_report(params: &ModelParams, gamma: f64) -> Result<RegimeReport> {
    integrability_report_with(params, gamma, DEFAULT_CRITICAL_TOL)
}

pub fn integrability_report_with(params: &ModelParams, gamma: f64, critical_tol: f64) -> Result<RegimeReport> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidGamma(gamma));
    }
    let m0 = mu_log_term(params, 1.0)?;
    let m1 = mu_log_term(params, -1.0)?;
    let s0 = params.sigma.eval(0.0);
    let s1 = params.sigma.eval(1.0);
    let c0 = s0 + m0 - params.impact;
    let c1 = -s1 + m1 - params.impact;
    let regime = classify(
        c0,
        c1,
        s0.abs() + m0.abs() + params.impact,
        s1.abs() + m1.abs() + params.impact,
        critical_tol,
    );
    let lambda = tail_functionals(&params.lambda, |r| 1.0 / (r * r), |r| r, gamma);
    let mu = tail_functionals(&params.mu, |_| 1.0, |r| r, gamma);
    let mu_bar = tail_functionals(&params.mu, |_| 1.0, |r| -r, gamma);
    let predicted_behavior = predict(regime, &lambda, &mu, &mu_bar, gamma);
    Ok(RegimeReport { c0, c1, regime, gamma, lambda, mu, mu_bar, predicted_behavior })
}

fn predict(regime: Regime, lambda: &TailFunctionals, mu: &TailFunctionals, mu_bar: &TailFunctionals, gamma: f64) -> String {
    match regime {
        Regime::Theta0 => {
            if lambda.w.is_finite() && mu.w.is_finite() {
                let rate = if lambda.s.is_finite() && mu.s.is_finite() { "exponentially fast" } else { "polynomially fast" };
                format!("X_t -> 0 almost surely; the probability of staying away from 0 decays {rate}")
            } else {
                format!("C0 < 0 < C1, but the w-functionals are infinite at gamma = {gamma}; no almost-sure prediction")
            }
        }
        Regime::Theta1 => {
            if lambda.w.is_finite() && mu_bar.w.is_finite() {
                let rate = if lambda.s.is_finite() && mu_bar.s.is_finite() { "exponentially fast" } else { "polynomially fast" };
                format!("X_t -> 1 almost surely; the probability of staying away from 1 decays {rate}")
            } else {
                format!("C1 < 0 < C0, but the w-functionals are infinite at gamma = {gamma}; no almost-sure prediction")
            }
        }
        Regime::Theta2 => {
            "lim X_t exists almost surely and lies in {0,1}; both boundaries are asymptotically accessible".to_string()
        }
        Regime::Theta3 => {
            "coexistence: both boundaries are asymptotically inaccessible and X has a unique stationary law on (0,1)".to_string()
        }
        Regime::Critical => "critical case (C0 = 0 or C1 = 0): no prediction".to_string(),
    }
}

impl RegimeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let fmt = |v: f64| if v.is_infinite() { "inf".to_string() } else { format!("{v:.6}") };
        let mut out = String::new();
        out.push_str(&format!("C0                 {:.10}\n", self.c0));
        out.push_str(&format!("C1                 {:.10}\n", self.c1));
        out.push_str(&format!("regime             {}\n", self.regime));
        out.push_str(&format!("gamma              {}\n", self.gamma));
        out.push_str(&format!("{:<18} {:>14} {:>14}\n", "measure", "w_gamma", "s_gamma"));
        for (name, t) in [("r^-2 Lambda", &self.lambda), ("mu", &self.mu), ("mu_bar", &self.mu_bar)] {
            out.push_str(&format!("{:<18} {:>14} {:>14}\n", name, fmt(t.w), fmt(t.s)));
        }
        out.push_str(&format!("prediction         {}\n", self.predicted_behavior));
        out
    }
}
