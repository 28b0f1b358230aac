//! Lévy processes built from the same background that bound `log(1/Y)` from below and above
//! while Y stays in `(0, e^-b]`, their Laplace exponents, and passage-time experiments.

use serde::Serialize;

use crate::dual_process::{m_map, DualMaps};
use crate::error::{Error, Result};
use crate::flow::{DriftFlow, PathWalker};
use crate::measure_spec::{compute_c0, integrability_report, Interval, ModelParams};
use crate::random_background::{Jump, JumpEvent, RandomBackground};
use crate::stats::{linear_fit, replicate, EstimateWithCI, LinearFit};
use crate::trajectory::{validate_obs_times, Sample, SampleKind, Trajectory, TrajectoryMeta};

const DIFF_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevySpec {
    pub b: f64,
    /// Neutral events with `r < delta` are left out of the upper process.
    pub delta: f64,
    pub which: Bound,
    /// Bound `log(1/(1 - Y))` instead, using `(Lambda, mu reflected, sigma reflected)`.
    pub mirrored: bool,
}

impl LevySpec {
    pub fn new(b: f64, delta: f64, which: Bound, mirrored: bool) -> Result<Self> {
        if !(b >= 2f64.ln() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("b = {b} must be finite and at least log 2")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0,1)")));
        }
        Ok(LevySpec { b, delta, which, mirrored })
    }

    pub fn lower(b: f64) -> Result<Self> {
        Self::new(b, 0.5, Bound::Lower, false)
    }

    pub fn upper(b: f64, delta: f64) -> Result<Self> {
        Self::new(b, delta, Bound::Upper, false)
    }

    fn eb(&self) -> f64 {
        (-self.b).exp()
    }

    fn effective(&self, params: &ModelParams) -> ModelParams {
        if self.mirrored {
            params.mirrored()
        } else {
            params.clone()
        }
    }
}

/// `(1+r)^2 - 4 r e^-b` on the side selected by `positive_side`, `(1+r)^2` otherwise.
fn env_disc(r: f64, eb: f64, positive_side: bool) -> f64 {
    let opposite = if positive_side { r > 0.0 } else { r < 0.0 };
    let base = (1.0 + r) * (1.0 + r);
    if opposite {
        base - 4.0 * r * eb
    } else {
        base
    }
}

/// The mirrored process sees neutral events with `u -> 1 - u` and environmental ones with `r -> -r`.
fn oriented(spec: &LevySpec, jump: &Jump) -> Jump {
    match (*jump, spec.mirrored) {
        (j, false) => j,
        (Jump::Neutral { r, u }, true) => Jump::Neutral { r, u: 1.0 - u },
        (Jump::Environmental { r }, true) => Jump::Environmental { r: -r },
    }
}

/// Jump of the bounding process caused by `event`.
pub fn levy_increment(spec: &LevySpec, event: &JumpEvent) -> f64 {
    let eb = spec.eb();
    match (spec.which, oriented(spec, &event.jump)) {
        (Bound::Lower, Jump::Neutral { r, .. }) => (-r).ln_1p(),
        (Bound::Lower, Jump::Environmental { r }) => 0.5 * env_disc(r, eb, true).ln(),
        (Bound::Upper, Jump::Neutral { r, u }) => {
            if r < spec.delta {
                0.0
            } else if r < 1.0 - eb {
                (1.0 - r).max(1.0 / (u * spec.b.exp())).ln()
            } else if u <= eb {
                -(u.ln() + spec.b)
            } else {
                0.0
            }
        }
        (Bound::Upper, Jump::Environmental { r }) => 0.5 * env_disc(r, eb, false).ln(),
    }
}

/// Linear drift `sigma(0) -/+ e^-b ||sigma||_C1` (of the reflected selection when mirrored).
pub fn levy_drift(spec: &LevySpec, params: &ModelParams) -> f64 {
    let p = spec.effective(params);
    let s = p.sigma();
    match spec.which {
        Bound::Lower => s.eval(0.0) - spec.eb() * s.c1_bound(),
        Bound::Upper => s.eval(0.0) + spec.eb() * s.c1_bound(),
    }
}

fn domain_err(lambda: f64, reason: &str) -> Error {
    Error::DomainError { lambda, reason: reason.to_string() }
}

/// `log E[exp(lambda L_1)]`.
pub fn laplace_exponent(spec: &LevySpec, params: &ModelParams, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(domain_err(lambda, "lambda must be finite"));
    }
    let p = spec.effective(params);
    let eb = spec.eb();
    let drift = levy_drift(spec, params);
    let (neutral, env) = match spec.which {
        Bound::Lower => {
            let n = p
                .lambda()
                .integrate(|r| (lambda * (-r).ln_1p()).exp_m1() / (r * r), Interval::open(0.0, 1.0))
                .map_err(|_| domain_err(lambda, "neutral integral diverges (tail integrability fails)"))?;
            let e = p
                .mu()
                .integrate(|r| (0.5 * lambda * env_disc(r, eb, true).ln()).exp_m1(), Interval::open(-1.0, 1.0))
                .map_err(|_| domain_err(lambda, "environmental integral diverges"))?;
            (n, e)
        }
        Bound::Upper => {
            if !(0.0..1.0).contains(&lambda) {
                return Err(domain_err(lambda, "the upper exponent is defined for lambda in [0,1)"));
            }
            let cut = 1.0 - eb;
            let integrand = |r: f64| {
                let body = if r < cut {
                    (lambda * (-r).ln_1p()).exp_m1() + lambda * eb / ((1.0 - lambda) * (1.0 - r).powf(1.0 - lambda))
                } else {
                    lambda * eb / (1.0 - lambda)
                };
                body / (r * r)
            };
            let n = p
                .lambda()
                .integrate(integrand, Interval::closed_open(spec.delta, 1.0))
                .map_err(|_| domain_err(lambda, "neutral integral diverges"))?;
            let e = p
                .mu()
                .integrate(|r| (0.5 * lambda * env_disc(r, eb, false).ln()).exp_m1(), Interval::open(-1.0, 1.0))
                .map_err(|_| domain_err(lambda, "environmental integral diverges"))?;
            (n, e)
        }
    };
    let v = neutral + env + lambda * drift;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain_err(lambda, "exponent is infinite"))
    }
}

/// `(psi'(lambda), psi''(lambda))` by central differences with step `1e-5`.
pub fn laplace_derivatives(spec: &LevySpec, params: &ModelParams, lambda: f64) -> Result<(f64, f64)> {
    let h = DIFF_STEP;
    let (lo, hi) = if spec.which == Bound::Upper && lambda - h < 0.0 {
        // one-sided at the left end of the upper domain
        (lambda, lambda + 2.0 * h)
    } else {
        (lambda - h, lambda + h)
    };
    let mid = 0.5 * (lo + hi);
    let f_lo = laplace_exponent(spec, params, lo)?;
    let f_mid = laplace_exponent(spec, params, mid)?;
    let f_hi = laplace_exponent(spec, params, hi)?;
    let step = 0.5 * (hi - lo);
    Ok(((f_hi - f_lo) / (2.0 * step), (f_hi - 2.0 * f_mid + f_lo) / (step * step)))
}

/// `E[L_1]`, from closed-form integrals rather than by differentiating the exponent.
///
/// Lower: `C0 + (1/2) int_(0,1) log(1 - 4 r e^-b / (1+r)^2) mu(dr) - e^-b ||sigma||_C1`.
pub fn mean_increment(spec: &LevySpec, params: &ModelParams) -> Result<f64> {
    let p = spec.effective(params);
    let eb = spec.eb();
    match spec.which {
        Bound::Lower => {
            let c0 = compute_c0(&p)?;
            let corr = p
                .mu()
                .integrate(|r| 0.5 * (-4.0 * r * eb / ((1.0 + r) * (1.0 + r))).ln_1p(), Interval::open(0.0, 1.0))?;
            Ok(c0 + corr - eb * p.sigma().c1_bound())
        }
        Bound::Upper => {
            let cut = 1.0 - eb;
            let n = p.lambda().integrate(
                |r| {
                    let body = if r < cut { (-r).ln_1p() + eb / (1.0 - r) } else { eb };
                    body / (r * r)
                },
                Interval::closed_open(spec.delta, 1.0),
            )?;
            let e = p
                .mu()
                .integrate(|r| 0.5 * env_disc(r, eb, false).ln(), Interval::open(-1.0, 1.0))?;
            Ok(n + e + levy_drift(spec, params))
        }
    }
}

/// Values of the bounding process at `obs_times`, starting from 0.
pub fn observe_levy(spec: &LevySpec, params: &ModelParams, background: &RandomBackground, obs_times: &[f64]) -> Result<Vec<f64>> {
    validate_obs_times(obs_times)?;
    let drift = levy_drift(spec, params);
    let mut events = background.events().peekable();
    let mut jumps = 0.0;
    let mut out = Vec::with_capacity(obs_times.len());
    for &t in obs_times {
        while let Some(ev) = events.next_if(|e| e.time <= t) {
            jumps += levy_increment(spec, &ev);
        }
        out.push(jumps + drift * t);
    }
    Ok(out)
}

/// Path of the bounding process with a sample after every event and at each observation time.
pub fn simulate_levy(spec: &LevySpec, params: &ModelParams, background: &RandomBackground, obs_times: &[f64]) -> Result<Trajectory> {
    validate_obs_times(obs_times)?;
    let drift = levy_drift(spec, params);
    let mut events = background.events().peekable();
    let mut jumps = 0.0;
    let mut samples = Vec::new();
    for &t in obs_times {
        while let Some(ev) = events.next_if(|e| e.time <= t) {
            jumps += levy_increment(spec, &ev);
            samples.push(Sample { time: ev.time, state: jumps + drift * ev.time, kind: SampleKind::Event });
        }
        samples.push(Sample { time: t, state: jumps + drift * t, kind: SampleKind::Observation });
    }
    let final_state = samples.last().map_or(0.0, |s| s.state);
    Ok(Trajectory {
        samples,
        final_state,
        meta: TrajectoryMeta {
            seed: background.seed(),
            domain: background.domain(),
            index: background.index(),
            eps_neutral: background.config().eps_neutral,
            eps_env: background.config().eps_env,
            drift_step: 0.0,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    /// `max (L_lower - D)` over checks, where `D = log(1/Z_t) - log(1/Z_0)` and `Z` is `Y` or `1 - Y`.
    pub lower_violation: f64,
    /// `max (D - L_upper - H)` over checks.
    pub upper_violation: f64,
    pub checks: u64,
    /// Time at which `Z` first exceeded `e^-b`, if before the horizon.
    pub exit_time: Option<f64>,
    /// Final value of the small-jump correction `H`.
    pub small_jump_term: f64,
}

/// Checks `L_lower <= log(1/Z_t) - log(1/Z_0) <= L_upper + H` just before and after every event
/// up to the exit of `Z` from `(0, e^-b]` or `horizon`.
pub fn sandwich_check(
    params: &ModelParams,
    background: &RandomBackground,
    b: f64,
    delta: f64,
    y0: f64,
    horizon: f64,
    mirrored: bool,
) -> Result<SandwichReport> {
    let lower = LevySpec::new(b, delta, Bound::Lower, mirrored)?;
    let upper = LevySpec::new(b, delta, Bound::Upper, mirrored)?;
    let eb = (-b).exp();
    let z = |y: f64| if mirrored { 1.0 - y } else { y };
    let z0 = z(y0);
    if !(z0 > 0.0 && z0 <= eb) {
        return Err(Error::Precondition(format!("starting point {z0} must lie in (0, e^-b] = (0, {eb}]")));
    }
    let drift_lo = levy_drift(&lower, params);
    let drift_hi = levy_drift(&upper, params);
    let flow = DriftFlow::dual(params.sigma(), None)?;
    let mut walker = PathWalker::new(&flow, DualMaps, background.events(), y0);
    let (mut jl, mut ju, mut h) = (0.0, 0.0, 0.0);
    let mut report = SandwichReport {
        lower_violation: f64::NEG_INFINITY,
        upper_violation: f64::NEG_INFINITY,
        checks: 0,
        exit_time: None,
        small_jump_term: 0.0,
    };
    let check = |t: f64, zt: f64, jl: f64, ju: f64, h: f64, report: &mut SandwichReport| {
        let d = (z0 / zt).ln();
        report.lower_violation = report.lower_violation.max(jl + drift_lo * t - d);
        report.upper_violation = report.upper_violation.max(d - (ju + drift_hi * t + h));
        report.checks += 1;
    };
    check(0.0, z0, 0.0, 0.0, 0.0, &mut report);
    while let Some(step) = walker.next_event_before(horizon, None)? {
        let (zpre, zpost) = (z(step.pre), z(step.post));
        if zpre > eb {
            // left through the drift before this event
            report.exit_time = Some(step.time);
            break;
        }
        check(step.time, zpre, jl, ju, h, &mut report);
        let ev = JumpEvent { time: step.time, jump: step.jump };
        jl += levy_increment(&lower, &ev);
        ju += levy_increment(&upper, &ev);
        if let Jump::Neutral { r, .. } = step.jump {
            if r < delta {
                h += (zpre / zpost).ln();
            }
        }
        check(step.time, zpost, jl, ju, h, &mut report);
        if zpost > eb {
            report.exit_time = Some(step.time);
            break;
        }
    }
    report.small_jump_term = h;
    Ok(report)
}

/// Small-jump correction for one neutral event, `log(Y_- / m_{r,u}(Y_-))`.
pub fn small_jump_increment(y_pre: f64, r: f64, u: f64) -> f64 {
    (y_pre / m_map(y_pre, r, u)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassageTailReport {
    pub t_grid: Vec<f64>,
    /// `P(t < T < horizon)` where `T` is the first passage of `L - m t` below `-x`.
    pub tail: Vec<EstimateWithCI>,
    pub hit_fraction: EstimateWithCI,
    pub censored_fraction: f64,
    /// `P(H > t)` for the last time `H <= horizon` at which `L - m t` attains its running minimum.
    pub last_minimum_tail: Vec<EstimateWithCI>,
    pub mean_last_minimum: EstimateWithCI,
    /// log tail against t.
    pub exponential_fit: Option<LinearFit>,
    /// log tail against log t.
    pub polynomial_fit: Option<LinearFit>,
    pub preferred: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PassageSample {
    hit: Option<f64>,
    last_min: f64,
}

/// Monte Carlo of the passage time of `L_t - m t` below `-x` for `m < E[L_1]`.
#[allow(clippy::too_many_arguments)]
pub fn passage_tail(
    spec: &LevySpec,
    params: &ModelParams,
    background: &RandomBackground,
    m: f64,
    x: f64,
    t_grid: &[f64],
    horizon: f64,
    reps: u64,
    gamma: f64,
) -> Result<PassageTailReport> {
    let mean = mean_increment(spec, params)?;
    if !(mean > m) {
        return Err(Error::Precondition(format!("E[L_1] = {mean} must exceed m = {m}")));
    }
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("level x = {x} must be positive")));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    validate_obs_times(t_grid)?;
    let slope = levy_drift(spec, params) - m;
    let samples = replicate(reps, |i| {
        let bg = background.replica(0x5a55_0000, i);
        let mut value = 0.0;
        let mut now = 0.0;
        let mut min = 0.0;
        let mut last_min = 0.0;
        let mut hit = None;
        for ev in bg.events() {
            if ev.time > horizon {
                break;
            }
            // linear segment from `now` to the event
            let pre = value + slope * (ev.time - now);
            if hit.is_none() && pre < -x {
                hit = Some(now + (-x - value) / slope);
            }
            if slope > 0.0 {
                if value <= min {
                    min = value;
                    last_min = now;
                }
            } else if pre <= min {
                min = pre;
                last_min = ev.time;
            }
            value = pre + levy_increment(spec, &ev);
            now = ev.time;
            if hit.is_none() && value < -x {
                hit = Some(now);
            }
        }
        let end = value + slope * (horizon - now);
        if hit.is_none() && end < -x {
            hit = Some(now + (-x - value) / slope);
        }
        if slope > 0.0 {
            if value <= min {
                last_min = now;
            }
        } else if end <= min {
            last_min = horizon;
        }
        Ok(PassageSample { hit, last_min })
    })?;
    let n = reps;
    let hits = samples.iter().filter(|s| s.hit.is_some()).count() as u64;
    let tail: Vec<EstimateWithCI> = t_grid
        .iter()
        .map(|&t| {
            let c = samples.iter().filter(|s| matches!(s.hit, Some(h) if h > t)).count() as u64;
            EstimateWithCI::from_bernoulli(c, n, "passage tail")
        })
        .collect();
    let last_minimum_tail = t_grid
        .iter()
        .map(|&t| {
            let c = samples.iter().filter(|s| s.last_min > t).count() as u64;
            EstimateWithCI::from_bernoulli(c, n, "last minimum tail")
        })
        .collect();
    let lm: Vec<f64> = samples.iter().map(|s| s.last_min).collect();
    let (exponential_fit, polynomial_fit) = tail_fits(t_grid, &tail);
    let report = integrability_report(&spec.effective(params), gamma)?;
    let preferred = if report.lambda.s.is_finite() && report.mu_bar.s.is_finite() { "exponential" } else { "polynomial" };
    Ok(PassageTailReport {
        t_grid: t_grid.to_vec(),
        tail,
        hit_fraction: EstimateWithCI::from_bernoulli(hits, n, "hit before horizon"),
        censored_fraction: 1.0 - hits as f64 / n as f64,
        last_minimum_tail,
        mean_last_minimum: EstimateWithCI::from_samples(&lm, "mean last minimum time"),
        exponential_fit,
        polynomial_fit,
        preferred: preferred.to_string(),
    })
}

/// Least-squares fits of `log p` against `t` and `log t`, over points with `p > 0` and `t > 0`.
pub fn tail_fits(t_grid: &[f64], p: &[EstimateWithCI]) -> (Option<LinearFit>, Option<LinearFit>) {
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(p)
        .filter(|(t, e)| **t > 0.0 && e.point > 0.0)
        .map(|(t, e)| (*t, e.point.ln()))
        .collect();
    if pts.len() < 3 {
        return (None, None);
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    (Some(linear_fit(&ts, &ys)), Some(linear_fit(&logt, &ys)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_spec::{MeasureSpec, SelectionFn, Support};

    fn neutral_half() -> ModelParams {
        ModelParams::new(
            MeasureSpec::atomic(Support::Unit, &[(0.5, 1.0)]).unwrap(),
            MeasureSpec::zero(Support::Symmetric),
            SelectionFn::zero(),
        )
        .unwrap()
    }

    #[test]
    fn increments_examples() {
        let lo = LevySpec::lower(4f64.ln()).unwrap();
        let up = LevySpec::upper(4f64.ln(), 0.25).unwrap();
        let n = JumpEvent { time: 1.0, jump: Jump::Neutral { r: 0.5, u: 0.9 } };
        assert!((levy_increment(&lo, &n) + 2f64.ln()).abs() < 1e-15);
        let e = JumpEvent { time: 1.0, jump: Jump::Environmental { r: 0.5 } };
        assert!((levy_increment(&lo, &e) - 0.5 * 1.75f64.ln()).abs() < 1e-15);
        assert!((levy_increment(&up, &n) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn drift_examples() {
        let p = ModelParams::new(
            MeasureSpec::atomic(Support::Unit, &[(0.5, 1.0)]).unwrap(),
            MeasureSpec::zero(Support::Symmetric),
            SelectionFn::constant(2.0),
        )
        .unwrap();
        let b = 4f64.ln();
        assert!((levy_drift(&LevySpec::lower(b).unwrap(), &p) - 1.5).abs() < 1e-14);
        assert!((levy_drift(&LevySpec::upper(b, 0.25).unwrap(), &p) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn lower_exponent_closed_form() {
        let p = neutral_half();
        let spec = LevySpec::lower(4f64.ln()).unwrap();
        for &l in &[0.0, 0.25, 0.5, 1.0, 2.0] {
            let v = laplace_exponent(&spec, &p, l).unwrap();
            assert!((v - 4.0 * (2f64.powf(-l) - 1.0)).abs() < 1e-12);
        }
        let (d1, _) = laplace_derivatives(&spec, &p, 0.0).unwrap();
        assert!((d1 + 4.0 * 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn upper_exponent_domain() {
        let p = neutral_half();
        let spec = LevySpec::upper(4f64.ln(), 0.25).unwrap();
        assert!(matches!(laplace_exponent(&spec, &p, 1.0), Err(Error::DomainError { .. })));
        assert!(laplace_exponent(&spec, &p, 0.5).is_ok());
    }
}
