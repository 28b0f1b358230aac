//! The Siegmund dual Y: jump maps, path simulation, coupled pairs and renewal detection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{observe_path, record_path, DriftFlow, EventStep, JumpMaps, Occupation, PathWalker, PairWalker};
use crate::forward_process::meta;
use crate::measure_spec::{Interval, ModelParams};
use crate::random_background::{FilterSide, Jump, RandomBackground};
use crate::trajectory::{validate_obs_times, SimOptions, Trajectory};

pub const MERGE_TOL: f64 = 1e-12;

/// Neutral map of the dual: `median((y - r)/(1 - r), y/(1 - r), u)`.
pub fn m_map(y: f64, r: f64, u: f64) -> f64 {
    let lo = (y - r) / (1.0 - r);
    let hi = y / (1.0 - r);
    u.max(lo).min(hi)
}

/// Environmental map of the dual: the root in `[0,1]` of `s + r s (1 - s) = y`.
pub fn s_map(y: f64, r: f64) -> f64 {
    if r.abs() < 1e-12 || y == 0.0 || y == 1.0 {
        return y;
    }
    if r > 0.0 {
        // (1+r)^2 - 4ry written as a sum of non-negative terms; rationalised root has no cancellation
        let disc = (1.0 - r) * (1.0 - r) + 4.0 * r * (1.0 - y);
        2.0 * y / (1.0 + r + disc.sqrt())
    } else {
        1.0 - s_map(1.0 - y, -r)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DualMaps;

impl JumpMaps for DualMaps {
    fn neutral(&self, y: f64, r: f64, u: f64) -> f64 {
        m_map(y, r, u)
    }
    fn environmental(&self, y: f64, r: f64) -> f64 {
        s_map(y, r)
    }
}

fn check_start(y0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::InvalidParameter(format!("initial state {y0} outside [0,1]")));
    }
    Ok(())
}

pub fn simulate_y(
    params: &ModelParams,
    background: &RandomBackground,
    y0: f64,
    obs_times: &[f64],
    options: &SimOptions,
) -> Result<Trajectory> {
    check_start(y0)?;
    validate_obs_times(obs_times)?;
    let flow = DriftFlow::dual(params.sigma(), options.drift_step)?;
    let (samples, final_state) = record_path(&flow, DualMaps, background.events(), y0, obs_times, options.record_events)?;
    Ok(Trajectory { samples, final_state, meta: meta(background, &flow) })
}

pub fn observe_y(flow: &DriftFlow, background: &RandomBackground, y0: f64, obs_times: &[f64]) -> Result<Vec<f64>> {
    observe_path(flow, DualMaps, background.events(), y0, obs_times)
}

/// Y with every neutral event of size `r > c` removed.
pub fn simulate_y_capped(
    params: &ModelParams,
    background: &RandomBackground,
    y0: f64,
    c: f64,
    obs_times: &[f64],
    options: &SimOptions,
) -> Result<Trajectory> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("cap c = {c} must lie in (0,1)")));
    }
    simulate_y(params, &background.filtered(c, FilterSide::AtMost), y0, obs_times, options)
}

/// `sup_{s <= t} |Y^c_s - y0|` for the capped dual.
/// Between events the drift is monotone, so the supremum is attained at event times or at `t`.
pub fn capped_sup_deviation(flow: &DriftFlow, capped: &RandomBackground, y0: f64, t: f64) -> Result<f64> {
    let mut walker = PathWalker::new(flow, DualMaps, capped.events(), y0);
    let mut worst: f64 = 0.0;
    while let Some(step) = walker.next_event_before(t, None)? {
        worst = worst.max((step.pre - y0).abs()).max((step.post - y0).abs());
    }
    Ok(worst.max((walker.state() - y0).abs()))
}

/// Constant of the capped deviation bound `P(sup |Y^c - y| >= l) <= K sqrt(t) / l`, `t <= 1`:
/// `4 sqrt(Lambda(0,1)) + 4 Lambda(0,1) + ||sigma||_inf / 4 + int (|r|/(1-|r|) ^ 1) mu(dr)`.
pub fn capped_deviation_constant(params: &ModelParams) -> Result<f64> {
    let mass = params.lambda().total_mass()?;
    let sup_sigma: f64 = params.sigma().coefficients().iter().map(|a| a.abs()).sum();
    let env = params
        .mu()
        .integrate(|r| (r.abs() / (1.0 - r.abs())).min(1.0), Interval::open(-1.0, 1.0))?;
    Ok(4.0 * mass.sqrt() + 4.0 * mass + sup_sigma / 4.0 + env)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledPairOutcome {
    /// First event or drift time at which `|Y_hat - Y_check| <= MERGE_TOL`.
    pub merge_time: Option<f64>,
    pub final_states: (f64, f64),
    /// Largest `Y_hat - Y_check` seen; positive values break the monotone coupling.
    pub max_order_violation: f64,
}

/// Runs `Y_hat` from `y_hat <= y_check` and `Y_check` on one background until they merge or `horizon`.
pub fn simulate_coupled_pair(
    flow: &DriftFlow,
    background: &RandomBackground,
    y_hat: f64,
    y_check: f64,
    horizon: f64,
) -> Result<CoupledPairOutcome> {
    check_start(y_hat)?;
    check_start(y_check)?;
    if y_hat > y_check {
        return Err(Error::InvalidParameter(format!("coupled pair needs y_hat <= y_check, got {y_hat} > {y_check}")));
    }
    let mut walker = PairWalker::new(flow, DualMaps, background.events(), y_hat, y_check);
    let mut worst = y_hat - y_check;
    if (y_check - y_hat).abs() <= MERGE_TOL {
        return Ok(CoupledPairOutcome { merge_time: Some(0.0), final_states: (y_hat, y_check), max_order_violation: worst });
    }
    while let Some(t) = walker.next_event_before(horizon)? {
        let (a, b) = walker.states();
        worst = worst.max(a - b);
        if (a - b).abs() <= MERGE_TOL {
            return Ok(CoupledPairOutcome { merge_time: Some(t), final_states: (a, b), max_order_violation: worst });
        }
    }
    let (a, b) = walker.states();
    worst = worst.max(a - b);
    let merge_time = if (a - b).abs() <= MERGE_TOL { Some(horizon) } else { None };
    Ok(CoupledPairOutcome { merge_time, final_states: (a, b), max_order_violation: worst })
}

/// Regeneration rule: the first neutral event with `Y_{T-}` in `[a - kappa/2, a + kappa/2]`,
/// `R_T > theta` and `U_T` in `[a - eta/2, a + eta/2]`. At such an event `Y_T = U_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalWindow {
    pub center: f64,
    pub kappa: f64,
    pub eta: f64,
    pub theta: f64,
}

impl RenewalWindow {
    /// Symmetric window around 1/2: `theta = (kappa + eta) / (1 + eta)`.
    pub fn symmetric(params: &ModelParams, kappa: f64, eta: f64) -> Result<Self> {
        Self::centered(params, 0.5, kappa, eta)
    }

    /// Window around `a`. For `a > 1/2` the rule is applied to `1 - Y`, i.e. with `1 - a` in
    /// the formulas for `theta` and the admissible `kappa`; otherwise the median would not
    /// collapse onto `U_T` on the whole window.
    pub fn centered(params: &ModelParams, a: f64, kappa: f64, eta: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("renewal centre a = {a} must lie in (0,1)")));
        }
        let near = a.min(1.0 - a);
        let max_supp = params.lambda().max_supp();
        let kappa_max = (2.0 * near * max_supp).min(4.0 * near * near * (1.0 / near - 1.0));
        if !(kappa > 0.0 && kappa < kappa_max) {
            return Err(Error::InvalidParameter(format!(
                "kappa = {kappa} must lie in (0, {kappa_max}) for centre {a} and max supp Lambda = {max_supp}"
            )));
        }
        if !(eta > 0.0 && eta <= 2.0 * near) {
            return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, {}]", 2.0 * near)));
        }
        let theta = (eta + kappa) / (2.0 * near + eta);
        if !(theta < max_supp) {
            return Err(Error::InvalidParameter(format!(
                "threshold theta = {theta} is not below max supp Lambda = {max_supp}; renewals would never occur"
            )));
        }
        Ok(RenewalWindow { center: a, kappa, eta, theta })
    }

    pub fn state_window(&self) -> (f64, f64) {
        (self.center - 0.5 * self.kappa, self.center + 0.5 * self.kappa)
    }

    pub fn uniform_window(&self) -> (f64, f64) {
        (self.center - 0.5 * self.eta, self.center + 0.5 * self.eta)
    }

    pub fn qualifies(&self, step: &EventStep) -> bool {
        match step.jump {
            Jump::Neutral { r, u } => {
                let (ylo, yhi) = self.state_window();
                let (ulo, uhi) = self.uniform_window();
                step.pre >= ylo && step.pre <= yhi && r > self.theta && r < 1.0 && u >= ulo && u <= uhi
            }
            Jump::Environmental { .. } => false,
        }
    }

    /// Rate of neutral events with `R > theta` and `U` in the window: an upper bound on the renewal rate.
    pub fn qualifying_rate(&self, background: &RandomBackground) -> f64 {
        background.filtered(self.theta, FilterSide::Above).filtered_neutral_rate() * self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalOutcome {
    pub time: f64,
    pub state: f64,
    pub pre_state: f64,
}

/// Search horizon for a renewal: starts at `initial` and doubles up to `max_doublings` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalHorizon {
    pub initial: f64,
    pub max_doublings: u32,
}

impl RenewalHorizon {
    pub fn fixed(horizon: f64) -> Self {
        RenewalHorizon { initial: horizon, max_doublings: 0 }
    }

    /// `10 / qualifying rate`, with back-off.
    pub fn default_for(window: &RenewalWindow, background: &RandomBackground) -> Self {
        let rate = window.qualifying_rate(background);
        let initial = if rate > 0.0 { 10.0 / rate } else { f64::INFINITY };
        RenewalHorizon { initial, max_doublings: 12 }
    }

    pub fn limit(&self) -> f64 {
        self.initial * 2f64.powi(self.max_doublings as i32)
    }
}

/// Walks Y from `y0` until the first renewal, accumulating occupation times if requested.
/// Continuing past each horizon is equivalent to restarting with a longer one, because the
/// background is deterministic.
pub fn run_to_renewal(
    flow: &DriftFlow,
    window: &RenewalWindow,
    background: &RandomBackground,
    y0: f64,
    horizon: RenewalHorizon,
    mut occupation: Option<&mut Occupation>,
) -> Result<RenewalOutcome> {
    check_start(y0)?;
    let mut walker = PathWalker::new(flow, DualMaps, background.events(), y0);
    let limit = horizon.limit();
    if !limit.is_finite() {
        return Err(Error::HorizonExceeded { horizon: limit });
    }
    while let Some(step) = walker.next_event_before(limit, occupation.as_deref_mut())? {
        if window.qualifies(&step) {
            return Ok(RenewalOutcome { time: step.time, state: step.post, pre_state: step.pre });
        }
    }
    Err(Error::HorizonExceeded { horizon: limit })
}

/// First renewal time of Y around 1/2 and the state there.
pub fn detect_renewal(
    params: &ModelParams,
    background: &RandomBackground,
    y0: f64,
    kappa: f64,
    eta: f64,
    horizon: Option<f64>,
) -> Result<RenewalOutcome> {
    detect_renewal_general(params, background, y0, 0.5, kappa, eta, horizon)
}

/// As [`detect_renewal`] with the window centred at `a`.
pub fn detect_renewal_general(
    params: &ModelParams,
    background: &RandomBackground,
    y0: f64,
    a: f64,
    kappa: f64,
    eta: f64,
    horizon: Option<f64>,
) -> Result<RenewalOutcome> {
    let window = RenewalWindow::centered(params, a, kappa, eta)?;
    let flow = DriftFlow::dual(params.sigma(), None)?;
    let horizon = match horizon {
        Some(h) => RenewalHorizon::fixed(h),
        None => RenewalHorizon::default_for(&window, background),
    };
    run_to_renewal(&flow, &window, background, y0, horizon, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_map_example() {
        assert!((m_map(0.4, 0.5, 0.3) - 0.3).abs() < 1e-15);
        assert_eq!(m_map(0.0, 0.5, 0.3), 0.0);
        assert_eq!(m_map(1.0, 0.5, 0.3), 1.0);
    }

    #[test]
    fn s_map_example() {
        let s = s_map(0.5, 0.5);
        assert!((s - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert_eq!(s_map(0.37, 1e-13), 0.37);
    }

    #[test]
    fn s_map_inverts_env_step() {
        for &r in &[-0.9, -0.5, -1e-7, 1e-7, 0.3, 0.99] {
            for k in 0..=20 {
                let y = k as f64 / 20.0;
                let s = s_map(y, r);
                assert!((0.0..=1.0).contains(&s));
                assert!((s + r * s * (1.0 - s) - y).abs() < 1e-12, "r={r} y={y}");
            }
        }
    }
}
