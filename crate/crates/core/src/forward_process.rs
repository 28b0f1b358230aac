//! The forward process X on a fixed random background.

use crate::error::Result;
use crate::flow::{observe_pair, observe_path, record_path, DriftFlow, JumpMaps};
use crate::measure_spec::{ModelParams, SelectionFn};
use crate::random_background::RandomBackground;
use crate::trajectory::{validate_obs_times, SimOptions, Trajectory, TrajectoryMeta};

/// Neutral reproduction event: `(1 - r) x + r 1{u <= x}`.
pub fn step_x_neutral(x: f64, r: f64, u: f64) -> f64 {
    // written so that 0 and 1 are fixed exactly in floating point
    if u <= x {
        x + r * (1.0 - x)
    } else {
        x - r * x
    }
}

/// Environmental event: `x + r x (1 - x)`.
pub fn step_x_env(x: f64, r: f64) -> f64 {
    x + r * x * (1.0 - x)
}

/// Solves `x' = x (1 - x) sigma(x)` for time `dt` with RK4 sub-steps of at most `h`.
pub fn drift_flow_x(sigma: &SelectionFn, x: f64, dt: f64, h: f64) -> Result<f64> {
    DriftFlow::forward(sigma, Some(h))?.advance(x, dt)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardMaps;

impl JumpMaps for ForwardMaps {
    fn neutral(&self, x: f64, r: f64, u: f64) -> f64 {
        step_x_neutral(x, r, u)
    }
    fn environmental(&self, x: f64, r: f64) -> f64 {
        step_x_env(x, r)
    }
}

pub(crate) fn meta(bg: &RandomBackground, flow: &DriftFlow) -> TrajectoryMeta {
    TrajectoryMeta {
        seed: bg.seed(),
        domain: bg.domain(),
        index: bg.index(),
        eps_neutral: bg.config().eps_neutral,
        eps_env: bg.config().eps_env,
        drift_step: flow.step(),
    }
}

fn check_start(x0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(crate::Error::InvalidParameter(format!("initial state {x0} outside [0,1]")));
    }
    Ok(())
}

/// Path of X from `x0`, observed at `obs_times` (and at every event if requested).
pub fn simulate_x(
    params: &ModelParams,
    background: &RandomBackground,
    x0: f64,
    obs_times: &[f64],
    options: &SimOptions,
) -> Result<Trajectory> {
    check_start(x0)?;
    validate_obs_times(obs_times)?;
    let flow = DriftFlow::forward(params.sigma(), options.drift_step)?;
    let (samples, final_state) = record_path(&flow, ForwardMaps, background.events(), x0, obs_times, options.record_events)?;
    Ok(Trajectory { samples, final_state, meta: meta(background, &flow) })
}

/// States of X at `obs_times` only. The flow is built by the caller so it can be reused.
pub fn observe_x(flow: &DriftFlow, background: &RandomBackground, x0: f64, obs_times: &[f64]) -> Result<Vec<f64>> {
    observe_path(flow, ForwardMaps, background.events(), x0, obs_times)
}

/// Two copies of X from `x_low <= x_high` on the same background. Returns the pair at each
/// observation time and the largest `X_low - X_high` seen at any event or observation.
pub fn simulate_x_pair(
    flow: &DriftFlow,
    background: &RandomBackground,
    x_low: f64,
    x_high: f64,
    obs_times: &[f64],
) -> Result<(Vec<(f64, f64)>, f64)> {
    check_start(x_low)?;
    check_start(x_high)?;
    validate_obs_times(obs_times)?;
    observe_pair(flow, ForwardMaps, background.events(), x_low, x_high, obs_times)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_step_examples() {
        assert!((step_x_neutral(0.4, 0.5, 0.3) - 0.7).abs() < 1e-15);
        assert!((step_x_neutral(0.4, 0.5, 0.6) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn env_step_examples() {
        assert!((step_x_env(0.5, 0.5) - 0.625).abs() < 1e-15);
        assert!((step_x_env(0.5, -0.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn boundaries_absorb() {
        for &(r, u) in &[(0.3, 0.1), (0.9, 0.99)] {
            assert_eq!(step_x_neutral(0.0, r, u), 0.0);
            assert_eq!(step_x_neutral(1.0, r, u), 1.0);
        }
        assert_eq!(step_x_env(0.0, 0.7), 0.0);
        assert_eq!(step_x_env(1.0, -0.7), 1.0);
    }
}
