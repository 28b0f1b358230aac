use serde::Serialize;

use super::{domains, require_reps};
use crate::dual_process::observe_y;
use crate::error::{Error, Result};
use crate::flow::DriftFlow;
use crate::forward_process::{observe_x, simulate_x_pair};
use crate::measure_spec::ModelParams;
use crate::random_background::RandomBackground;
use crate::stats::{replicate, z_score, EstimateWithCI};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityCell {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    /// `P_x(X_t >= y)`.
    pub p_forward: EstimateWithCI,
    /// `P_y(x >= Y_t)`.
    pub p_dual: EstimateWithCI,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub cells: Vec<DualityCell>,
    pub max_abs_z: f64,
    pub over_3: usize,
    pub over_5: usize,
}

fn sorted_times(ts: &[f64]) -> Result<Vec<f64>> {
    if ts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("times must be finite and non-negative".into()));
    }
    let mut v = ts.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Compares both sides of the Siegmund duality on the grid `xs x ys x ts`, with `reps`
/// independent paths per starting point and side. Forward paths from one `x` are shared across
/// `y` and `t`, and likewise for dual paths.
pub fn check_duality(
    params: &ModelParams,
    background: &RandomBackground,
    xs: &[f64],
    ys: &[f64],
    ts: &[f64],
    reps: u64,
    drift_step: Option<f64>,
) -> Result<DualityReport> {
    require_reps(reps)?;
    let ts = sorted_times(ts)?;
    let fwd = DriftFlow::forward(params.sigma(), drift_step)?;
    let dual = DriftFlow::dual(params.sigma(), drift_step)?;
    let forward_paths: Vec<Vec<Vec<f64>>> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| replicate(reps, |k| observe_x(&fwd, &background.replica(domains::DUALITY_X + i as u64, k), x, &ts)))
        .collect::<Result<_>>()?;
    let dual_paths: Vec<Vec<Vec<f64>>> = ys
        .iter()
        .enumerate()
        .map(|(j, &y)| replicate(reps, |k| observe_y(&dual, &background.replica(domains::DUALITY_Y + j as u64, k), y, &ts)))
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            for (l, &t) in ts.iter().enumerate() {
                let hits_f = forward_paths[i].iter().filter(|p| p[l] >= y).count() as u64;
                let hits_d = dual_paths[j].iter().filter(|p| x >= p[l]).count() as u64;
                let p_forward = EstimateWithCI::from_bernoulli(hits_f, reps, "forward");
                let p_dual = EstimateWithCI::from_bernoulli(hits_d, reps, "dual");
                let z = z_score(&p_forward, &p_dual);
                cells.push(DualityCell { x, y, t, p_forward, p_dual, z });
            }
        }
    }
    let max_abs_z = cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    let over_3 = cells.iter().filter(|c| c.z.abs() > 3.0).count();
    let over_5 = cells.iter().filter(|c| c.z.abs() > 5.0).count();
    Ok(DualityReport { cells, max_abs_z, over_3, over_5 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoTrajectoryReport {
    pub x_hat: f64,
    pub x_check: f64,
    pub y: f64,
    pub t: f64,
    /// `P(X_hat_t < y <= X_check_t)`, both forward paths on one background.
    pub forward: EstimateWithCI,
    /// `P_y(x_hat < Y_t <= x_check)`.
    pub dual: EstimateWithCI,
    pub z: f64,
}

pub fn check_two_trajectory_duality(
    params: &ModelParams,
    background: &RandomBackground,
    x_hat: f64,
    x_check: f64,
    y: f64,
    t: f64,
    reps: u64,
) -> Result<TwoTrajectoryReport> {
    require_reps(reps)?;
    if x_hat > x_check {
        return Err(Error::InvalidParameter(format!("x_hat = {x_hat} must not exceed x_check = {x_check}")));
    }
    let fwd = DriftFlow::forward(params.sigma(), None)?;
    let dual = DriftFlow::dual(params.sigma(), None)?;
    let left = replicate(reps, |k| {
        let (obs, _) = simulate_x_pair(&fwd, &background.replica(domains::PAIR_X, k), x_hat, x_check, &[t])?;
        let (a, b) = obs[0];
        Ok(a < y && y <= b)
    })?;
    let right = replicate(reps, |k| {
        let v = observe_y(&dual, &background.replica(domains::PAIR_Y, k), y, &[t])?[0];
        Ok(x_hat < v && v <= x_check)
    })?;
    let forward = EstimateWithCI::from_bernoulli(left.iter().filter(|&&b| b).count() as u64, reps, "two-trajectory forward");
    let dual_est = EstimateWithCI::from_bernoulli(right.iter().filter(|&&b| b).count() as u64, reps, "two-trajectory dual");
    let z = z_score(&forward, &dual_est);
    Ok(TwoTrajectoryReport { x_hat, x_check, y, t, forward, dual: dual_est, z })
}
