use serde::Serialize;

use super::{domains, regime_of, require_reps};
use crate::dual_process::{run_to_renewal, RenewalHorizon, RenewalWindow};
use crate::error::{Error, Result};
use crate::flow::{DriftFlow, Occupation};
use crate::forward_process::observe_x;
use crate::measure_spec::{ModelParams, Regime};
use crate::random_background::{open01, RandomBackground};
use crate::stats::{replicate, EstimateWithCI};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixationCurve {
    pub x_grid: Vec<f64>,
    /// `h(x) = P_x(X_t -> 1)`, equal to the stationary probability of `[0, x]` for Y.
    pub h: Vec<EstimateWithCI>,
    pub mean_cycle_length: EstimateWithCI,
    pub window: RenewalWindow,
}

pub(crate) struct CycleData {
    pub occupation: Vec<f64>,
    pub length: f64,
}

/// Regenerative cycles of Y: each starts uniform on the renewal window and ends at the next renewal.
pub(crate) fn renewal_cycles(
    params: &ModelParams,
    background: &RandomBackground,
    grid: &[f64],
    window: &RenewalWindow,
    cycles: u64,
    horizon: Option<RenewalHorizon>,
) -> Result<Vec<CycleData>> {
    let flow = DriftFlow::dual(params.sigma(), None)?;
    let horizon = horizon.unwrap_or_else(|| RenewalHorizon::default_for(window, background));
    let (ulo, uhi) = window.uniform_window();
    replicate(cycles, |k| {
        let bg = background.replica(domains::RENEWAL, k);
        let v = ulo + (uhi - ulo) * open01(&mut bg.aux_rng());
        let mut occ = Occupation::new(grid);
        let out = run_to_renewal(&flow, window, &bg, v, horizon, Some(&mut occ))?;
        Ok(CycleData { occupation: occ.values(), length: out.time })
    })
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidParameter("grid points must lie in [0,1]".into()));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    Ok(g)
}

pub(crate) fn ratio_curve(grid: &[f64], data: &[CycleData], method: &str) -> (Vec<EstimateWithCI>, EstimateWithCI) {
    let lengths: Vec<f64> = data.iter().map(|c| c.length).collect();
    let h = (0..grid.len())
        .map(|k| {
            let num: Vec<f64> = data.iter().map(|c| c.occupation[k]).collect();
            EstimateWithCI::ratio(&num, &lengths, method)
        })
        .collect();
    (h, EstimateWithCI::from_samples(&lengths, "mean cycle length"))
}

/// Renewal-reward estimate of the fixation probability on `x_grid` (sorted on output).
pub fn estimate_fixation_renewal(
    params: &ModelParams,
    background: &RandomBackground,
    x_grid: &[f64],
    kappa: f64,
    eta: f64,
    cycles: u64,
    horizon: Option<RenewalHorizon>,
) -> Result<FixationCurve> {
    require_reps(cycles)?;
    let regime = regime_of(params)?;
    if regime != Regime::Theta2 {
        return Err(Error::WrongRegime { expected: Regime::Theta2.to_string(), found: regime.to_string() });
    }
    let grid = sorted_grid(x_grid)?;
    let window = RenewalWindow::symmetric(params, kappa, eta)?;
    let data = renewal_cycles(params, background, &grid, &window, cycles, horizon)?;
    let (h, mean_cycle_length) = ratio_curve(&grid, &data, "renewal ratio");
    Ok(FixationCurve { x_grid: grid, h, mean_cycle_length, window })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectFixation {
    pub x: f64,
    pub t_final: f64,
    /// `X_t >= 1 - eps_fix`.
    pub fixed_one: EstimateWithCI,
    /// `X_t <= eps_fix`.
    pub fixed_zero: EstimateWithCI,
    pub undecided: EstimateWithCI,
}

/// Forward simulation to `t_final`, classifying each path by how close it is to a boundary.
pub fn estimate_fixation_direct(
    params: &ModelParams,
    background: &RandomBackground,
    x: f64,
    t_final: f64,
    eps_fix: f64,
    reps: u64,
) -> Result<DirectFixation> {
    require_reps(reps)?;
    if !(eps_fix > 0.0 && eps_fix < 0.5) {
        return Err(Error::InvalidParameter(format!("eps_fix = {eps_fix} must lie in (0, 1/2)")));
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("t_final = {t_final} must be positive")));
    }
    let flow = DriftFlow::forward(params.sigma(), None)?;
    let sub = (x * 1e6).round() as u64;
    let finals = replicate(reps, |k| Ok(observe_x(&flow, &background.replica(domains::DIRECT + sub, k), x, &[t_final])?[0]))?;
    let one = finals.iter().filter(|&&v| v >= 1.0 - eps_fix).count() as u64;
    let zero = finals.iter().filter(|&&v| v <= eps_fix).count() as u64;
    Ok(DirectFixation {
        x,
        t_final,
        fixed_one: EstimateWithCI::from_bernoulli(one, reps, "direct fixed at 1"),
        fixed_zero: EstimateWithCI::from_bernoulli(zero, reps, "direct fixed at 0"),
        undecided: EstimateWithCI::from_bernoulli(reps - one - zero, reps, "direct undecided"),
    })
}
