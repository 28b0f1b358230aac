use serde::Serialize;

use super::{domains, regime_of, require_reps};
use crate::dual_process::{observe_y, simulate_coupled_pair, DualMaps};
use crate::error::{Error, Result};
use crate::flow::{observe_pair, DriftFlow};
use crate::forward_process::{observe_x, ForwardMaps};
use crate::levy_bounds::tail_fits;
use crate::measure_spec::{ModelParams, Regime};
use crate::random_background::RandomBackground;
use crate::stats::{replicate, EstimateWithCI, LinearFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BandShape {
    /// Threshold `e^{-rho t}`.
    Exponential,
    /// Threshold `t^{-rho}`.
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayMode {
    /// `P(X_t in [e^{-rho t}, 1 - e^{-rho t}])` for both boundaries accessible.
    Theta2,
    /// `P(X_t` farther than the threshold from the boundary it converges to`)`.
    Theta01 { shape: BandShape },
    /// `P(Y_t in [e^{-rho t}, 1 - e^{-rho t}])` under coexistence.
    Theta3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub quantity: String,
    pub t_grid: Vec<f64>,
    pub p: Vec<EstimateWithCI>,
    pub exponential_fit: Option<LinearFit>,
    pub polynomial_fit: Option<LinearFit>,
    /// Grid points with a positive estimate, the only ones entering the fits.
    pub points_used: usize,
}

fn fit(quantity: &str, t_grid: &[f64], p: Vec<EstimateWithCI>) -> DecayFit {
    let (exponential_fit, polynomial_fit) = tail_fits(t_grid, &p);
    let points_used = t_grid.iter().zip(&p).filter(|(t, e)| **t > 0.0 && e.point > 0.0).count();
    DecayFit { quantity: quantity.to_string(), t_grid: t_grid.to_vec(), p, exponential_fit, polynomial_fit, points_used }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be non-empty, positive and increasing".into()));
    }
    Ok(())
}

/// Estimates the decay of the probability that the process is still far from its limit.
pub fn decay_rate_experiment(
    params: &ModelParams,
    background: &RandomBackground,
    x0: f64,
    rho: f64,
    t_grid: &[f64],
    reps: u64,
    mode: DecayMode,
) -> Result<DecayFit> {
    require_reps(reps)?;
    check_grid(t_grid)?;
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    let regime = regime_of(params)?;
    let wrong = |expected: &str| Error::WrongRegime { expected: expected.to_string(), found: regime.to_string() };
    let shape = match mode {
        DecayMode::Theta01 { shape } => shape,
        _ => BandShape::Exponential,
    };
    let threshold = |t: f64| match shape {
        BandShape::Exponential => (-rho * t).exp(),
        BandShape::Polynomial => t.powf(-rho),
    };
    if let Some(t) = t_grid.iter().find(|&&t| threshold(t) >= 0.5) {
        return Err(Error::Precondition(format!("threshold at t = {t} is {} >= 1/2; the band is empty", threshold(*t))));
    }
    let sub = (x0 * 1e6).round() as u64;
    let bg = |k: u64| background.replica(domains::DECAY + sub, k);
    match mode {
        DecayMode::Theta2 => {
            if regime != Regime::Theta2 {
                return Err(wrong("Theta2"));
            }
            let flow = DriftFlow::forward(params.sigma(), None)?;
            let paths = replicate(reps, |k| observe_x(&flow, &bg(k), x0, t_grid))?;
            let p = band_probability(&paths, t_grid, |t, v| v >= threshold(t) && v <= 1.0 - threshold(t), reps, "X undecided");
            Ok(fit("P(X_t in [e^{-rho t}, 1 - e^{-rho t}])", t_grid, p))
        }
        DecayMode::Theta01 { .. } => {
            let toward_zero = match regime {
                Regime::Theta0 => true,
                Regime::Theta1 => false,
                _ => return Err(wrong("Theta0 or Theta1")),
            };
            let flow = DriftFlow::forward(params.sigma(), None)?;
            let paths = replicate(reps, |k| observe_x(&flow, &bg(k), x0, t_grid))?;
            let p = band_probability(
                &paths,
                t_grid,
                |t, v| if toward_zero { v > threshold(t) } else { v < 1.0 - threshold(t) },
                reps,
                "X away from limit",
            );
            Ok(fit("P(X_t away from its limiting boundary)", t_grid, p))
        }
        DecayMode::Theta3 => {
            if regime != Regime::Theta3 {
                return Err(wrong("Theta3"));
            }
            let flow = DriftFlow::dual(params.sigma(), None)?;
            let paths = replicate(reps, |k| observe_y(&flow, &bg(k), x0, t_grid))?;
            let p = band_probability(&paths, t_grid, |t, v| v >= threshold(t) && v <= 1.0 - threshold(t), reps, "Y undecided");
            Ok(fit("P(Y_t in [e^{-rho t}, 1 - e^{-rho t}])", t_grid, p))
        }
    }
}

fn band_probability(
    paths: &[Vec<f64>],
    t_grid: &[f64],
    inside: impl Fn(f64, f64) -> bool,
    reps: u64,
    method: &str,
) -> Vec<EstimateWithCI> {
    t_grid
        .iter()
        .enumerate()
        .map(|(l, &t)| {
            let c = paths.iter().filter(|p| inside(t, p[l])).count() as u64;
            EstimateWithCI::from_bernoulli(c, reps, method)
        })
        .collect()
}

/// `P(Y_hat_t != Y_check_t)` for the coupled dual pair.
pub fn merge_decay(
    params: &ModelParams,
    background: &RandomBackground,
    y_hat: f64,
    y_check: f64,
    t_grid: &[f64],
    reps: u64,
) -> Result<DecayFit> {
    require_reps(reps)?;
    check_grid(t_grid)?;
    let flow = DriftFlow::dual(params.sigma(), None)?;
    let horizon = *t_grid.last().expect("non-empty grid");
    let merges = replicate(reps, |k| {
        Ok(simulate_coupled_pair(&flow, &background.replica(domains::MERGE, k), y_hat, y_check, horizon)?.merge_time)
    })?;
    let p = t_grid
        .iter()
        .map(|&t| {
            let c = merges.iter().filter(|m| m.is_none_or(|s| s > t)).count() as u64;
            EstimateWithCI::from_bernoulli(c, reps, "not merged")
        })
        .collect();
    Ok(fit("P(Y_hat_t != Y_check_t)", t_grid, p))
}

/// `P_x0(X_t > level)` on `t_grid`.
pub fn fraction_above(
    params: &ModelParams,
    background: &RandomBackground,
    x0: f64,
    level: f64,
    t_grid: &[f64],
    reps: u64,
) -> Result<Vec<EstimateWithCI>> {
    require_reps(reps)?;
    check_grid(t_grid)?;
    let flow = DriftFlow::forward(params.sigma(), None)?;
    let paths = replicate(reps, |k| observe_x(&flow, &background.replica(domains::EXCEED, k), x0, t_grid))?;
    Ok(band_probability(&paths, t_grid, |_, v| v > level, reps, "above level"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CouplingProcess {
    Forward,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingCheck {
    pub pairs: u64,
    /// Pairs where the lower path exceeded the upper one by more than `1e-12` at some event.
    pub violations: u64,
    pub max_violation: f64,
}

/// Runs `reps` pairs from `low <= high` on shared backgrounds up to `horizon` and counts
/// ordering violations at every event.
pub fn monotone_coupling_check(
    params: &ModelParams,
    background: &RandomBackground,
    low: f64,
    high: f64,
    horizon: f64,
    reps: u64,
    process: CouplingProcess,
) -> Result<CouplingCheck> {
    require_reps(reps)?;
    if low > high {
        return Err(Error::InvalidParameter(format!("low = {low} exceeds high = {high}")));
    }
    let tag = match process {
        CouplingProcess::Forward => 0,
        CouplingProcess::Dual => 1,
    };
    let flow = match process {
        CouplingProcess::Forward => DriftFlow::forward(params.sigma(), None)?,
        CouplingProcess::Dual => DriftFlow::dual(params.sigma(), None)?,
    };
    let worst = replicate(reps, |k| {
        let bg = background.replica(domains::COUPLING + tag, k);
        let (_, w) = match process {
            CouplingProcess::Forward => observe_pair(&flow, ForwardMaps, bg.events(), low, high, &[horizon])?,
            CouplingProcess::Dual => observe_pair(&flow, DualMaps, bg.events(), low, high, &[horizon])?,
        };
        Ok(w)
    })?;
    Ok(CouplingCheck {
        pairs: reps,
        violations: worst.iter().filter(|&&w| w > 1e-12).count() as u64,
        max_violation: worst.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
