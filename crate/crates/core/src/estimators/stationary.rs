use serde::Serialize;

use super::fixation::{ratio_curve, renewal_cycles};
use super::{domains, require_reps};
use crate::dual_process::{DualMaps, RenewalWindow};
use crate::error::{Error, Result};
use crate::flow::{DriftFlow, Occupation, PathWalker};
use crate::measure_spec::ModelParams;
use crate::random_background::RandomBackground;
use crate::stats::{replicate, EstimateWithCI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StationaryMethod {
    /// Renewal-reward ratio over regenerative cycles around 1/2.
    Renewal { kappa: f64, eta: f64, cycles: u64 },
    /// Time average over `[burn_in, burn_in + window]` of `reps` independent paths from `y0`.
    Ergodic { y0: f64, burn_in: f64, window: f64, reps: u64 },
}

/// Estimates of `P(Y_inf <= x)` on the sorted `x_grid`.
pub fn estimate_stationary_y(
    params: &ModelParams,
    background: &RandomBackground,
    x_grid: &[f64],
    method: StationaryMethod,
) -> Result<Vec<EstimateWithCI>> {
    let mut grid = x_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    match method {
        StationaryMethod::Renewal { kappa, eta, cycles } => {
            require_reps(cycles)?;
            let window = RenewalWindow::symmetric(params, kappa, eta)?;
            let data = renewal_cycles(params, background, &grid, &window, cycles, None)?;
            Ok(ratio_curve(&grid, &data, "stationary renewal").0)
        }
        StationaryMethod::Ergodic { y0, burn_in, window, reps } => {
            require_reps(reps)?;
            if !(burn_in >= 0.0 && window > 0.0) {
                return Err(Error::InvalidParameter("burn-in must be non-negative and the window positive".into()));
            }
            let flow = DriftFlow::dual(params.sigma(), None)?;
            let fractions = replicate(reps, |k| {
                let bg = background.replica(domains::ERGODIC + (y0 * 1e6).round() as u64, k);
                let mut walker = PathWalker::new(&flow, DualMaps, bg.events(), y0);
                walker.advance_to(burn_in, None)?;
                let mut occ = Occupation::new(&grid);
                walker.advance_to(burn_in + window, Some(&mut occ))?;
                Ok(occ.values().into_iter().map(|v| v / window).collect::<Vec<f64>>())
            })?;
            Ok((0..grid.len())
                .map(|k| {
                    let col: Vec<f64> = fractions.iter().map(|f| f[k]).collect();
                    EstimateWithCI::from_samples(&col, "stationary ergodic")
                })
                .collect())
        }
    }
}
