//! Monte Carlo estimators: duality checks, fixation probabilities, stationary laws and
//! decay rates. Replica `i` of an experiment always uses background stream `(domain, i)`,
//! and results are reduced in index order, so outputs do not depend on the thread count.

mod decay;
mod duality;
mod fixation;
mod stationary;

pub use decay::{
    decay_rate_experiment, fraction_above, merge_decay, monotone_coupling_check, BandShape, CouplingCheck,
    CouplingProcess, DecayFit, DecayMode,
};
pub use duality::{check_duality, check_two_trajectory_duality, DualityCell, DualityReport, TwoTrajectoryReport};
pub use fixation::{estimate_fixation_direct, estimate_fixation_renewal, DirectFixation, FixationCurve};
pub use stationary::{estimate_stationary_y, StationaryMethod};

pub use crate::stats::EstimateWithCI;

use crate::error::{Error, Result};
use crate::measure_spec::{integrability_report, ModelParams, Regime};

/// Background namespaces, one per experiment family.
pub(crate) mod domains {
    pub const DUALITY_X: u64 = 1 << 32;
    pub const DUALITY_Y: u64 = 2 << 32;
    pub const PAIR_X: u64 = 3 << 32;
    pub const PAIR_Y: u64 = 4 << 32;
    pub const RENEWAL: u64 = 5 << 32;
    pub const DIRECT: u64 = 6 << 32;
    pub const ERGODIC: u64 = 8 << 32;
    pub const DECAY: u64 = 9 << 32;
    pub const MERGE: u64 = 10 << 32;
    pub const COUPLING: u64 = 11 << 32;
    pub const EXCEED: u64 = 13 << 32;
}

pub(crate) fn regime_of(params: &ModelParams) -> Result<Regime> {
    Ok(integrability_report(params, 1.0)?.regime)
}

pub(crate) fn require_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    Ok(())
}
