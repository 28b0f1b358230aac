use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Observation,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub state: f64,
    pub kind: SampleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub domain: u64,
    pub index: u64,
    pub eps_neutral: f64,
    pub eps_env: f64,
    pub drift_step: f64,
}

/// Samples of a right-continuous path, in time order. Event samples hold post-jump states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn observations(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.kind == SampleKind::Observation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    /// RK4 sub-step; `None` uses the default for the selection function.
    pub drift_step: Option<f64>,
    /// Also record the state after every event.
    pub record_events: bool,
}

pub(crate) fn validate_obs_times(obs: &[f64]) -> crate::Result<()> {
    if obs.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(crate::Error::InvalidParameter("observation times must be finite and non-negative".into()));
    }
    if obs.windows(2).any(|w| w[1] < w[0]) {
        return Err(crate::Error::InvalidParameter("observation times must be sorted".into()));
    }
    Ok(())
}
