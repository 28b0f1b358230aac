//! Piecewise-deterministic evolution shared by the forward and dual processes:
//! deterministic drift between events, instantaneous jumps at events.

use std::iter::Peekable;

use crate::error::{Error, Result};
use crate::measure_spec::SelectionFn;
use crate::random_background::{EventStream, Jump, JumpEvent};

const OVERSHOOT_TOL: f64 = 1e-12;

/// Drift `sign * x (1 - x) sigma(x)` integrated by classical RK4 with sub-steps at most `step`.
#[derive(Debug, Clone)]
pub struct DriftFlow {
    sigma: SelectionFn,
    sign: f64,
    step: f64,
}

/// Default sub-step `min(1e-2, 0.1 / (1 + ||sigma||_C1))`.
pub fn default_drift_step(sigma: &SelectionFn) -> f64 {
    (0.1 / (1.0 + sigma.c1_bound())).min(1e-2)
}

impl DriftFlow {
    /// Drift of the forward process, `x (1 - x) sigma(x)`.
    pub fn forward(sigma: &SelectionFn, step: Option<f64>) -> Result<Self> {
        Self::build(sigma, 1.0, step)
    }

    /// Drift of the dual process, `-y (1 - y) sigma(y)`.
    pub fn dual(sigma: &SelectionFn, step: Option<f64>) -> Result<Self> {
        Self::build(sigma, -1.0, step)
    }

    fn build(sigma: &SelectionFn, sign: f64, step: Option<f64>) -> Result<Self> {
        let step = step.unwrap_or_else(|| default_drift_step(sigma));
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("drift step {step} must be positive")));
        }
        Ok(DriftFlow { sigma: sigma.clone(), sign, step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.is_zero()
    }

    pub fn rate(&self, x: f64) -> f64 {
        self.sign * x * (1.0 - x) * self.sigma.eval(x)
    }

    fn rk4(&self, x: f64, h: f64) -> f64 {
        let k1 = self.rate(x);
        let k2 = self.rate(x + 0.5 * h * k1);
        let k3 = self.rate(x + 0.5 * h * k2);
        let k4 = self.rate(x + h * k3);
        x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    fn substeps(&self, dt: f64) -> (usize, f64) {
        let n = (dt / self.step).ceil().max(1.0) as usize;
        (n, dt / n as f64)
    }

    /// Flow of the drift for time `dt` starting from `x`.
    pub fn advance(&self, x: f64, dt: f64) -> Result<f64> {
        self.advance_with(x, dt, |_, _, _| {})
    }

    /// As [`advance`](Self::advance), reporting every sub-step `(x_start, x_end, h)`.
    pub fn advance_with(&self, x: f64, dt: f64, mut on_substep: impl FnMut(f64, f64, f64)) -> Result<f64> {
        if dt <= 0.0 || self.is_zero() || x == 0.0 || x == 1.0 {
            if dt > 0.0 {
                on_substep(x, x, dt);
            }
            return Ok(x);
        }
        let (n, h) = self.substeps(dt);
        let mut x = x;
        for _ in 0..n {
            let next = check_unit(self.rk4(x, h))?;
            on_substep(x, next, h);
            x = next;
        }
        Ok(x)
    }

    /// Time within a sub-step of length `h` from `x0` at which the flow passes `level`.
    /// `level` must lie between `x0` and `rk4(x0, h)`.
    pub fn crossing_time(&self, x0: f64, h: f64, level: f64) -> f64 {
        let increasing = self.rate(x0) >= 0.0;
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let v = self.rk4(x0, mid);
            let before = if increasing { v < level } else { v > level };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * h.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn check_unit(x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else if x > -OVERSHOOT_TOL && x < 1.0 + OVERSHOOT_TOL {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(Error::Consistency(format!("drift integration left [0,1]: state {x}")))
    }
}

/// Jump maps of a process driven by the background.
pub trait JumpMaps: Copy + Send + Sync {
    fn neutral(&self, x: f64, r: f64, u: f64) -> f64;
    fn environmental(&self, x: f64, r: f64) -> f64;

    fn apply(&self, x: f64, jump: &Jump) -> f64 {
        match *jump {
            Jump::Neutral { r, u } => self.neutral(x, r, u),
            Jump::Environmental { r } => self.environmental(x, r),
        }
    }
}

/// Time spent below each level of a sorted grid, `int 1{Y_s <= x_k} ds`.
#[derive(Debug, Clone)]
pub struct Occupation {
    grid: Vec<f64>,
    // diff[j] adds to every level with index >= j
    diff: Vec<f64>,
    direct: Vec<f64>,
    total: f64,
}

impl Occupation {
    pub fn new(grid: &[f64]) -> Self {
        let mut grid = grid.to_vec();
        grid.sort_by(f64::total_cmp);
        let n = grid.len();
        Occupation { grid, diff: vec![0.0; n + 1], direct: vec![0.0; n], total: 0.0 }
    }

    pub fn reset(&mut self) {
        self.diff.iter_mut().for_each(|v| *v = 0.0);
        self.direct.iter_mut().for_each(|v| *v = 0.0);
        self.total = 0.0;
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn total_time(&self) -> f64 {
        self.total
    }

    fn add_constant(&mut self, y: f64, dt: f64) {
        let j = self.grid.partition_point(|&x| x < y);
        self.diff[j] += dt;
        self.total += dt;
    }

    fn add_substep(&mut self, flow: &DriftFlow, y0: f64, y1: f64, h: f64) {
        if y0 == y1 {
            self.add_constant(y0, h);
            return;
        }
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        let first = self.grid.partition_point(|&x| x < lo);
        let past = self.grid.partition_point(|&x| x < hi);
        for k in first..past {
            let level = self.grid[k];
            let tau = flow.crossing_time(y0, h, level);
            self.direct[k] += if y0 < y1 { tau } else { h - tau };
        }
        self.diff[past] += h;
        self.total += h;
    }

    /// Occupation times in grid order.
    pub fn values(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.direct
            .iter()
            .enumerate()
            .map(|(k, d)| {
                acc += self.diff[k];
                acc + d
            })
            .collect()
    }
}

/// One applied event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventStep {
    pub time: f64,
    pub pre: f64,
    pub post: f64,
    pub jump: Jump,
}

/// Walks a single path along an event stream.
pub struct PathWalker<'a, M: JumpMaps> {
    flow: &'a DriftFlow,
    maps: M,
    events: Peekable<EventStream>,
    time: f64,
    state: f64,
}

impl<'a, M: JumpMaps> PathWalker<'a, M> {
    pub fn new(flow: &'a DriftFlow, maps: M, events: EventStream, x0: f64) -> Self {
        PathWalker { flow, maps, events: events.peekable(), time: 0.0, state: x0 }
    }

    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn state(&self) -> f64 {
        self.state
    }

    fn drift_to(&mut self, t: f64, occ: Option<&mut Occupation>) -> Result<()> {
        let dt = t - self.time;
        if dt > 0.0 {
            self.state = match occ {
                Some(o) => self.flow.advance_with(self.state, dt, |a, b, h| o.add_substep(self.flow, a, b, h))?,
                None => self.flow.advance(self.state, dt)?,
            };
            self.time = t;
        }
        Ok(())
    }

    /// Applies the next event if it occurs at or before `limit`; otherwise drifts to `limit`.
    pub fn next_event_before(&mut self, limit: f64, mut occ: Option<&mut Occupation>) -> Result<Option<EventStep>> {
        match self.events.peek() {
            Some(ev) if ev.time <= limit => {
                let JumpEvent { time, jump } = *ev;
                self.events.next();
                self.drift_to(time, occ.as_deref_mut())?;
                let pre = self.state;
                self.state = self.maps.apply(pre, &jump);
                Ok(Some(EventStep { time, pre, post: self.state, jump }))
            }
            _ => {
                self.drift_to(limit, occ)?;
                Ok(None)
            }
        }
    }

    /// Evolves to time `t`. An event at exactly `t` is applied, so the state is right-continuous.
    pub fn advance_to(&mut self, t: f64, mut occ: Option<&mut Occupation>) -> Result<()> {
        while self.next_event_before(t, occ.as_deref_mut())?.is_some() {}
        Ok(())
    }
}

/// Two paths driven by one event stream.
pub struct PairWalker<'a, M: JumpMaps> {
    flow: &'a DriftFlow,
    maps: M,
    events: Peekable<EventStream>,
    time: f64,
    states: (f64, f64),
}

impl<'a, M: JumpMaps> PairWalker<'a, M> {
    pub fn new(flow: &'a DriftFlow, maps: M, events: EventStream, a: f64, b: f64) -> Self {
        PairWalker { flow, maps, events: events.peekable(), time: 0.0, states: (a, b) }
    }

    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn states(&self) -> (f64, f64) {
        self.states
    }

    fn drift_to(&mut self, t: f64) -> Result<()> {
        let dt = t - self.time;
        if dt > 0.0 {
            let a = self.flow.advance(self.states.0, dt)?;
            let b = if self.states.1 == self.states.0 { a } else { self.flow.advance(self.states.1, dt)? };
            self.states = (a, b);
            self.time = t;
        }
        Ok(())
    }

    /// Applies the next event at or before `limit` and returns its time; otherwise drifts to `limit`.
    pub fn next_event_before(&mut self, limit: f64) -> Result<Option<f64>> {
        match self.events.peek() {
            Some(ev) if ev.time <= limit => {
                let JumpEvent { time, jump } = *ev;
                self.events.next();
                self.drift_to(time)?;
                self.states = (self.maps.apply(self.states.0, &jump), self.maps.apply(self.states.1, &jump));
                Ok(Some(time))
            }
            _ => {
                self.drift_to(limit)?;
                Ok(None)
            }
        }
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while self.next_event_before(t)?.is_some() {}
        Ok(())
    }
}

/// States at `obs` (sorted). Stops integrating once the path is absorbed at 0 or 1.
pub fn observe_path<M: JumpMaps>(flow: &DriftFlow, maps: M, events: EventStream, x0: f64, obs: &[f64]) -> Result<Vec<f64>> {
    let mut walker = PathWalker::new(flow, maps, events, x0);
    let mut out = Vec::with_capacity(obs.len());
    for &t in obs {
        let x = walker.state();
        if x == 0.0 || x == 1.0 {
            out.push(x);
            continue;
        }
        walker.advance_to(t, None)?;
        out.push(walker.state());
    }
    Ok(out)
}

/// Full sample path: observation samples at `obs`, plus event samples when `record_events`.
pub fn record_path<M: JumpMaps>(
    flow: &DriftFlow,
    maps: M,
    events: EventStream,
    x0: f64,
    obs: &[f64],
    record_events: bool,
) -> Result<(Vec<crate::trajectory::Sample>, f64)> {
    use crate::trajectory::{Sample, SampleKind};
    let mut walker = PathWalker::new(flow, maps, events, x0);
    let mut samples = Vec::new();
    for &t in obs {
        while let Some(step) = walker.next_event_before(t, None)? {
            if record_events {
                samples.push(Sample { time: step.time, state: step.post, kind: SampleKind::Event });
            }
        }
        samples.push(Sample { time: t, state: walker.state(), kind: SampleKind::Observation });
    }
    Ok((samples, walker.state()))
}

/// Largest `a - b` seen at events and observation times for a pair started at `a0 <= b0`,
/// together with the pair at each observation time.
pub fn observe_pair<M: JumpMaps>(
    flow: &DriftFlow,
    maps: M,
    events: EventStream,
    a0: f64,
    b0: f64,
    obs: &[f64],
) -> Result<(Vec<(f64, f64)>, f64)> {
    let mut walker = PairWalker::new(flow, maps, events, a0, b0);
    let mut worst = a0 - b0;
    let mut out = Vec::with_capacity(obs.len());
    for &t in obs {
        while walker.next_event_before(t)?.is_some() {
            let (a, b) = walker.states();
            worst = worst.max(a - b);
        }
        let (a, b) = walker.states();
        worst = worst.max(a - b);
        out.push((a, b));
    }
    Ok((out, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_flow() {
        let flow = DriftFlow::forward(&SelectionFn::constant(1.0), Some(1e-3)).unwrap();
        let x = flow.advance(0.5, 1.0).unwrap();
        let exact = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((x - exact).abs() < 1e-8);
        assert!((x - 0.731059).abs() < 1e-6);
    }

    #[test]
    fn occupation_of_monotone_flow() {
        // logistic x' = x(1-x) from 0.2: time below 0.5 equals log 4
        let flow = DriftFlow::forward(&SelectionFn::constant(1.0), Some(1e-2)).unwrap();
        let mut occ = Occupation::new(&[0.5, 0.99]);
        flow.advance_with(0.2, 3.0, |a, b, h| occ.add_substep(&flow, a, b, h)).unwrap();
        let v = occ.values();
        assert!((v[0] - 4f64.ln()).abs() < 1e-9, "{}", v[0]);
        assert!((v[1] - 3.0).abs() < 1e-12);
        assert!((occ.total_time() - 3.0).abs() < 1e-12);
    }
}
