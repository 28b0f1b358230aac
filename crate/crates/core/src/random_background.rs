//! The Poisson random background: neutral events `(t, r, u)` with intensity
//! `dt x r^-2 Lambda(dr) x du` and environmental events `(t, r)` with intensity `dt x mu(dr)`.
//!
//! Events are regenerated on demand from `(seed, domain, index)`, so every consumer of a
//! given background sees the same realisation and no event list is ever stored.

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure_spec::{Interval, MeasureSpec, ModelParams};
use crate::quadrature;

const CELLS: usize = 512;
const STREAM_NEUTRAL: u64 = 0;
const STREAM_ENV: u64 = 1;
const STREAM_AUX: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Jump {
    Neutral { r: f64, u: f64 },
    Environmental { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub jump: Jump,
}

impl JumpEvent {
    pub fn r(&self) -> f64 {
        match self.jump {
            Jump::Neutral { r, .. } | Jump::Environmental { r } => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundConfig {
    pub seed: u64,
    /// Events after this time are never produced. `None` streams indefinitely.
    pub horizon: Option<f64>,
    /// Neutral density mass on `(0, eps_neutral)` is dropped. Atoms are never dropped.
    pub eps_neutral: f64,
    /// Environmental density mass on `(-eps_env, eps_env)` is dropped.
    pub eps_env: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig { seed: 0, horizon: None, eps_neutral: 1e-3, eps_env: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterSide {
    /// Keep neutral events with `r > threshold`.
    Above,
    /// Keep neutral events with `r <= threshold`.
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NeutralFilter {
    All,
    Keep(FilterSide, f64),
}

impl NeutralFilter {
    fn keeps(self, r: f64) -> bool {
        match self {
            NeutralFilter::All => true,
            NeutralFilter::Keep(FilterSide::Above, c) => r > c,
            NeutralFilter::Keep(FilterSide::AtMost, c) => r <= c,
        }
    }
}

#[derive(Debug, Clone)]
enum Component {
    Atom(f64),
    // linear weight `ga + (gb - ga) t` on `[lo, hi]`
    Cell { lo: f64, hi: f64, ga: f64, gb: f64 },
}

/// Discrete mixture over atoms and density cells, sampled by inverse CDF.
#[derive(Debug, Clone)]
struct JumpTable {
    rate: f64,
    cumulative: Vec<f64>,
    components: Vec<Component>,
}

impl JumpTable {
    fn empty() -> Self {
        JumpTable { rate: 0.0, cumulative: Vec::new(), components: Vec::new() }
    }

    fn build(
        measure: &MeasureSpec,
        weight: impl Fn(f64) -> f64 + Copy,
        ranges: &[(f64, f64)],
        name: &str,
    ) -> Result<Self> {
        // atoms are never truncated
        let mut masses: Vec<f64> = measure.atoms().iter().map(|a| a.weight * weight(a.location)).collect();
        let mut components: Vec<Component> = measure.atoms().iter().map(|a| Component::Atom(a.location)).collect();
        if let Some(d) = measure.density() {
            let (dlo, dhi) = d.domain();
            for &(lo, hi) in ranges {
                let lo = lo.max(dlo);
                let hi = hi.min(dhi);
                if hi <= lo {
                    continue;
                }
                let g = |r: f64| d.value(r) * weight(r);
                let total = quadrature::integrate(g, lo, hi, measure.quad_tol())
                    .map_err(|_| Error::InfiniteRate { which: name.to_string() })?
                    .value;
                if total <= 0.0 {
                    continue;
                }
                // cells cluster towards both ends, where densities are typically singular
                let edge = |k: usize| {
                    let s = k as f64 / CELLS as f64;
                    lo + (hi - lo) * s * s * (3.0 - 2.0 * s)
                };
                for k in 0..CELLS {
                    let (a, b) = (edge(k), edge(k + 1));
                    let q = quadrature::integrate(g, a, b, measure.quad_tol())
                        .map_err(|_| Error::InfiniteRate { which: name.to_string() })?
                        .value;
                    if q <= 0.0 {
                        continue;
                    }
                    let w = b - a;
                    let g1 = g(a + 0.25 * w);
                    let g3 = g(a + 0.75 * w);
                    let slope = 2.0 * (g3 - g1);
                    let (mut ga, mut gb) = (g1 - 0.25 * slope, g3 + 0.25 * slope);
                    if !(ga >= 0.0 && gb >= 0.0 && ga.is_finite() && gb.is_finite()) || ga + gb == 0.0 {
                        ga = 1.0;
                        gb = 1.0;
                    }
                    masses.push(q);
                    components.push(Component::Cell { lo: a, hi: b, ga, gb });
                }
            }
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        if !acc.is_finite() {
            return Err(Error::InfiniteRate { which: name.to_string() });
        }
        Ok(JumpTable { rate: acc, cumulative, components })
    }

    fn sample(&self, v: f64, w: f64) -> f64 {
        let target = v * self.rate;
        let i = self.cumulative.partition_point(|&c| c <= target).min(self.components.len() - 1);
        match self.components[i] {
            Component::Atom(r) => r,
            Component::Cell { lo, hi, ga, gb } => {
                // invert the trapezoid CDF  (ga t + (gb - ga) t^2 / 2) / ((ga + gb) / 2) = w
                let a = 0.5 * (gb - ga);
                let c = -w * 0.5 * (ga + gb);
                let t = -2.0 * c / (ga + (ga * ga - 4.0 * a * c).max(0.0).sqrt());
                lo + (hi - lo) * t.clamp(0.0, 1.0)
            }
        }
    }
}

/// Rates and samplers shared by all replicas of one background.
#[derive(Debug)]
pub struct EventSource {
    neutral: JumpTable,
    env: JumpTable,
    config: BackgroundConfig,
    neutral_bias: f64,
    env_bias: f64,
}

/// Deterministic, lazily generated realisation of the random background.
#[derive(Debug, Clone)]
pub struct RandomBackground {
    source: Arc<EventSource>,
    domain: u64,
    index: u64,
    filter: NeutralFilter,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, domain: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut state = splitmix(splitmix(splitmix(seed) ^ domain) ^ index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the open interval `(0, 1)`.
pub fn open01(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Builds the background for `params`. The result is replica `(0, 0)`; see [`RandomBackground::replica`].
pub fn build_background(params: &ModelParams, config: BackgroundConfig) -> Result<RandomBackground> {
    if !(config.eps_neutral >= 0.0 && config.eps_neutral < 1.0) {
        return Err(Error::InvalidParameter(format!("eps_neutral = {} must lie in [0, 1)", config.eps_neutral)));
    }
    if !(config.eps_env >= 0.0 && config.eps_env < 1.0) {
        return Err(Error::InvalidParameter(format!("eps_env = {} must lie in [0, 1)", config.eps_env)));
    }
    if let Some(h) = config.horizon {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("background horizon {h} must be positive")));
        }
    }
    let lambda = params.lambda();
    let mu = params.mu();
    let neutral = if lambda.is_zero() {
        JumpTable::empty()
    } else {
        JumpTable::build(lambda, |r| 1.0 / (r * r), &[(config.eps_neutral, 1.0)], "neutral")?
    };
    let env = if mu.is_zero() {
        JumpTable::empty()
    } else {
        let e = config.eps_env;
        JumpTable::build(mu, |_| 1.0, &[(-1.0, -e), (e, 1.0)], "environmental")?
    };
    let neutral_bias = match lambda.density() {
        Some(_) if config.eps_neutral > 0.0 => {
            let only_density = MeasureSpec::new(lambda.support(), vec![], lambda.density().cloned())?.with_quad_tol(lambda.quad_tol());
            only_density.integrate(|r| 1.0 / r, Interval::open(0.0, config.eps_neutral)).unwrap_or(f64::INFINITY)
        }
        _ => 0.0,
    };
    let env_bias = match mu.density() {
        Some(_) if config.eps_env > 0.0 => {
            let only_density = MeasureSpec::new(mu.support(), vec![], mu.density().cloned())?.with_quad_tol(mu.quad_tol());
            only_density.integrate(f64::abs, Interval::open(-config.eps_env, config.eps_env)).unwrap_or(f64::INFINITY)
        }
        _ => 0.0,
    };
    Ok(RandomBackground {
        source: Arc::new(EventSource { neutral, env, config, neutral_bias, env_bias }),
        domain: 0,
        index: 0,
        filter: NeutralFilter::All,
    })
}

/// Restricts the neutral events of `background`; environmental events are untouched.
pub fn filtered_view(background: &RandomBackground, threshold: f64, side: FilterSide) -> RandomBackground {
    background.filtered(threshold, side)
}

impl RandomBackground {
    /// Independent realisation number `index` within namespace `domain`, same rates and seed.
    pub fn replica(&self, domain: u64, index: u64) -> RandomBackground {
        RandomBackground { source: Arc::clone(&self.source), domain, index, filter: self.filter }
    }

    pub fn filtered(&self, threshold: f64, side: FilterSide) -> RandomBackground {
        RandomBackground {
            source: Arc::clone(&self.source),
            domain: self.domain,
            index: self.index,
            filter: NeutralFilter::Keep(side, threshold),
        }
    }

    pub fn config(&self) -> &BackgroundConfig {
        &self.source.config
    }
    pub fn seed(&self) -> u64 {
        self.source.config.seed
    }
    pub fn domain(&self) -> u64 {
        self.domain
    }
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Total rate of neutral events, `int_[eps,1) r^-2 Lambda(dr)` (before filtering).
    pub fn neutral_rate(&self) -> f64 {
        self.source.neutral.rate
    }
    pub fn env_rate(&self) -> f64 {
        self.source.env.rate
    }

    /// Rate of neutral events passing the current filter, by Monte Carlo-free summation over
    /// atoms and cells (cells are assigned entirely by their midpoint).
    pub fn filtered_neutral_rate(&self) -> f64 {
        let t = &self.source.neutral;
        let mut prev = 0.0;
        let mut rate = 0.0;
        for (c, comp) in t.cumulative.iter().zip(&t.components) {
            let r = match comp {
                Component::Atom(r) => *r,
                Component::Cell { lo, hi, .. } => 0.5 * (lo + hi),
            };
            if self.filter.keeps(r) {
                rate += c - prev;
            }
            prev = *c;
        }
        rate
    }

    fn filter_can_pass(&self) -> bool {
        self.source.neutral.components.iter().any(|c| match *c {
            Component::Atom(r) => self.filter.keeps(r),
            Component::Cell { lo, hi, .. } => self.filter.keeps(lo) || self.filter.keeps(hi),
        })
    }

    /// Bound on the drift bias from truncating the neutral density, `int_(0,eps) r^-1 Lambda(dr)`.
    pub fn neutral_truncation_bias(&self) -> f64 {
        self.source.neutral_bias
    }

    /// `int_(-eps,eps) |r| mu(dr)` over the truncated environmental density.
    pub fn env_truncation_bias(&self) -> f64 {
        self.source.env_bias
    }

    /// Generator for auxiliary draws (initial states and the like), independent of the events.
    pub fn aux_rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed(), self.domain, self.index, STREAM_AUX)
    }

    pub fn events(&self) -> EventStream {
        let seed = self.seed();
        // rejection sampling below would never return if the filter removes every component
        let neutral_rate = if self.filter_can_pass() { self.source.neutral.rate } else { 0.0 };
        EventStream {
            source: Arc::clone(&self.source),
            filter: self.filter,
            neutral: PoissonClock::new(stream_rng(seed, self.domain, self.index, STREAM_NEUTRAL), neutral_rate),
            env: PoissonClock::new(stream_rng(seed, self.domain, self.index, STREAM_ENV), self.source.env.rate),
            next_neutral: None,
            next_env: None,
            primed: false,
        }
    }
}

struct PoissonClock {
    rng: ChaCha8Rng,
    rate: f64,
    time: f64,
}

impl PoissonClock {
    fn new(rng: ChaCha8Rng, rate: f64) -> Self {
        PoissonClock { rng, rate, time: 0.0 }
    }

    fn tick(&mut self) -> Option<f64> {
        if self.rate <= 0.0 {
            return None;
        }
        self.time += -open01(&mut self.rng).ln() / self.rate;
        Some(self.time)
    }
}

/// Time-ordered iterator over the events of one background realisation.
pub struct EventStream {
    source: Arc<EventSource>,
    filter: NeutralFilter,
    neutral: PoissonClock,
    env: PoissonClock,
    next_neutral: Option<JumpEvent>,
    next_env: Option<JumpEvent>,
    primed: bool,
}

impl EventStream {
    fn draw_neutral(&mut self) -> Option<JumpEvent> {
        loop {
            let time = self.neutral.tick()?;
            let rng = &mut self.neutral.rng;
            let (v, w, u) = (open01(rng), open01(rng), open01(rng));
            let r = self.source.neutral.sample(v, w);
            if self.filter.keeps(r) {
                return Some(JumpEvent { time, jump: Jump::Neutral { r, u } });
            }
        }
    }

    fn draw_env(&mut self) -> Option<JumpEvent> {
        let time = self.env.tick()?;
        let rng = &mut self.env.rng;
        let (v, w) = (open01(rng), open01(rng));
        let r = self.source.env.sample(v, w);
        Some(JumpEvent { time, jump: Jump::Environmental { r } })
    }
}

impl Iterator for EventStream {
    type Item = JumpEvent;

    fn next(&mut self) -> Option<JumpEvent> {
        if !self.primed {
            self.next_neutral = self.draw_neutral();
            self.next_env = self.draw_env();
            self.primed = true;
        }
        let take_neutral = match (&self.next_neutral, &self.next_env) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(n), Some(e)) => n.time <= e.time,
        };
        let ev = if take_neutral {
            self.next_neutral.take().map(|e| {
                self.next_neutral = self.draw_neutral();
                e
            })
        } else {
            self.next_env.take().map(|e| {
                self.next_env = self.draw_env();
                e
            })
        }?;
        match self.source.config.horizon {
            Some(h) if ev.time > h => None,
            _ => Some(ev),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_spec::{SelectionFn, Support};

    fn model(lambda: &[(f64, f64)], mu: &[(f64, f64)]) -> ModelParams {
        ModelParams::new(
            MeasureSpec::atomic(Support::Unit, lambda).unwrap(),
            MeasureSpec::atomic(Support::Symmetric, mu).unwrap(),
            SelectionFn::zero(),
        )
        .unwrap()
    }

    #[test]
    fn rate_of_half_atom() {
        let bg = build_background(&model(&[(0.5, 1.0)], &[]), BackgroundConfig::default()).unwrap();
        assert!((bg.neutral_rate() - 4.0).abs() < 1e-12);
        assert_eq!(bg.env_rate(), 0.0);
    }

    #[test]
    fn filtered_rate() {
        let bg = build_background(&model(&[(0.3, 0.5), (0.7, 0.5)], &[]), BackgroundConfig::default()).unwrap();
        let f = bg.filtered(0.5, FilterSide::Above);
        assert!((f.filtered_neutral_rate() - 0.5 / 0.49).abs() < 1e-12);
    }

    #[test]
    fn deterministic_replay() {
        let bg = build_background(&model(&[(0.5, 1.0)], &[(0.3, 0.2)]), BackgroundConfig { seed: 9, horizon: Some(20.0), ..Default::default() }).unwrap();
        let a: Vec<_> = bg.replica(1, 5).events().collect();
        let b: Vec<_> = bg.replica(1, 5).events().collect();
        assert_eq!(a, b);
        let c: Vec<_> = bg.replica(1, 6).events().collect();
        assert_ne!(a, c);
        assert!(a.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(a.iter().all(|e| e.time <= 20.0));
    }

    #[test]
    fn filters_partition_the_neutral_stream() {
        let bg = build_background(&model(&[(0.3, 0.5), (0.7, 0.5)], &[(-0.2, 1.0)]), BackgroundConfig { seed: 3, horizon: Some(50.0), ..Default::default() }).unwrap();
        let neutral = |s: &RandomBackground| -> Vec<JumpEvent> {
            s.events().filter(|e| matches!(e.jump, Jump::Neutral { .. })).collect()
        };
        let all = neutral(&bg);
        let hi = neutral(&bg.filtered(0.5, FilterSide::Above));
        let lo = neutral(&bg.filtered(0.5, FilterSide::AtMost));
        let mut merged: Vec<_> = hi.iter().chain(lo.iter()).copied().collect();
        merged.sort_by(|a, b| a.time.total_cmp(&b.time));
        assert_eq!(merged, all);
    }

    #[test]
    fn filter_removing_everything_leaves_environment() {
        let bg = build_background(&model(&[(0.5, 1.0)], &[(0.3, 1.0)]), BackgroundConfig { seed: 4, ..Default::default() }).unwrap();
        let capped = bg.filtered(0.3, FilterSide::AtMost);
        let ev: Vec<JumpEvent> = capped.events().take_while(|e| e.time < 20.0).collect();
        assert!(!ev.is_empty());
        assert!(ev.iter().all(|e| matches!(e.jump, Jump::Environmental { .. })));
    }
}
