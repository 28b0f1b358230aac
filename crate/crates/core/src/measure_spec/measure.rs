use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Ambient interval of a measure: `(0,1)` for the neutral measure, `(-1,1)` for the selective one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    Unit,
    Symmetric,
}

impl Support {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Support::Unit => (0.0, 1.0),
            Support::Symmetric => (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Point-evaluable density kinds.
#[derive(Clone)]
pub enum DensityKind {
    /// Constant value on the density's domain.
    Constant { value: f64 },
    /// `mass` times the Beta(a, b) law rescaled to the density's domain.
    Beta { a: f64, b: f64, mass: f64 },
    /// Arbitrary user function. `label` is used for display only.
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Constant { value } => write!(f, "Constant({value})"),
            DensityKind::Beta { a, b, mass } => write!(f, "Beta(a={a}, b={b}, mass={mass})"),
            DensityKind::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

/// Absolutely continuous component: a density supported on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Density {
    kind: DensityKind,
    lo: f64,
    hi: f64,
    // Beta normalisation, precomputed
    norm: f64,
}

impl Density {
    pub fn constant(value: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidMeasure(format!("constant density value {value} must be finite and non-negative")));
        }
        Self::build(DensityKind::Constant { value }, lo, hi)
    }

    pub fn beta(a: f64, b: f64, mass: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidMeasure(format!("beta shape parameters must be positive, got a={a}, b={b}")));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidMeasure(format!("beta density mass {mass} must be finite and non-negative")));
        }
        Self::build(DensityKind::Beta { a, b, mass }, lo, hi)
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64) -> Result<Self> {
        Self::build(DensityKind::Custom { label: label.into(), f: Arc::new(f) }, lo, hi)
    }

    fn build(kind: DensityKind, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidMeasure(format!("density domain [{lo}, {hi}] is empty or not finite")));
        }
        let norm = match &kind {
            DensityKind::Beta { a, b, mass } => mass * (-statrs::function::beta::ln_beta(*a, *b)).exp() / (hi - lo),
            _ => 1.0,
        };
        Ok(Density { kind, lo, hi, norm })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Density value at `r`; zero outside the open domain.
    pub fn value(&self, r: f64) -> f64 {
        if !(r > self.lo && r < self.hi) {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Constant { value } => *value,
            DensityKind::Beta { a, b, .. } => {
                let t = (r - self.lo) / (self.hi - self.lo);
                self.norm * t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0)
            }
            DensityKind::Custom { f, .. } => f(r),
        }
    }

    fn reflected(&self) -> Density {
        let kind = match &self.kind {
            DensityKind::Constant { value } => DensityKind::Constant { value: *value },
            DensityKind::Beta { a, b, mass } => DensityKind::Beta { a: *b, b: *a, mass: *mass },
            DensityKind::Custom { label, f } => {
                let f = Arc::clone(f);
                DensityKind::Custom { label: format!("{label} reflected"), f: Arc::new(move |r| f(-r)) }
            }
        };
        Density { kind, lo: -self.hi, hi: -self.lo, norm: self.norm }
    }

    fn scaled(&self, c: f64) -> Density {
        let kind = match &self.kind {
            DensityKind::Constant { value } => DensityKind::Constant { value: value * c },
            DensityKind::Beta { a, b, mass } => DensityKind::Beta { a: *a, b: *b, mass: mass * c },
            DensityKind::Custom { label, f } => {
                let f = Arc::clone(f);
                DensityKind::Custom { label: format!("{c} * {label}"), f: Arc::new(move |r| c * f(r)) }
            }
        };
        let norm = match kind {
            DensityKind::Beta { .. } => self.norm * c,
            _ => 1.0,
        };
        Density { kind, lo: self.lo, hi: self.hi, norm }
    }
}

/// Interval with explicit endpoint inclusion. Only matters for atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }
    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }
    pub fn open_closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: true }
    }
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// A finite measure on `(0,1)` or `(-1,1)`: finitely many atoms plus an optional density.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    support: Support,
    atoms: Vec<Atom>,
    density: Option<Density>,
    quad_tol: f64,
}

impl MeasureSpec {
    pub fn new(support: Support, atoms: Vec<Atom>, density: Option<Density>) -> Result<Self> {
        let (lo, hi) = support.bounds();
        for (i, a) in atoms.iter().enumerate() {
            if !(a.location > lo && a.location < hi) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} at {} lies outside the open interval ({lo}, {hi})",
                    a.location
                )));
            }
            if support == Support::Symmetric && a.location == 0.0 {
                return Err(Error::InvalidMeasure(format!("atom {i} sits at 0, which must carry no mass")));
            }
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(Error::InvalidMeasure(format!("atom {i} has weight {}, expected finite and non-negative", a.weight)));
            }
        }
        if let Some(d) = &density {
            if d.lo < lo || d.hi > hi {
                return Err(Error::InvalidMeasure(format!(
                    "density domain [{}, {}] is not contained in ({lo}, {hi})",
                    d.lo, d.hi
                )));
            }
        }
        let atoms = atoms.into_iter().filter(|a| a.weight > 0.0).collect();
        Ok(MeasureSpec { support, atoms, density, quad_tol: DEFAULT_QUAD_TOL })
    }

    pub fn zero(support: Support) -> Self {
        MeasureSpec { support, atoms: Vec::new(), density: None, quad_tol: DEFAULT_QUAD_TOL }
    }

    /// Purely atomic measure from `(location, weight)` pairs.
    pub fn atomic(support: Support, atoms: &[(f64, f64)]) -> Result<Self> {
        let atoms = atoms.iter().map(|&(location, weight)| Atom { location, weight }).collect();
        Self::new(support, atoms, None)
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    pub fn support(&self) -> Support {
        self.support
    }
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }
    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
            && match &self.density {
                None => true,
                Some(d) => matches!(d.kind, DensityKind::Constant { value } if value == 0.0)
                    || matches!(d.kind, DensityKind::Beta { mass, .. } if mass == 0.0),
            }
    }

    /// Largest point of the support (supremum of atom locations and density domain).
    pub fn max_supp(&self) -> f64 {
        let a = self.atoms.iter().map(|a| a.location).fold(f64::NEG_INFINITY, f64::max);
        let d = self.density.as_ref().map_or(f64::NEG_INFINITY, |d| d.hi);
        a.max(d)
    }

    /// `integral of f over interval` against this measure.
    ///
    /// Returns `+inf` when `f` is infinite at an atom, and `NonIntegrable` when the
    /// density part cannot be integrated to tolerance.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, interval: Interval) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            if interval.contains(a.location) {
                let v = f(a.location);
                if v.is_nan() {
                    return Err(Error::NonIntegrable { what: format!("integrand is NaN at atom {}", a.location) });
                }
                total += a.weight * v;
            }
        }
        if let Some(d) = &self.density {
            let lo = interval.lo.max(d.lo);
            let hi = interval.hi.min(d.hi);
            if hi > lo {
                let g = |r: f64| {
                    let w = d.value(r);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * f(r)
                    }
                };
                match quadrature::integrate(g, lo, hi, self.quad_tol) {
                    Ok(q) => total += q.value,
                    Err(_) => {
                        return Err(Error::NonIntegrable { what: format!("density integral over ({lo}, {hi})") });
                    }
                }
            }
        }
        Ok(total)
    }

    /// Total mass on the whole support.
    pub fn total_mass(&self) -> Result<f64> {
        let (lo, hi) = self.support.bounds();
        self.integrate(|_| 1.0, Interval::open(lo, hi))
    }

    /// Image measure under `r -> -r`. Only meaningful on `(-1,1)`.
    pub fn reflected(&self) -> MeasureSpec {
        let atoms = self.atoms.iter().map(|a| Atom { location: -a.location, weight: a.weight }).collect();
        MeasureSpec {
            support: self.support,
            atoms,
            density: self.density.as_ref().map(Density::reflected),
            quad_tol: self.quad_tol,
        }
    }

    /// The measure multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> MeasureSpec {
        let atoms = self.atoms.iter().map(|a| Atom { location: a.location, weight: a.weight * c }).collect();
        MeasureSpec {
            support: self.support,
            atoms,
            density: self.density.as_ref().map(|d| d.scaled(c)),
            quad_tol: self.quad_tol,
        }
    }
}

/// Free-function form of [`MeasureSpec::integrate`].
pub fn integrate_against<F: Fn(f64) -> f64>(measure: &MeasureSpec, f: F, interval: Interval) -> Result<f64> {
    measure.integrate(f, interval)
}
