//! TOML configuration files.
//!
//! ```toml
//! [lambda]
//! atoms = [[0.5, 1.0]]            # [location, weight]
//!
//! [mu]
//! atoms = [[0.3, 0.2], [-0.3, 0.2]]
//! density = { kind = "constant", value = 0.1, lo = -0.5, hi = -0.1 }
//!
//! [sigma]
//! coefficients = [1.0, -2.0]      # sigma(x) = 1 - 2x
//!
//! [numerics]
//! gamma = 1.0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure_spec::{Atom, Density, MeasureSpec, ModelParams, SelectionFn, Support, DEFAULT_CRITICAL_TOL, DEFAULT_QUAD_TOL};
use crate::random_background::BackgroundConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub lambda: MeasureSection,
    #[serde(default)]
    pub mu: MeasureSection,
    #[serde(default)]
    pub sigma: SigmaSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub background: BackgroundSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub renewal: RenewalSection,
    #[serde(default)]
    pub levy: LevySection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
    pub density: Option<DensitySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySection {
    Constant { value: f64, lo: f64, hi: f64 },
    Beta {
        a: f64,
        b: f64,
        mass: f64,
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSection {
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub quad_tol: f64,
    pub critical_tol: f64,
    pub drift_step: Option<f64>,
    pub gamma: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection { quad_tol: DEFAULT_QUAD_TOL, critical_tol: DEFAULT_CRITICAL_TOL, drift_step: None, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSection {
    pub eps_neutral: f64,
    pub eps_env: f64,
}

impl Default for BackgroundSection {
    fn default() -> Self {
        let d = BackgroundConfig::default();
        BackgroundSection { eps_neutral: d.eps_neutral, eps_env: d.eps_env }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub reps: Option<u64>,
    pub horizon: Option<f64>,
    pub workers: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 1, reps: None, horizon: None, workers: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenewalSection {
    pub kappa: f64,
    pub eta: f64,
}

impl Default for RenewalSection {
    fn default() -> Self {
        RenewalSection { kappa: 0.2, eta: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevySection {
    pub b: f64,
    pub delta: f64,
}

impl Default for LevySection {
    fn default() -> Self {
        LevySection { b: 4f64.ln(), delta: 0.25 }
    }
}

impl Config {
    /// Parses TOML. Syntax errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Builds and validates `(Lambda, mu, sigma)`.
    pub fn params(&self) -> Result<ModelParams> {
        let lambda = build_measure(&self.lambda, Support::Unit, "lambda", self.numerics.quad_tol)?;
        let mu = build_measure(&self.mu, Support::Symmetric, "mu", self.numerics.quad_tol)?;
        let sigma = SelectionFn::new(self.sigma.coefficients.clone()).map_err(|e| Error::Config(format!("[sigma] {e}")))?;
        ModelParams::new(lambda, mu, sigma).map_err(|e| match e {
            Error::InvalidMeasure(m) => Error::Config(m),
            other => other,
        })
    }

    pub fn background(&self, seed: u64, horizon: Option<f64>) -> BackgroundConfig {
        BackgroundConfig { seed, horizon, eps_neutral: self.background.eps_neutral, eps_env: self.background.eps_env }
    }
}

fn build_measure(section: &MeasureSection, support: Support, name: &str, quad_tol: f64) -> Result<MeasureSpec> {
    let atoms = section.atoms.iter().map(|&[location, weight]| Atom { location, weight }).collect::<Vec<_>>();
    for (i, a) in atoms.iter().enumerate() {
        // re-validated by MeasureSpec::new; checked here to name the offending field
        MeasureSpec::new(support, vec![*a], None).map_err(|e| Error::Config(format!("{name}.atoms[{i}]: {e}")))?;
    }
    let density = match &section.density {
        None => None,
        Some(DensitySection::Constant { value, lo, hi }) => Some(Density::constant(*value, *lo, *hi)),
        Some(DensitySection::Beta { a, b, mass, lo, hi }) => Some(Density::beta(*a, *b, *mass, *lo, *hi)),
    }
    .transpose()
    .map_err(|e| Error::Config(format!("{name}.density: {e}")))?;
    Ok(MeasureSpec::new(support, atoms, density)
        .map_err(|e| Error::Config(format!("{name}: {e}")))?
        .with_quad_tol(quad_tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = Config::from_toml_str("[lambda]\natoms = [[0.5, 0.25]]\n[sigma]\ncoefficients = [1.0, -2.0]\n").unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.sigma().eval(1.0), -1.0);
        assert_eq!(c.run.seed, 1);
    }

    #[test]
    fn bad_atom_names_field() {
        let c = Config::from_toml_str("[lambda]\natoms = [[1.5, 1.0]]\n").unwrap();
        let e = c.params().unwrap_err().to_string();
        assert!(e.contains("lambda.atoms[0]"), "{e}");
    }

    #[test]
    fn syntax_error_has_location() {
        let e = Config::from_toml_str("[lambda]\natoms = [[0.5, ]\n").unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(Config::from_toml_str("[lambda]\natom = [[0.5, 1.0]]\n").is_err());
    }

    #[test]
    fn round_trip() {
        let c = Config::from_toml_str("[lambda]\natoms = [[0.5, 1.0]]\n[mu]\ndensity = { kind = \"beta\", a = 2.0, b = 2.0, mass = 0.3, lo = -0.5, hi = 0.5 }\n").unwrap();
        let again = Config::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, again);
    }
}
