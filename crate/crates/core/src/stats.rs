//! Estimates with standard errors, least-squares fits and the Kolmogorov-Smirnov test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub std_error: f64,
    pub reps: u64,
    pub method: String,
}

impl EstimateWithCI {
    pub fn from_bernoulli(hits: u64, reps: u64, method: &str) -> Self {
        let p = if reps == 0 { f64::NAN } else { hits as f64 / reps as f64 };
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        EstimateWithCI { point: p, std_error: se, reps, method: method.to_string() }
    }

    pub fn from_samples(samples: &[f64], method: &str) -> Self {
        let (mean, var) = mean_var(samples);
        EstimateWithCI {
            point: mean,
            std_error: (var / samples.len() as f64).sqrt(),
            reps: samples.len() as u64,
            method: method.to_string(),
        }
    }

    /// `sum num / sum den` with the delta-method standard error.
    pub fn ratio(num: &[f64], den: &[f64], method: &str) -> Self {
        let n = num.len();
        let sn: f64 = num.iter().sum();
        let sd: f64 = den.iter().sum();
        let ratio = sn / sd;
        let mean_den = sd / n as f64;
        let resid: f64 = num.iter().zip(den).map(|(a, b)| (a - ratio * b).powi(2)).sum();
        let se = if n > 1 { (resid / (n as f64 * (n as f64 - 1.0))).sqrt() / mean_den } else { f64::NAN };
        EstimateWithCI { point: ratio, std_error: se, reps: n as u64, method: method.to_string() }
    }

    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_error
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// `(a - b) / sqrt(se_a^2 + se_b^2)`; zero when both are exact and equal.
pub fn z_score(a: &EstimateWithCI, b: &EstimateWithCI) -> f64 {
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    let d = a.point - b.point;
    if se == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    } else {
        d / se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len();
    let (mx, _) = mean_var(xs);
    let (my, _) = mean_var(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LinearFit { slope, intercept, r_squared, points: n }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test against Uniform(lo, hi).
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> KsResult {
    let mut xs: Vec<f64> = samples.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / nf - x).max(x - i as f64 / nf);
    }
    KsResult { statistic: d, p_value: kolmogorov_sf(d, n), n }
}

/// Asymptotic `P(D_n > d)` with Stephens' small-sample correction.
pub fn kolmogorov_sf(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = d * (sn + 0.12 + 0.11 / sn);
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Runs `f(i)` for `i in 0..n` in parallel and returns results in index order, so reductions
/// over the output do not depend on the number of worker threads.
pub fn replicate<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_critical_value() {
        // asymptotic 1% critical value of sqrt(n) D is 1.6276
        let n = 1_000_000;
        let d = 1.6276 / (n as f64).sqrt();
        assert!((kolmogorov_sf(d, n) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn ks_on_evenly_spread_points() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_uniform(&xs, 0.0, 1.0);
        assert!((r.statistic - 0.0005).abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn ratio_of_constant_multiples() {
        let den = [1.0, 2.0, 3.0];
        let num: Vec<f64> = den.iter().map(|d| 0.25 * d).collect();
        let e = EstimateWithCI::ratio(&num, &den, "ratio");
        assert!((e.point - 0.25).abs() < 1e-15 && e.std_error.abs() < 1e-15);
    }
}
