use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial selection function `sigma(x) = sum_i a_i x^i` on `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFn {
    coefficients: Vec<f64>,
}

impl SelectionFn {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("selection coefficient a_{i} is not finite")));
        }
        let mut coefficients = coefficients;
        while coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        Ok(SelectionFn { coefficients })
    }

    pub fn constant(s: f64) -> Self {
        SelectionFn::new(vec![s]).expect("finite constant")
    }

    pub fn zero() -> Self {
        SelectionFn { coefficients: Vec::new() }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * x + i as f64 * a)
    }

    /// Upper bound on `sup|sigma| + sup|sigma'|` over `[0,1]`.
    pub fn c1_bound(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, a)| a.abs() * (1.0 + i as f64))
            .sum()
    }

    /// `y -> -sigma(1 - y)`, the selection function of `1 - X`.
    pub fn reflected(&self) -> SelectionFn {
        let n = self.coefficients.len();
        let mut out = vec![0.0; n];
        // sigma(1 - y) = sum_i a_i sum_k C(i,k) (-y)^k
        for (i, &a) in self.coefficients.iter().enumerate() {
            let mut binom = 1.0;
            for k in 0..=i {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                out[k] -= a * binom * sign;
                binom = binom * (i - k) as f64 / (k + 1) as f64;
            }
        }
        SelectionFn::new(out).expect("finite coefficients")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivative() {
        let s = SelectionFn::new(vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(s.eval(0.5), 1.0 - 1.0 + 0.75);
        assert_eq!(s.derivative(0.5), -2.0 + 3.0);
        assert_eq!(s.c1_bound(), 1.0 + 4.0 + 9.0);
    }

    #[test]
    fn reflection_matches_pointwise() {
        let s = SelectionFn::new(vec![0.3, -1.0, 2.0, 0.5]).unwrap();
        let r = s.reflected();
        for k in 0..=10 {
            let y = k as f64 / 10.0;
            assert!((r.eval(y) + s.eval(1.0 - y)).abs() < 1e-13);
        }
        let back = r.reflected();
        for (a, b) in back.coefficients().iter().zip(s.coefficients()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn trailing_zeros_dropped() {
        assert!(SelectionFn::new(vec![0.0, 0.0]).unwrap().is_zero());
    }
}
