use nalgebra::{DMatrix, DVector};

use super::Posynomial;
use crate::error::{Error, Result};

/// Value, gradient and Hessian of `F(z) = log f(exp z)`.
#[derive(Debug, Clone)]
pub struct LogEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Posynomial {
    /// Evaluates the convex log-domain form of `self` at `z`.
    ///
    /// Uses a shifted log-sum-exp, so terms with huge or tiny exponents do not
    /// overflow.
    pub fn log_eval(&self, z: &[f64]) -> Result<LogEval> {
        let n = z.len();
        if let Some(s) = self.max_slot() {
            if s >= n {
                return Err(Error::MissingVariable(s));
            }
        }
        if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite log-domain point entry {bad}"
            )));
        }
        let ys: Vec<f64> = self
            .terms
            .iter()
            .map(|t| t.log_eval(z))
            .collect::<Result<_>>()?;
        let m = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ws: Vec<f64> = ys.iter().map(|y| (y - m).exp()).collect();
        let total: f64 = ws.iter().sum();
        let value = m + total.ln();

        let mut gradient = DVector::zeros(n);
        let mut hessian = DMatrix::zeros(n, n);
        for (t, w) in self.terms.iter().zip(&ws) {
            let p = w / total;
            for &(i, ai) in t.exponents() {
                gradient[i] += p * ai;
                for &(j, aj) in t.exponents() {
                    hessian[(i, j)] += p * ai * aj;
                }
            }
        }
        hessian -= &gradient * gradient.transpose();
        Ok(LogEval {
            value,
            gradient,
            hessian,
        })
    }
}
