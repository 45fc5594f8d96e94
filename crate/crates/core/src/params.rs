//! Model parameters of the Klein–Gordon–Maxwell(-Proca) system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and model parameters.
///
/// The derived mass `msq = a - omega^2` is the coefficient of the
/// zeroth-order term in the matter equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Spatial dimension (3 or 4).
    pub n: usize,
    /// Nonlinearity exponent.
    pub p: f64,
    /// Potential coefficient.
    pub a: f64,
    /// Phase frequency.
    pub omega: f64,
    /// Coupling charge.
    pub q: f64,
}

impl ModelParams {
    /// Construct and validate.
    pub fn new(n: usize, p: f64, a: f64, omega: f64, q: f64) -> Result<Self> {
        let m = ModelParams { n, p, a, omega, q };
        m.validate()?;
        Ok(m)
    }

    /// Parameters with `omega = 0` and `a = msq`, i.e. the pure Neumann
    /// problem with the electrostatic coupling switched off.
    pub fn uncoupled(n: usize, p: f64, msq: f64) -> Result<Self> {
        Self::new(n, p, msq, 0.0, 1.0)
    }

    /// Derived mass `a - omega^2`.
    pub fn msq(&self) -> f64 {
        self.a - self.omega * self.omega
    }

    /// Admissible open interval for `p`.
    pub fn exponent_window(n: usize) -> (f64, f64) {
        let crit = if n > 2 {
            2.0 * n as f64 / (n as f64 - 2.0)
        } else {
            f64::INFINITY
        };
        // For n = 4 the contraction estimate additionally needs p < 4.
        let hi = if n == 4 { crit.min(4.0) } else { crit };
        (2.0, hi)
    }

    /// Critical Sobolev exponent `2n/(n-2)`.
    pub fn sobolev_critical(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 2.0)
    }

    /// Conjugate exponent of `p`.
    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Check every invariant.
    pub fn validate(&self) -> Result<()> {
        if self.n != 3 && self.n != 4 {
            return Err(Error::InvalidParams(format!("n = {} (must be 3 or 4)", self.n)));
        }
        let (lo, hi) = Self::exponent_window(self.n);
        if !(self.p > lo && self.p < hi) || !self.p.is_finite() {
            return Err(Error::InvalidExponent { n: self.n, p: self.p, lo, hi });
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidParams(format!("a = {} (must be > 0)", self.a)));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::InvalidParams(format!("q = {} (must be > 0)", self.q)));
        }
        if !(self.omega.abs() < self.a.sqrt()) {
            return Err(Error::InvalidParams(format!(
                "|omega| = {} must be below sqrt(a) = {}",
                self.omega.abs(),
                self.a.sqrt()
            )));
        }
        Ok(())
    }
}
