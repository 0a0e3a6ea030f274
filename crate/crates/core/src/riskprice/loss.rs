use crate::error::{Error, Result};

/// Convex loss on shortfalls, `l(0) = 0`, strictly convex and increasing on
/// the positive half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFunction {
    /// `l(x) = x^2`.
    Quadratic,
    /// `l(x) = x^p` with `p > 1`.
    Power(f64),
}

impl LossFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("loss exponent must exceed 1, got {p}")));
        }
        Ok(LossFunction::Power(p))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            LossFunction::Quadratic => x * x,
            LossFunction::Power(p) => x.powf(p),
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            LossFunction::Quadratic => 2.0 * x,
            LossFunction::Power(p) => p * x.powf(p - 1.0),
        }
    }

    /// Inverse of the gradient on the positive half-line, zero below.
    pub fn gradient_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match *self {
            LossFunction::Quadratic => 0.5 * y,
            LossFunction::Power(p) => (y / p).powf(1.0 / (p - 1.0)),
        }
    }
}
