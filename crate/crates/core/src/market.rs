//! Market models, discounting, risk premia and change-of-measure densities.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// dX = X(μ dt + σ dW): lognormal prices.
    Geometric,
    /// dX = μ dt + σ dW: Brownian prices with constant coefficients.
    Arithmetic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel {
    pub spot: f64,
    pub mu: f64,
    pub sigma: f64,
    pub rate: f64,
    pub flavor: Flavor,
}

impl MarketModel {
    /// Validates and builds a model. `sigma = 0` is accepted so that
    /// deterministic limits can be run; operations that need to invert the
    /// volatility reject it.
    pub fn new(spot: f64, mu: f64, sigma: f64, rate: f64, flavor: Flavor) -> Result<Self> {
        if !(spot.is_finite() && mu.is_finite() && sigma.is_finite() && rate.is_finite()) {
            return Err(Error::InvalidInput("market parameters must be finite".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
        }
        if flavor == Flavor::Geometric && spot <= 0.0 {
            return Err(Error::InvalidInput(format!("geometric spot must be positive, got {spot}")));
        }
        Ok(Self { spot, mu, sigma, rate, flavor })
    }

    pub fn geometric(spot: f64, mu: f64, sigma: f64, rate: f64) -> Result<Self> {
        Self::new(spot, mu, sigma, rate, Flavor::Geometric)
    }

    pub fn arithmetic(spot: f64, mu: f64, sigma: f64, rate: f64) -> Result<Self> {
        Self::new(spot, mu, sigma, rate, Flavor::Arithmetic)
    }

    pub fn with_spot(mut self, spot: f64) -> Self {
        self.spot = spot;
        self
    }

    /// Drift coefficient μ(x) in amount coordinates.
    pub fn drift_at(&self, x: f64) -> f64 {
        match self.flavor {
            Flavor::Geometric => self.mu * x,
            Flavor::Arithmetic => self.mu,
        }
    }

    /// Diffusion coefficient σ(x) in amount coordinates.
    pub fn vol_at(&self, x: f64) -> f64 {
        match self.flavor {
            Flavor::Geometric => self.sigma * x,
            Flavor::Arithmetic => self.sigma,
        }
    }
}

/// λ = σ(x)⁻¹ (μ(x) − r x).
pub fn risk_premium(model: &MarketModel, x: f64) -> Result<f64> {
    if model.sigma == 0.0 {
        return Err(Error::SingularVolatility);
    }
    match model.flavor {
        // Proportional coefficients: x cancels.
        Flavor::Geometric => Ok((model.mu - model.rate) / model.sigma),
        Flavor::Arithmetic if model.rate == 0.0 => Ok(model.mu / model.sigma),
        Flavor::Arithmetic => Ok((model.mu - model.rate * x) / model.sigma),
    }
}

/// e^{−rt} for t ≥ 0.
pub fn discount_factor(r: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    (-r * t).exp()
}

/// A right-continuous step function of time: `values[i]` holds on
/// `[knots[i], knots[i+1])`, the last value holds from the last knot on.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidInput("schedule needs matching, nonempty knots and values".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) || knots[0] != 0.0 {
            return Err(Error::InvalidInput("schedule knots must start at 0 and increase".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("schedule values must not be NaN".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn constant(v: f64) -> Self {
        Self { knots: vec![0.0], values: vec![v] }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= t);
        self.values[i.saturating_sub(1)]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Density of Q^ν with respect to P for a constant premium λ and a dual
/// control ν, so that λ^ν(t) = λ − ν(t)/σ̃.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureChange {
    pub lambda: f64,
    /// Discounted volatility σ̃ used to convert ν into a premium shift.
    pub vol_tilde: f64,
    pub nu: PiecewiseConstant,
}

impl MeasureChange {
    pub fn new(lambda: f64, vol_tilde: f64, nu: PiecewiseConstant) -> Result<Self> {
        if !nu.is_zero() && vol_tilde == 0.0 {
            return Err(Error::SingularVolatility);
        }
        Ok(Self { lambda, vol_tilde, nu })
    }

    /// The density H of the pricing measure: ν ≡ 0.
    pub fn risk_neutral(lambda: f64) -> Self {
        Self { lambda, vol_tilde: 1.0, nu: PiecewiseConstant::constant(0.0) }
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        let nu = self.nu.value_at(t);
        if nu == 0.0 {
            self.lambda
        } else {
            self.lambda - nu / self.vol_tilde
        }
    }

    /// Per-step log-density increments −λ_k ΔW_k − ½λ_k² Δt, with λ frozen at
    /// the left end of each step.
    pub fn log_density_increments(&self, brownian_increments: &[f64], dt: f64) -> Vec<f64> {
        brownian_increments
            .iter()
            .enumerate()
            .map(|(k, &dw)| {
                let l = self.lambda_at(k as f64 * dt);
                -l * dw - 0.5 * l * l * dt
            })
            .collect()
    }
}

/// Largest finite exponent before `exp` overflows or underflows to zero.
const MAX_LOG: f64 = 709.0;
const MIN_LOG: f64 = -745.0;

/// exp(−½∫|λ^ν|² ds − ∫λ^ν dW) along one path, accumulated in log space by
/// the left-point rule.
pub fn density_along_path(mc: &MeasureChange, brownian_increments: &[f64], dt: f64) -> Result<f64> {
    let mut log_h = 0.0f64;
    let mut extreme = 0.0f64;
    for (k, &dw) in brownian_increments.iter().enumerate() {
        let l = mc.lambda_at(k as f64 * dt);
        log_h += -l * dw - 0.5 * l * l * dt;
        if log_h.abs() > extreme.abs() {
            extreme = log_h;
        }
    }
    if !(MIN_LOG..=MAX_LOG).contains(&log_h) || log_h.is_nan() {
        return Err(Error::DensityOverflow { max_exponent: extreme });
    }
    Ok(log_h.exp())
}

/// Left-point Riemann sum of δ_K(ν_s) sampled on a uniform step `dt`.
pub fn dual_penalty(support_values: &[f64], dt: f64) -> Result<f64> {
    let mut total = 0.0;
    for (k, &d) in support_values.iter().enumerate() {
        if !d.is_finite() {
            return Err(Error::InfeasibleControl { time: k as f64 * dt });
        }
        total += d * dt;
    }
    Ok(total)
}
