use crate::analytic::gaussian_window;
use crate::error::{Error, Result};
use crate::market::{Flavor, MarketModel};
use crate::numerics::quadrature::{gaussian_expectation, sign_changes, QuadConfig};
use crate::payoff::Payoff;

/// Scan resolution used to locate the edges of success sets.
const SCAN_CELLS: usize = 512;

/// Terminal price and P/Q density as functions of one standard normal `z`
/// under the pricing measure:
/// `X_T = x exp((r - s^2/2) tau + s sqrt(tau) z)` (geometric) or
/// `X_T = x + s sqrt(tau) z` (arithmetic, zero rate), and
/// `L = dP/dQ = exp(lambda sqrt(tau) z - lambda^2 tau / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalLaw {
    pub flavor: Flavor,
    pub spot: f64,
    pub sigma: f64,
    pub rate: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl TerminalLaw {
    pub fn new(model: &MarketModel, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(format!("time to maturity must be positive, got {tau}")));
        }
        if model.sigma == 0.0 {
            return Err(Error::SingularVolatility);
        }
        let lambda = match model.flavor {
            Flavor::Geometric => (model.mu - model.rate) / model.sigma,
            Flavor::Arithmetic => {
                if model.rate != 0.0 {
                    return Err(Error::InvalidInput(
                        "arithmetic risk criteria need a zero rate: the premium is state dependent otherwise".into(),
                    ));
                }
                model.mu / model.sigma
            }
        };
        Ok(Self { flavor: model.flavor, spot: model.spot, sigma: model.sigma, rate: model.rate, lambda, tau })
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.tau).exp()
    }

    fn sd(&self) -> f64 {
        self.sigma * self.tau.sqrt()
    }

    pub fn price_at(&self, z: f64) -> f64 {
        match self.flavor {
            Flavor::Geometric => self.spot * ((self.rate - 0.5 * self.sigma * self.sigma) * self.tau + self.sd() * z).exp(),
            Flavor::Arithmetic => self.spot + self.sd() * z,
        }
    }

    /// Inverse of [`price_at`](Self::price_at); `None` off the support.
    pub fn z_of(&self, x: f64) -> Option<f64> {
        match self.flavor {
            Flavor::Geometric => {
                if x <= 0.0 {
                    None
                } else {
                    Some(((x / self.spot).ln() - (self.rate - 0.5 * self.sigma * self.sigma) * self.tau) / self.sd())
                }
            }
            Flavor::Arithmetic => Some((x - self.spot) / self.sd()),
        }
    }

    pub fn density_at(&self, z: f64) -> f64 {
        let l = self.lambda * self.tau.sqrt();
        (l * z - 0.5 * l * l).exp()
    }

    /// dP/dQ as a function of the terminal price.
    pub fn density_of_price(&self, x: f64) -> f64 {
        match self.z_of(x) {
            Some(z) => self.density_at(z),
            None => 0.0,
        }
    }

    pub fn window(&self) -> f64 {
        gaussian_window(self.lambda.abs() * self.tau.sqrt() + self.sd())
    }

    /// Payoff kinks mapped to `z`.
    pub fn kink_breaks(&self, g: &Payoff) -> Vec<f64> {
        g.kinks().into_iter().filter_map(|k| self.z_of(k)).collect()
    }

    /// Sign changes of `h` in `z` inside the integration window.
    pub fn edges<F: FnMut(f64) -> f64>(&self, h: F) -> Vec<f64> {
        let w = self.window();
        sign_changes(h, -w, w, SCAN_CELLS)
    }

    /// Pricing-measure expectation of `f(X_T, L)` with extra breakpoints.
    pub fn expect<F: FnMut(f64, f64) -> f64>(&self, mut f: F, breaks: &[f64]) -> Result<f64> {
        gaussian_expectation(|z| f(self.price_at(z), self.density_at(z)), self.window(), breaks, &QuadConfig::default())
    }
}
