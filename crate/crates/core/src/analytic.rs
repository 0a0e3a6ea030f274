//! Closed-form benchmark prices.

use crate::constraints::{facelift_amount, ConstraintSet};
use crate::error::{Error, Result};
use crate::market::{Flavor, MarketModel};
use crate::numerics::normal::{norm_cdf, norm_pdf};
use crate::numerics::quadrature::{gaussian_expectation, QuadConfig};
pub use crate::payoff::{Payoff, Tabulated};

fn d1_d2(x: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> (f64, f64) {
    let s = sigma * tau.sqrt();
    let d1 = ((x / strike).ln() + (r + 0.5 * sigma * sigma) * tau) / s;
    (d1, d1 - s)
}

fn degenerate(sigma: f64, tau: f64) -> bool {
    sigma * tau.sqrt() <= 0.0
}

pub fn bs_call(x: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    let df = (-r * tau).exp();
    if degenerate(sigma, tau) {
        return (x - strike * df).max(0.0);
    }
    let (d1, d2) = d1_d2(x, strike, r, sigma, tau);
    x * norm_cdf(d1) - strike * df * norm_cdf(d2)
}

pub fn bs_put(x: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    let df = (-r * tau).exp();
    if degenerate(sigma, tau) {
        return (strike * df - x).max(0.0);
    }
    let (d1, d2) = d1_d2(x, strike, r, sigma, tau);
    strike * df * norm_cdf(-d2) - x * norm_cdf(-d1)
}

/// Discounted risk-neutral probability of X_T ≥ strike. In the zero-variance
/// limit the closed convention is used, so x = strike at tau = 0 gives 1.
pub fn bs_digital(x: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    let df = (-r * tau).exp();
    if degenerate(sigma, tau) {
        return if x * (r * tau).exp() >= strike { df } else { 0.0 };
    }
    let (_, d2) = d1_d2(x, strike, r, sigma, tau);
    df * norm_cdf(d2)
}

/// Call delta N(d₁).
pub fn bs_delta(x: f64, strike: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    if degenerate(sigma, tau) {
        return if x * (r * tau).exp() >= strike { 1.0 } else { 0.0 };
    }
    let (d1, _) = d1_d2(x, strike, r, sigma, tau);
    norm_cdf(d1)
}

/// Option to exchange s2 for s1: s1 N(d₁) − s2 N(d₂).
pub fn margrabe_exchange(s1: f64, s2: f64, sigma_eff: f64, tau: f64) -> f64 {
    if degenerate(sigma_eff, tau) {
        return (s1 - s2).max(0.0);
    }
    if s2 <= 0.0 {
        return s1;
    }
    let s = sigma_eff * tau.sqrt();
    let d1 = ((s1 / s2).ln() + 0.5 * s * s) / s;
    s1 * norm_cdf(d1) - s2 * norm_cdf(d1 - s)
}

/// Width of the Gaussian integration window, padded by the largest
/// exponential tilt the integrand carries.
pub(crate) fn gaussian_window(tilt: f64) -> f64 {
    10.0 + tilt.abs()
}

/// Value under the pricing measure of a European claim on a lognormal asset:
/// closed form where available, adaptive quadrature otherwise.
pub fn bs_price(payoff: &Payoff, x: f64, r: f64, sigma: f64, tau: f64) -> Result<f64> {
    Ok(match payoff {
        Payoff::Call { strike } => bs_call(x, *strike, r, sigma, tau),
        Payoff::Put { strike } => bs_put(x, *strike, r, sigma, tau),
        Payoff::Digital { strike } => bs_digital(x, *strike, r, sigma, tau),
        Payoff::Linear => x,
        Payoff::Tabulated(_) => {
            let df = (-r * tau).exp();
            let s = sigma * tau.sqrt();
            if s == 0.0 {
                return Ok(df * payoff.eval(x * (r * tau).exp()));
            }
            let m = (r - 0.5 * sigma * sigma) * tau;
            let breaks: Vec<f64> = payoff
                .kinks()
                .into_iter()
                .filter(|&k| k > 0.0)
                .map(|k| ((k / x).ln() - m) / s)
                .collect();
            let e = gaussian_expectation(
                |z| payoff.eval(x * (m + s * z).exp()),
                gaussian_window(s),
                &breaks,
                &QuadConfig::default(),
            )?;
            df * e
        }
    })
}

/// Constrained price E[ĝ(x0 + σ√T Z)] in the Brownian model with zero rate.
/// Returns +∞ when the face-lift diverges.
pub fn brownian_constrained_price(g: &Payoff, k: &ConstraintSet, x0: f64, sigma: f64, t: f64) -> Result<f64> {
    if k.dim() != 1 {
        return Err(Error::InvalidInput("payoff constraints are one-dimensional".into()));
    }
    let s = sigma * t.sqrt();
    let at_spot = facelift_amount(g, k, x0)?;
    if at_spot == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if s == 0.0 {
        return Ok(at_spot);
    }
    let breaks: Vec<f64> = g.kinks().into_iter().map(|c| (c - x0) / s).collect();
    let mut failure = None;
    let value = gaussian_expectation(
        |z| match facelift_amount(g, k, x0 + s * z) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        },
        gaussian_window(0.0),
        &breaks,
        &QuadConfig::default(),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// A claim that is affine on each of finitely many intervals, possibly with
/// jumps between them, priced and hedged in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffine {
    /// `(lo, hi, intercept, slope)`: value `intercept + slope * x` on `[lo, hi)`.
    pieces: Vec<(f64, f64, f64, f64)>,
    /// `ln lo` of each piece, NaN where `lo <= 0`.
    log_lo: Vec<f64>,
}

impl PiecewiseAffine {
    /// Reads off the affine pieces of `h` between the sorted `breaks`,
    /// sampling strictly inside each interval.
    pub fn interpolate(h: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<Self> {
        let mut b: Vec<f64> = breaks.iter().copied().filter(|v| v.is_finite()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        if b.is_empty() {
            b.push(0.0);
        }
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(&b);
        edges.push(f64::INFINITY);
        let mut pieces = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (u, v) = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)),
                (false, true) => (hi - 2.0 * hi.abs().max(1.0), hi - hi.abs().max(1.0)),
                (true, false) => (lo + lo.abs().max(1.0), lo + 2.0 * lo.abs().max(1.0)),
                (false, false) => (0.0, 1.0),
            };
            let slope = (h(v) - h(u)) / (v - u);
            let intercept = h(u) - slope * u;
            let mid = 0.5 * (u + v);
            let scale = h(u).abs().max(h(v).abs()).max(1.0);
            if (intercept + slope * mid - h(mid)).abs() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("claim is not affine on [{lo}, {hi})")));
            }
            pieces.push((lo, hi, intercept, slope));
        }
        let log_lo = pieces.iter().map(|p| if p.0 > 0.0 { p.0.ln() } else { f64::NAN }).collect();
        Ok(Self { pieces, log_lo })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = self.piece(x);
        p.2 + p.3 * x
    }

    fn piece(&self, x: f64) -> &(f64, f64, f64, f64) {
        let i = self.pieces.partition_point(|p| p.1 <= x).min(self.pieces.len() - 1);
        &self.pieces[i]
    }

    /// `(P[X_T >= k], E[X_T 1{X_T >= k}])` under the pricing measure and
    /// their derivatives in the spot.
    fn tail(model: &MarketModel, x: f64, tau: f64, k: f64) -> [f64; 4] {
        let r = model.rate;
        let g = (r * tau).exp();
        if k == f64::INFINITY {
            return [0.0; 4];
        }
        match model.flavor {
            Flavor::Geometric => {
                if k <= 0.0 {
                    return [1.0, x * g, 0.0, g];
                }
                let s = model.sigma * tau.sqrt();
                let d2 = ((x / k).ln() + (r - 0.5 * model.sigma * model.sigma) * tau) / s;
                let d1 = d2 + s;
                [norm_cdf(d2), x * g * norm_cdf(d1), norm_pdf(d2) / (x * s), g * (norm_cdf(d1) + norm_pdf(d1) / s)]
            }
            Flavor::Arithmetic => {
                let m = x * g;
                if k == f64::NEG_INFINITY {
                    return [1.0, m, 0.0, g];
                }
                let s = if r == 0.0 {
                    model.sigma * tau.sqrt()
                } else {
                    model.sigma * (((2.0 * r * tau).exp() - 1.0) / (2.0 * r)).sqrt()
                };
                let u = (m - k) / s;
                [norm_cdf(u), m * norm_cdf(u) + s * norm_pdf(u), g * norm_pdf(u) / s, g * (norm_cdf(u) + k * norm_pdf(u) / s)]
            }
        }
    }

    /// Delta alone, from the coefficient jumps at each finite edge.
    pub fn delta(&self, model: &MarketModel, x: f64, tau: f64) -> f64 {
        if tau <= 0.0 || model.sigma == 0.0 {
            return self.price_delta(model, x, tau).1;
        }
        let r = model.rate;
        let g = (r * tau).exp();
        let mut d = self.pieces[0].3 * g;
        match model.flavor {
            Flavor::Geometric => {
                let s = model.sigma * tau.sqrt();
                let c = x.ln() + (r - 0.5 * model.sigma * model.sigma) * tau;
                for (i, w) in self.pieces.windows(2).enumerate() {
                    let (da, db) = (w[1].2 - w[0].2, w[1].3 - w[0].3);
                    let k = w[1].0;
                    if (da == 0.0 && db == 0.0) || k <= 0.0 {
                        continue;
                    }
                    let d2 = (c - self.log_lo[i + 1]) / s;
                    let pdf2 = norm_pdf(d2);
                    // phi(d1) = phi(d2) k / (x e^{r tau})
                    d += da * pdf2 / (x * s) + db * g * (norm_cdf(d2 + s) + pdf2 * k / (x * g * s));
                }
            }
            Flavor::Arithmetic => {
                let s = if r == 0.0 {
                    model.sigma * tau.sqrt()
                } else {
                    model.sigma * (((2.0 * r * tau).exp() - 1.0) / (2.0 * r)).sqrt()
                };
                let m = x * g;
                for w in self.pieces.windows(2) {
                    let (da, db) = (w[1].2 - w[0].2, w[1].3 - w[0].3);
                    if da == 0.0 && db == 0.0 {
                        continue;
                    }
                    let k = w[1].0;
                    let u = (m - k) / s;
                    let pdf = norm_pdf(u);
                    d += da * g * pdf / s + db * g * (norm_cdf(u) + k * pdf / s);
                }
            }
        }
        (-r * tau).exp() * d
    }

    /// Price and delta at spot `x` with `tau` to maturity.
    pub fn price_delta(&self, model: &MarketModel, x: f64, tau: f64) -> (f64, f64) {
        let df = (-model.rate * tau.max(0.0)).exp();
        if tau <= 0.0 || model.sigma == 0.0 {
            // Deterministic growth at rate r in both flavors.
            let xt = x / df;
            let p = self.piece(xt);
            return (df * (p.2 + p.3 * xt), p.3);
        }
        let (mut v, mut d) = (0.0, 0.0);
        for &(lo, hi, a, b) in &self.pieces {
            let t0 = Self::tail(model, x, tau, lo);
            let t1 = Self::tail(model, x, tau, hi);
            v += a * (t0[0] - t1[0]) + b * (t0[1] - t1[1]);
            d += a * (t0[2] - t1[2]) + b * (t0[3] - t1[3]);
        }
        (df * v, df * d)
    }
}
