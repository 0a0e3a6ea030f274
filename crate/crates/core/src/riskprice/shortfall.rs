use super::loss::LossFunction;
use super::quantile::{Evaluator, QuantileProblem};
use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use crate::numerics::roots::{crossing_bracket, PositiveBracket};

/// Relative slack accepted when the shortfall bound sits at `-E[g^2]`.
const ENDPOINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ShortfallPrice {
    pub price: f64,
    /// 0 when nothing needs hedging, infinity for full super-replication.
    pub q_bar: f64,
    /// `E[((g - Y_T)^+)^2]` of the optimal terminal wealth, by quadrature.
    pub achieved_risk: f64,
    /// `E[g^2]`, the risk of holding nothing.
    pub max_risk: f64,
}

impl Evaluator<'_> {
    /// Terminal wealth `(g - beta / (2 q L))^+` of the optimal hedge.
    pub(crate) fn shortfall_wealth(&self, q: f64, x: f64, l: f64) -> f64 {
        (self.g.eval(x) - self.law.discount() / (2.0 * q * l)).max(0.0)
    }

    fn shortfall_breaks(&self, q: f64) -> Vec<f64> {
        let b = self.law.discount();
        let mut br = self.law.kink_breaks(self.g);
        br.extend(self.law.edges(|z| self.g.eval(self.law.price_at(z)) - b / (2.0 * q * self.law.density_at(z))));
        br
    }

    fn shortfall_risk(&self, q: f64) -> Result<f64> {
        self.law.expect(
            |x, l| {
                let s = self.g.eval(x) - self.shortfall_wealth(q, x, l);
                l * s * s
            },
            &self.shortfall_breaks(q),
        )
    }

    fn shortfall_cost(&self, q: f64) -> Result<f64> {
        let b = self.law.discount();
        self.law.expect(|x, l| b * self.shortfall_wealth(q, x, l), &self.shortfall_breaks(q))
    }

    fn second_moment(&self) -> Result<f64> {
        self.law.expect(|x, l| l * self.g.eval(x).powi(2), &self.law.kink_breaks(self.g))
    }
}

/// Least capital whose hedge keeps `E[((g - Y_T)^+)^2] <= -problem.level`.
pub fn shortfall_price_quadratic(problem: &QuantileProblem) -> Result<ShortfallPrice> {
    let p = problem.level;
    let ev = problem.evaluator()?;
    let max_risk = ev.second_moment()?;
    if p > 0.0 || p < -max_risk * (1.0 + ENDPOINT_TOLERANCE) {
        return Err(Error::Range(format!("shortfall target {p} outside [{}, 0]", -max_risk)));
    }
    if p == 0.0 {
        return Ok(ShortfallPrice { price: ev.full_price()?, q_bar: f64::INFINITY, achieved_risk: 0.0, max_risk });
    }
    if p <= -max_risk * (1.0 - ENDPOINT_TOLERANCE) {
        return Ok(ShortfallPrice { price: 0.0, q_bar: 0.0, achieved_risk: max_risk, max_risk });
    }
    let (_, hi) = crossing_bracket(|q| Ok(-ev.shortfall_risk(q)?), p, &PositiveBracket::default())?;
    Ok(ShortfallPrice { price: ev.shortfall_cost(hi)?, q_bar: hi, achieved_risk: ev.shortfall_risk(hi)?, max_risk })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortfallSolution {
    pub multiplier: f64,
    /// Optimal hedged fraction of the claim per scenario.
    pub ratios: Vec<f64>,
    pub budget: f64,
    pub risk: f64,
}

/// Ratio `1 - min(I(c D) / G, 1)` on `{G > 0}`, zero elsewhere.
fn ratio(loss: &LossFunction, c: f64, g: f64, d: f64) -> f64 {
    if g > 0.0 {
        1.0 - (loss.gradient_inverse(c * d) / g).min(1.0)
    } else {
        0.0
    }
}

fn budget(loss: &LossFunction, c: f64, scenarios: &[(f64, f64)]) -> f64 {
    let terms: Vec<f64> = scenarios.iter().map(|&(g, d)| d * ratio(loss, c, g, d) * g).collect();
    pairwise_sum(&terms) / scenarios.len() as f64
}

/// Minimizes `E[l((1 - phi) G)]` over `0 <= phi <= 1` subject to
/// `E[D phi G] = y`, on equally weighted scenarios `(G, D)` with
/// `D = beta dQ/dP`.
pub fn shortfall_optimal_ratio(loss: &LossFunction, scenarios: &[(f64, f64)], y: f64) -> Result<ShortfallSolution> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("no scenarios".into()));
    }
    for &(g, d) in scenarios {
        if !(g >= 0.0) || !g.is_finite() || !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidInput(format!("scenario needs G >= 0 and density > 0, got ({g}, {d})")));
        }
    }
    if scenarios.iter().all(|s| s.0 == 0.0) {
        return Err(Error::InvalidInput("claim vanishes on every scenario".into()));
    }
    let full = budget(loss, 0.0, scenarios);
    if !(y > 0.0 && y < full) {
        return Err(Error::InvalidInput(format!("budget {y} must lie in (0, {full})")));
    }
    let bracket = PositiveBracket { rel_tol: 1e-13, ..PositiveBracket::default() };
    let (_, c) = crossing_bracket(|c| Ok(-budget(loss, c, scenarios)), -y, &bracket)?;
    let ratios: Vec<f64> = scenarios.iter().map(|&(g, d)| ratio(loss, c, g, d)).collect();
    let risks: Vec<f64> = scenarios.iter().zip(&ratios).map(|(&(g, _), phi)| loss.eval((1.0 - phi) * g)).collect();
    Ok(ShortfallSolution {
        multiplier: c,
        budget: budget(loss, c, scenarios),
        risk: pairwise_sum(&risks) / scenarios.len() as f64,
        ratios,
    })
}
