use super::law::TerminalLaw;
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::numerics::roots::{crossing_bracket, PositiveBracket};
use crate::payoff::Payoff;

/// A jump in success probability across the root bigger than this is
/// treated as an atom of the threshold event.
const ATOM_TOLERANCE: f64 = 1e-6;

/// Claim `g` on `model` (spot = price at time `t`) maturing at `maturity`,
/// with target `level`: a success probability in `[0, 1]` for quantile
/// hedging, or a nonpositive bound `-E[loss]` for shortfall hedging.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileProblem {
    pub model: MarketModel,
    pub payoff: Payoff,
    pub t: f64,
    pub maturity: f64,
    pub level: f64,
}

impl QuantileProblem {
    pub fn new(model: MarketModel, payoff: Payoff, t: f64, maturity: f64, level: f64) -> Result<Self> {
        if !(maturity > t) {
            return Err(Error::InvalidInput(format!("maturity {maturity} must exceed t = {t}")));
        }
        if !level.is_finite() {
            return Err(Error::InvalidInput("target level must be finite".into()));
        }
        Ok(Self { model, payoff, t, maturity, level })
    }

    pub fn with_level(&self, level: f64) -> Self {
        Self { level, ..self.clone() }
    }

    pub fn tau(&self) -> f64 {
        self.maturity - self.t
    }

    pub(crate) fn evaluator(&self) -> Result<Evaluator<'_>> {
        Ok(Evaluator { law: TerminalLaw::new(&self.model, self.tau())?, g: &self.payoff })
    }
}

/// Expectations over the one-dimensional terminal law for a fixed claim.
pub(crate) struct Evaluator<'a> {
    pub law: TerminalLaw,
    pub g: &'a Payoff,
}

impl Evaluator<'_> {
    fn beta(&self) -> f64 {
        self.law.discount()
    }

    /// Payoff kinks plus the edges of the success set `{q L >= beta g}`.
    pub(crate) fn breaks(&self, q: f64) -> Vec<f64> {
        let b = self.beta();
        let mut br = self.law.kink_breaks(self.g);
        br.extend(self.law.edges(|z| q * self.law.density_at(z) - b * self.g.eval(self.law.price_at(z))));
        br
    }

    pub fn w(&self, q: f64) -> Result<f64> {
        let b = self.beta();
        self.law.expect(|x, l| (q * l - b * self.g.eval(x)).max(0.0), &self.breaks(q))
    }

    /// `P[q L >= beta g]`.
    pub fn probability(&self, q: f64) -> Result<f64> {
        let b = self.beta();
        self.law.expect(|x, l| if q * l >= b * self.g.eval(x) { l } else { 0.0 }, &self.breaks(q))
    }

    /// Pricing-measure cost of `g` restricted to `{q L >= beta g}`.
    pub fn cost(&self, q: f64) -> Result<f64> {
        let b = self.beta();
        self.law.expect(
            |x, l| {
                let v = b * self.g.eval(x);
                if q * l >= v {
                    v
                } else {
                    0.0
                }
            },
            &self.breaks(q),
        )
    }

    pub fn full_price(&self) -> Result<f64> {
        let b = self.beta();
        self.law.expect(|x, _| b * self.g.eval(x), &self.law.kink_breaks(self.g))
    }

    /// `P[g(X_T) <= 0]`, reached for free.
    pub fn free_probability(&self) -> Result<f64> {
        self.law.expect(|x, l| if self.g.eval(x) <= 0.0 { l } else { 0.0 }, &self.law.kink_breaks(self.g))
    }
}

/// `w(q) = E^Q[(q dP/dQ - beta g(X_T))^+]`.
pub fn dual_objective_w(problem: &QuantileProblem, q: f64) -> Result<f64> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidInput(format!("dual variable must be finite and nonnegative, got {q}")));
    }
    problem.evaluator()?.w(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSolution {
    pub price: f64,
    /// Dual variable at the optimum; 0 and infinity mark the endpoints.
    pub q_bar: f64,
    pub achieved: f64,
    /// Success probability jumps across the root; see [`success_ratio_price`].
    pub atom: bool,
}

fn check_claim(g: &Payoff) -> Result<()> {
    if g.is_identically_zero() {
        return Err(Error::InvalidInput("claim is identically zero".into()));
    }
    Ok(())
}

/// Least capital that covers the claim with probability `problem.level`.
pub fn quantile_price(problem: &QuantileProblem) -> Result<QuantileSolution> {
    let p = problem.level;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("success probability must lie in [0, 1], got {p}")));
    }
    check_claim(&problem.payoff)?;
    let ev = problem.evaluator()?;
    if p == 1.0 {
        return Ok(QuantileSolution { price: ev.full_price()?, q_bar: f64::INFINITY, achieved: 1.0, atom: false });
    }
    let free = ev.free_probability()?;
    if p == 0.0 || free >= p {
        return Ok(QuantileSolution { price: 0.0, q_bar: 0.0, achieved: free, atom: false });
    }
    let (lo, hi) = crossing_bracket(|q| ev.probability(q), p, &PositiveBracket::default())?;
    let achieved = ev.probability(hi)?;
    let atom = achieved - ev.probability(lo)? > ATOM_TOLERANCE;
    Ok(QuantileSolution { price: ev.cost(hi)?, q_bar: hi, achieved, atom })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessRatioSolution {
    /// Threshold in the dual variable: the test is one on `{q L > beta g}`.
    pub q_hat: f64,
    /// The same threshold against `dQ_G/dQ`: `c = E^Q[beta g] / q`.
    pub c_hat: f64,
    /// Randomization on the boundary `{q L = beta g}`.
    pub gamma: f64,
    /// Attained `E[phi]`.
    pub ratio: f64,
    pub budget: f64,
}

/// Largest expected success ratio `E[phi]` over randomized tests
/// `0 <= phi <= 1` with `E^Q[beta g phi] <= y`.
pub fn success_ratio_price(problem: &QuantileProblem, y: f64) -> Result<SuccessRatioSolution> {
    check_claim(&problem.payoff)?;
    if !(y > 0.0) {
        return Err(Error::InvalidInput(format!("budget must be positive, got {y}")));
    }
    let ev = problem.evaluator()?;
    let full = ev.full_price()?;
    if y >= full {
        return Ok(SuccessRatioSolution { q_hat: f64::INFINITY, c_hat: 0.0, gamma: 1.0, ratio: 1.0, budget: full });
    }
    let (lo, hi) = crossing_bracket(|q| ev.cost(q), y, &PositiveBracket::default())?;
    let (b_lo, b_hi) = (ev.cost(lo)?, ev.cost(hi)?);
    let (p_lo, p_hi) = (ev.probability(lo)?, ev.probability(hi)?);
    let jump = b_hi - b_lo;
    let (gamma, ratio, budget) = if jump > ATOM_TOLERANCE * full {
        let gamma = ((y - b_lo) / jump).clamp(0.0, 1.0);
        (gamma, p_lo + gamma * (p_hi - p_lo), y)
    } else {
        (0.0, p_hi, b_hi)
    };
    Ok(SuccessRatioSolution { q_hat: hi, c_hat: full / hi, gamma, ratio, budget })
}
