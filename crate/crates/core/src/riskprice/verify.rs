use super::quantile::{QuantileProblem, QuantileSolution};
use super::shortfall::ShortfallPrice;
use crate::analytic::PiecewiseAffine;
use crate::error::Result;
use crate::mc::{hedge_simulation, ClosedFormDelta, HedgeConfig, HedgeReport};
use crate::pde::{solve_linear, Grid1D, PdeSolution, Scheme, Terminal};

/// Where the verification hedge takes its deltas from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMethod {
    /// Closed form for the piecewise-affine hedged claim.
    ClosedForm,
    /// Linear PDE on a grid with `space_nodes` nodes, time nodes on the
    /// rebalancing dates.
    Pde { space_nodes: usize },
}

#[derive(Debug, Clone)]
pub struct HedgeVerification {
    pub report: HedgeReport,
    /// Price of the hedged claim from the delta source's own model, for
    /// comparison with the capital actually used.
    pub model_price: f64,
    pub capital: f64,
}

/// Sub-samples per cell when averaging a discontinuous claim onto nodes.
const CELL_SAMPLES: usize = 32;

/// Average of `claim` over each node's dual cell in the solver coordinate;
/// keeps the jumps of the hedged claims from costing first-order accuracy.
fn cell_averages(grid: &Grid1D, claim: &impl Fn(f64) -> f64) -> Vec<f64> {
    let y = grid.coords();
    let n = y.len();
    let to_x = |c: f64| if grid.is_log_space() { c.exp() } else { c };
    (0..n)
        .map(|j| {
            if j == 0 || j == n - 1 {
                return claim(grid.nodes()[j]);
            }
            let (a, b) = (0.5 * (y[j - 1] + y[j]), 0.5 * (y[j] + y[j + 1]));
            let sum: f64 = (0..CELL_SAMPLES)
                .map(|i| claim(to_x(a + (b - a) * (i as f64 + 0.5) / CELL_SAMPLES as f64)))
                .sum();
            sum / CELL_SAMPLES as f64
        })
        .collect()
}

/// Solves for the hedged claim on a grid whose time nodes coincide with the
/// rebalancing dates, so the hedge reads exact slices.
fn hedge_claim(
    problem: &QuantileProblem,
    claim: impl Fn(f64) -> f64,
    capital: f64,
    space_nodes: usize,
    config: &HedgeConfig,
) -> Result<HedgeVerification> {
    let tau = problem.tau();
    let m = &problem.model;
    let times = config.rebalance_times(tau);
    let grid = Grid1D::for_model(m, m.sigma, tau, space_nodes, times.len() - 1)?.with_times(times)?;
    let values = cell_averages(&grid, &claim);
    let sol: PdeSolution = solve_linear(m, &Terminal::Values(values), &grid, Scheme::Implicit)?;
    let report = hedge_simulation(&sol, m, &problem.payoff, capital, tau, config)?;
    Ok(HedgeVerification { model_price: sol.price_at(m.spot), report, capital })
}

/// Delta-hedges `g 1{q L >= beta g}` from the quantile price and reports how
/// often the original claim is covered.
pub fn verify_quantile_hedge(
    problem: &QuantileProblem,
    solution: &QuantileSolution,
    method: DeltaMethod,
    config: &HedgeConfig,
) -> Result<HedgeVerification> {
    let ev = problem.evaluator()?;
    let b = ev.law.discount();
    let q = solution.q_bar;
    let claim = |x: f64| {
        let g = problem.payoff.eval(x);
        if q * ev.law.density_of_price(x) >= b * g {
            g
        } else {
            0.0
        }
    };
    match method {
        DeltaMethod::Pde { space_nodes } => hedge_claim(problem, claim, solution.price, space_nodes, config),
        DeltaMethod::ClosedForm => {
            let mut breaks = problem.payoff.kinks();
            if q.is_finite() {
                breaks.extend(ev.breaks(q).into_iter().map(|z| ev.law.price_at(z)));
            }
            let h = PiecewiseAffine::interpolate(claim, &breaks)?;
            let tau = problem.tau();
            let m = &problem.model;
            let source = ClosedFormDelta(|t: f64, x: f64| h.delta(m, x, tau - t));
            let report = hedge_simulation(&source, m, &problem.payoff, solution.price, tau, config)?;
            Ok(HedgeVerification { model_price: h.price_delta(m, m.spot, tau).0, report, capital: solution.price })
        }
    }
}

/// Delta-hedges `(g - beta / (2 q L))^+` from the shortfall price; the
/// report's squared shortfall is the achieved risk.
pub fn verify_shortfall_hedge(
    problem: &QuantileProblem,
    solution: &ShortfallPrice,
    space_nodes: usize,
    config: &HedgeConfig,
) -> Result<HedgeVerification> {
    let ev = problem.evaluator()?;
    let q = solution.q_bar;
    let claim = |x: f64| {
        if q == 0.0 {
            0.0
        } else {
            ev.shortfall_wealth(q, x, ev.law.density_of_price(x))
        }
    };
    hedge_claim(problem, claim, solution.price, space_nodes, config)
}
