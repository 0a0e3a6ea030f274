use super::grid::Grid1D;
use super::linear::{check_stability, coefficients, terminal_floor, Operator, Scheme, Stepper, Terminal};
use super::solution::{PdeSolution, SchemeInfo, SolverKind};
use crate::constraints::{
    facelift_amount, facelift_amount_grid, facelift_proportion, facelift_proportion_grid, ConstraintSet, ProportionRange,
};
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::payoff::Payoff;

/// Where the constraint acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// On the amount held in the asset: Dv ∈ K.
    Amount,
    /// On the proportion of wealth held in the asset: x Dv / v ∈ K. The
    /// range only affects the terminal lift; the slice projection enforces
    /// the gradient constraint, which is the lift over the support domain.
    Proportion(ProportionRange),
}

#[derive(Debug, Clone)]
pub enum PdeOutcome {
    Solved(PdeSolution),
    /// The face-lifted terminal condition is infinite: no finite
    /// super-hedging price exists.
    InfinitePrice,
}

impl PdeOutcome {
    pub fn solution(&self) -> Option<&PdeSolution> {
        match self {
            PdeOutcome::Solved(s) => Some(s),
            PdeOutcome::InfinitePrice => None,
        }
    }

    pub fn price_at(&self, x: f64) -> f64 {
        match self {
            PdeOutcome::Solved(s) => s.price_at(x),
            PdeOutcome::InfinitePrice => f64::INFINITY,
        }
    }
}

/// Constrained super-hedging price by operator splitting: each backward
/// step applies the linear θ-step, then face-lifts the slice, which is the
/// exact projection onto the gradient constraint in one dimension.
pub fn solve_constrained(
    model: &MarketModel,
    g: &Payoff,
    k: &ConstraintSet,
    grid: &Grid1D,
    scheme: Scheme,
    kind: ConstraintKind,
) -> Result<PdeOutcome> {
    if k.dim() != 1 {
        return Err(Error::InvalidInput("the pricing equation has a single risky asset".into()));
    }
    let theta = scheme.theta();
    let nodes = grid.nodes();
    let lifted: Vec<f64> = match kind {
        ConstraintKind::Amount => nodes.iter().map(|&x| facelift_amount(g, k, x)).collect::<Result<_>>()?,
        ConstraintKind::Proportion(range) => {
            if !grid.is_log_space() {
                return Err(Error::InvalidInput("proportion constraints need a log-space grid".into()));
            }
            if g.lower_bound() < 0.0 {
                return Err(Error::InvalidInput("proportion constraints need a nonnegative payoff".into()));
            }
            nodes.iter().map(|&x| facelift_proportion(g, k, x, range)).collect::<Result<_>>()?
        }
    };
    if lifted.iter().any(|v| !v.is_finite()) {
        return Ok(PdeOutcome::InfinitePrice);
    }
    let terminal_active: Vec<bool> = lifted
        .iter()
        .zip(nodes)
        .map(|(v, &x)| *v > g.eval(x) + 1e-14 * (1.0 + v.abs()))
        .collect();

    let m = *model;
    let (a, b) = coefficients(grid, &move |x| m.vol_at(x), model.rate);
    let op = Operator::new(&a, &b, model.rate, grid.spacing());
    check_stability(&op, grid, theta)?;
    let n = grid.len();
    let times = grid.times();
    let steps = grid.time_steps();
    let maturity = grid.maturity();
    let floor = {
        let raw: Vec<f64> = nodes.iter().map(|&x| g.eval(x)).collect();
        terminal_floor(&raw, model.rate, maturity).min(g.lower_bound().min(0.0))
    };
    let mut values = vec![Vec::new(); steps + 1];
    let mut active = vec![Vec::new(); steps + 1];
    active[steps] = terminal_active;
    // Edges where the lift is idle keep the payoff's own far-field value, so
    // that an inactive constraint reproduces the linear solve exactly.
    let edge_lifted = [active[steps][0], active[steps][n - 1]];
    let edge = (lifted[0], lifted[n - 1]);
    let plain = Terminal::Payoff(g.clone());
    values[steps] = lifted;
    let mut stepper = Stepper::new(n);
    let mut out = Vec::with_capacity(n);
    for i in (0..steps).rev() {
        let dt = times[i + 1] - times[i];
        let tau = maturity - times[i];
        let df = (-model.rate * tau).exp();
        let bc = (
            if edge_lifted[0] { df * edge.0 } else { plain.boundary(grid, 0, model.rate, tau) },
            if edge_lifted[1] { df * edge.1 } else { plain.boundary(grid, n - 1, model.rate, tau) },
        );
        stepper.step(&op, theta, dt, &values[i + 1], bc, &mut out);
        let mask = match kind {
            ConstraintKind::Amount => facelift_amount_grid(nodes, &mut out, k),
            ConstraintKind::Proportion(_) => facelift_proportion_grid(grid.coords(), &mut out, k),
        };
        if let Some(j) = out.iter().position(|&v| v < floor || !v.is_finite()) {
            return Err(Error::Scheme(format!(
                "value {} at t={}, x={} falls below the payoff lower bound",
                out[j],
                times[i],
                nodes[j]
            )));
        }
        values[i] = out.clone();
        active[i] = mask;
    }
    Ok(PdeOutcome::Solved(PdeSolution::new(
        grid.clone(),
        values,
        active,
        SchemeInfo { kind: SolverKind::Constrained, theta },
    )))
}
