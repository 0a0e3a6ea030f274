use super::grid::Grid1D;
use super::solution::{PdeSolution, SchemeInfo, SolverKind};
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::numerics::solve_tridiagonal;
use crate::payoff::Payoff;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Explicit,
    Implicit,
    CrankNicolson,
    Theta(f64),
}

impl Scheme {
    pub fn theta(&self) -> f64 {
        match self {
            Scheme::Explicit => 0.0,
            Scheme::Implicit => 1.0,
            Scheme::CrankNicolson => 0.5,
            Scheme::Theta(t) => *t,
        }
    }
}

/// Terminal condition: a payoff, or values on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Payoff(Payoff),
    Values(Vec<f64>),
}

impl Terminal {
    pub(crate) fn on_grid(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let v = match self {
            Terminal::Payoff(p) => grid.nodes().iter().map(|&x| p.eval(x)).collect(),
            Terminal::Values(v) => {
                if v.len() != grid.len() {
                    return Err(Error::InvalidInput(format!(
                        "terminal table has {} values for {} nodes",
                        v.len(),
                        grid.len()
                    )));
                }
                v.clone()
            }
        };
        if v.iter().any(|x: &f64| !x.is_finite()) {
            return Err(Error::InvalidInput("terminal condition must be finite on the grid".into()));
        }
        Ok(v)
    }

    /// Dirichlet value at a far-field node for time-to-maturity `tau`.
    pub(crate) fn boundary(&self, grid: &Grid1D, edge: usize, rate: f64, tau: f64) -> f64 {
        match self {
            Terminal::Payoff(p) => p.asymptotic_value(grid.nodes()[edge], rate, tau),
            Terminal::Values(v) => (-rate * tau).exp() * v[edge],
        }
    }
}

/// Tridiagonal discretization of L v = a v_yy + b v_y − r v at interior
/// nodes. Convection falls back to upwinding where central differencing
/// would lose monotonicity.
#[derive(Debug, Clone)]
pub(crate) struct Operator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Operator {
    pub fn new(a: &[f64], b: &[f64], rate: f64, h: f64) -> Self {
        let n = a.len();
        let mut op = Operator { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
        for j in 1..n - 1 {
            op.set_row(j, a[j], b[j], rate, h);
        }
        op
    }

    pub fn set_row(&mut self, j: usize, a: f64, b: f64, rate: f64, h: f64) {
        let d = a / (h * h);
        let c = b / (2.0 * h);
        let (mut lo, mut up) = (d - c, d + c);
        let mut diag = -2.0 * d - rate;
        if lo < 0.0 || up < 0.0 {
            lo = d + (-b).max(0.0) / h;
            up = d + b.max(0.0) / h;
            diag = -2.0 * d - b.abs() / h - rate;
        }
        self.lower[j] = lo;
        self.diag[j] = diag;
        self.upper[j] = up;
    }

    pub fn apply(&self, v: &[f64], j: usize) -> f64 {
        self.lower[j] * v[j - 1] + self.diag[j] * v[j] + self.upper[j] * v[j + 1]
    }

    /// Largest dt for which the explicit part of a θ-step keeps positive
    /// weights.
    pub fn explicit_limit(&self, theta: f64) -> f64 {
        if theta >= 0.5 {
            return f64::INFINITY;
        }
        let worst = self.diag[1..self.diag.len() - 1].iter().fold(0.0f64, |m, d| m.max(-d));
        if worst == 0.0 {
            f64::INFINITY
        } else {
            1.0 / ((1.0 - 2.0 * theta) * worst)
        }
    }
}

/// One backward θ-step from `next` (at t_{n+1}) to `out` (at t_n).
pub(crate) struct Stepper {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    pub fn new(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n], scratch: Vec::with_capacity(n) }
    }

    pub fn step(&mut self, op: &Operator, theta: f64, dt: f64, next: &[f64], bc: (f64, f64), out: &mut Vec<f64>) {
        let n = next.len();
        out.clear();
        out.resize(n, 0.0);
        out[0] = bc.0;
        out[n - 1] = bc.1;
        for j in 1..n - 1 {
            out[j] = next[j] + (1.0 - theta) * dt * op.apply(next, j);
        }
        if theta == 0.0 {
            return;
        }
        self.lower[0] = 0.0;
        self.diag[0] = 1.0;
        self.upper[0] = 0.0;
        self.lower[n - 1] = 0.0;
        self.diag[n - 1] = 1.0;
        self.upper[n - 1] = 0.0;
        for j in 1..n - 1 {
            self.lower[j] = -theta * dt * op.lower[j];
            self.diag[j] = 1.0 - theta * dt * op.diag[j];
            self.upper[j] = -theta * dt * op.upper[j];
        }
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, out, &mut self.scratch);
    }
}

/// Diffusion and convection coefficients in the solver coordinate for a
/// price process with amount volatility `vol(x)` and pricing drift r x.
pub(crate) fn coefficients(grid: &Grid1D, vol: &dyn Fn(f64) -> f64, rate: f64) -> (Vec<f64>, Vec<f64>) {
    let x = grid.nodes();
    let n = x.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for j in 0..n {
        let s = vol(x[j]);
        if grid.is_log_space() {
            let sr = s / x[j];
            a[j] = 0.5 * sr * sr;
            b[j] = rate - a[j];
        } else {
            a[j] = 0.5 * s * s;
            b[j] = rate * x[j];
        }
    }
    (a, b)
}

pub(crate) fn check_stability(op: &Operator, grid: &Grid1D, theta: f64) -> Result<()> {
    let limit = op.explicit_limit(theta) / (1.0 + 1e-9);
    let worst_dt = grid.times().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if worst_dt > limit {
        return Err(Error::Stability { dt: worst_dt, limit });
    }
    Ok(())
}

/// Allowed undershoot below the terminal minimum before a solution is
/// declared non-monotone.
pub(crate) fn lower_bound_slack(terminal: &[f64]) -> f64 {
    1e-8 * (1.0 + terminal.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

pub(crate) fn terminal_floor(terminal: &[f64], rate: f64, maturity: f64) -> f64 {
    let min = terminal.iter().copied().fold(f64::INFINITY, f64::min);
    let df = (-rate.abs() * maturity).exp();
    min.min(min * df) - lower_bound_slack(terminal)
}

/// Backward θ-scheme for ∂_t v + ½ vol(x)² D²v + r x Dv − r v = 0.
pub fn solve_diffusion(vol: &dyn Fn(f64) -> f64, rate: f64, terminal: &Terminal, grid: &Grid1D, scheme: Scheme) -> Result<PdeSolution> {
    let theta = scheme.theta();
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, 1], got {theta}")));
    }
    let g = terminal.on_grid(grid)?;
    let (a, b) = coefficients(grid, vol, rate);
    let op = Operator::new(&a, &b, rate, grid.spacing());
    check_stability(&op, grid, theta)?;
    let n = grid.len();
    let times = grid.times();
    let steps = grid.time_steps();
    let maturity = grid.maturity();
    let floor = terminal_floor(&g, rate, maturity);
    let mut values = vec![Vec::new(); steps + 1];
    values[steps] = g;
    let mut stepper = Stepper::new(n);
    let mut out = Vec::with_capacity(n);
    for i in (0..steps).rev() {
        let dt = times[i + 1] - times[i];
        let tau = maturity - times[i];
        let bc = (terminal.boundary(grid, 0, rate, tau), terminal.boundary(grid, n - 1, rate, tau));
        stepper.step(&op, theta, dt, &values[i + 1], bc, &mut out);
        if let Some(j) = out.iter().position(|&v| v < floor || !v.is_finite()) {
            return Err(Error::Scheme(format!(
                "value {} at t={}, x={} falls below the terminal lower bound",
                out[j],
                times[i],
                grid.nodes()[j]
            )));
        }
        values[i] = out.clone();
    }
    let active = vec![vec![false; n]; steps + 1];
    Ok(PdeSolution::new(grid.clone(), values, active, SchemeInfo { kind: SolverKind::Linear, theta }))
}

/// Linear pricing equation of the model under the pricing measure.
pub fn solve_linear(model: &MarketModel, terminal: &Terminal, grid: &Grid1D, scheme: Scheme) -> Result<PdeSolution> {
    let m = *model;
    solve_diffusion(&move |x| m.vol_at(x), model.rate, terminal, grid, scheme)
}
