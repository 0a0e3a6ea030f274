use super::grid::Grid1D;
use super::linear::{check_stability, terminal_floor, Operator, Scheme, Stepper, Terminal};
use super::solution::{PdeSolution, SchemeInfo, SolverKind};
use crate::error::{Error, Result};
use crate::payoff::Payoff;

pub const POLICY_TOLERANCE: f64 = 1e-10;
pub const POLICY_MAX_SWEEPS: usize = 200;

/// Discrete Γ-sign indicator in log coordinates: v_yy − v_y ≥ 0 means
/// x² D²v ≥ 0, which selects the high volatility.
fn convex_nodes(v: &[f64], h: f64, out: &mut [bool]) {
    let n = v.len();
    for j in 1..n - 1 {
        let vyy = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
        let vy = (v[j + 1] - v[j - 1]) / (2.0 * h);
        out[j] = vyy - vy >= 0.0;
    }
}

fn set_policy(op: &mut Operator, policy: &[bool], a_lo: f64, a_hi: f64, r: f64, h: f64) {
    for j in 1..policy.len() - 1 {
        let a = if policy[j] { a_hi } else { a_lo };
        op.set_row(j, a, r - a, r, h);
    }
}

/// Black–Scholes–Barenblatt equation ∂_t v + sup_{σ∈[σ_lo,σ_hi]} ½σ²x²D²v
/// + r x Dv − r v = 0 on a log grid. The explicit scheme picks σ per node
/// from the sign of the previous slice's second difference; the implicit
/// scheme runs policy iteration on the two-valued control at each step.
pub fn solve_bsb(payoff: &Payoff, sigma_lo: f64, sigma_hi: f64, r: f64, grid: &Grid1D, scheme: Scheme) -> Result<PdeSolution> {
    if !(0.0 <= sigma_lo && sigma_lo <= sigma_hi && sigma_hi.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 ≤ sigma_lo ≤ sigma_hi < ∞, got [{sigma_lo}, {sigma_hi}]")));
    }
    if !grid.is_log_space() {
        return Err(Error::InvalidInput("the Barenblatt solver runs on a log-space grid".into()));
    }
    let theta = match scheme {
        Scheme::Explicit => 0.0,
        Scheme::Implicit => 1.0,
        other => {
            return Err(Error::InvalidInput(format!(
                "the Barenblatt solver is explicit or implicit, got {other:?}"
            )))
        }
    };
    let terminal = Terminal::Payoff(payoff.clone());
    let g = terminal.on_grid(grid)?;
    let n = grid.len();
    let h = grid.spacing();
    let (a_lo, a_hi) = (0.5 * sigma_lo * sigma_lo, 0.5 * sigma_hi * sigma_hi);
    let mut op = Operator::new(&vec![a_hi; n], &vec![r - a_hi; n], r, h);
    check_stability(&op, grid, theta)?;

    let times = grid.times();
    let steps = grid.time_steps();
    let maturity = grid.maturity();
    let floor = terminal_floor(&g, r, maturity);
    let mut values = vec![Vec::new(); steps + 1];
    values[steps] = g;
    let mut policy = vec![true; n];
    let mut previous_policy = vec![true; n];
    let mut stepper = Stepper::new(n);
    let mut out = Vec::with_capacity(n);
    let mut iterate = Vec::with_capacity(n);
    for i in (0..steps).rev() {
        let dt = times[i + 1] - times[i];
        let tau = maturity - times[i];
        let bc = (terminal.boundary(grid, 0, r, tau), terminal.boundary(grid, n - 1, r, tau));
        convex_nodes(&values[i + 1], h, &mut policy);
        set_policy(&mut op, &policy, a_lo, a_hi, r, h);
        stepper.step(&op, theta, dt, &values[i + 1], bc, &mut out);
        if theta > 0.0 {
            let mut sweeps = 1;
            loop {
                previous_policy.copy_from_slice(&policy);
                convex_nodes(&out, h, &mut policy);
                if policy == previous_policy {
                    break;
                }
                set_policy(&mut op, &policy, a_lo, a_hi, r, h);
                stepper.step(&op, theta, dt, &values[i + 1], bc, &mut iterate);
                let scale = 1.0 + out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let residual = out.iter().zip(&iterate).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
                std::mem::swap(&mut out, &mut iterate);
                sweeps += 1;
                if residual < POLICY_TOLERANCE {
                    break;
                }
                if sweeps >= POLICY_MAX_SWEEPS {
                    return Err(Error::Iteration { sweeps, residual });
                }
            }
        }
        if let Some(j) = out.iter().position(|&v| v < floor || !v.is_finite()) {
            return Err(Error::Scheme(format!("value {} at x={} falls below the payoff lower bound", out[j], grid.nodes()[j])));
        }
        values[i] = out.clone();
    }
    let active = vec![vec![false; n]; steps + 1];
    Ok(PdeSolution::new(grid.clone(), values, active, SchemeInfo { kind: SolverKind::Barenblatt, theta }))
}
