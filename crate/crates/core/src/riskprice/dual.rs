use rand::Rng;
use rand_distr::StandardNormal;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::market::{Flavor, MarketModel, PiecewiseConstant};
use crate::mc::{estimate, map_paths, path_rng, McConfig, McEstimate};
use crate::payoff::Payoff;

/// Dual control: a drift perturbation of the price under `Q^nu`, which moves
/// as `dX = (r X + nu / beta_t) dt + a(X) dW` and is charged `delta_K(nu)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DualControl {
    /// Deterministic schedule in calendar time.
    Schedule(PiecewiseConstant),
    /// Zero until `switch`, then constant, chosen from the price at `switch`
    /// to carry it to the best lift target `argmax_y g(x + y) - delta_K(y)`,
    /// pushed `overshoot` further in the same direction.
    TerminalLift { switch: f64, overshoot: f64 },
}

impl DualControl {
    pub fn constant(nu: f64) -> Self {
        DualControl::Schedule(PiecewiseConstant::constant(nu))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualBound {
    pub controls: Vec<DualControl>,
    /// One estimate of `E^{Q^nu}[beta_T g(X_T) - int delta_K(nu)]` per control.
    pub estimates: Vec<McEstimate>,
    pub best: usize,
}

impl DualBound {
    pub fn best_estimate(&self) -> &McEstimate {
        &self.estimates[self.best]
    }

    pub fn best_control(&self) -> &DualControl {
        &self.controls[self.best]
    }
}

/// Best lift shift among the payoff kinks, exact for piecewise-linear claims.
fn lift_target(g: &Payoff, k: &ConstraintSet, x: f64) -> f64 {
    let mut best = (g.eval(x), 0.0);
    for kink in g.kinks() {
        let y = kink - x;
        let v = g.eval(kink) - k.support_1d(y);
        if v > best.0 {
            best = (v, y);
        }
    }
    best.1
}

/// `int_a^b e^{r s} ds`.
fn growth_integral(r: f64, a: f64, b: f64) -> f64 {
    if r == 0.0 {
        b - a
    } else {
        ((r * b).exp() - (r * a).exp()) / r
    }
}

/// One interval on which the control is constant.
struct Piece {
    start: f64,
    end: f64,
    /// Schedule value, or `None` for the lift decided at `start`.
    nu: Option<f64>,
}

fn pieces(control: &DualControl, horizon: f64) -> Vec<Piece> {
    match control {
        DualControl::Schedule(s) => {
            let mut cuts: Vec<f64> = s.knots().iter().copied().filter(|&t| t < horizon).collect();
            cuts.push(horizon);
            cuts.windows(2).map(|w| Piece { start: w[0], end: w[1], nu: Some(s.value_at(w[0])) }).collect()
        }
        DualControl::TerminalLift { switch, .. } => {
            let mut v = Vec::with_capacity(2);
            if *switch > 0.0 {
                v.push(Piece { start: 0.0, end: *switch, nu: Some(0.0) });
            }
            v.push(Piece { start: *switch, end: horizon, nu: None });
            v
        }
    }
}

/// Moves `x` over `[a, b]` under `Q^nu` with `nu` constant. Arithmetic
/// steps are exact; geometric ones use `substeps` Euler steps unless
/// `nu = 0`, where the lognormal step is exact.
fn advance(model: &MarketModel, x: f64, nu: f64, a: f64, b: f64, substeps: usize, rng: &mut impl Rng) -> f64 {
    let r = model.rate;
    let len = b - a;
    match model.flavor {
        Flavor::Arithmetic => {
            let noise = if r == 0.0 { len.sqrt() } else { (((2.0 * r * len).exp() - 1.0) / (2.0 * r)).sqrt() };
            let z: f64 = rng.sample(StandardNormal);
            x * (r * len).exp() + nu * (r * b).exp() * len + model.sigma * noise * z
        }
        Flavor::Geometric if nu == 0.0 => {
            let z: f64 = rng.sample(StandardNormal);
            let s = model.sigma;
            x * ((r - 0.5 * s * s) * len + s * len.sqrt() * z).exp()
        }
        Flavor::Geometric => {
            let dt = len / substeps as f64;
            let mut x = x;
            for i in 0..substeps {
                let t = a + dt * i as f64;
                let z: f64 = rng.sample(StandardNormal);
                x += (r * x + nu * (r * t).exp()) * dt + model.sigma * x * dt.sqrt() * z;
            }
            x
        }
    }
}

/// Estimates `E^{Q^nu}[beta_T g(X_T) - int delta_K(nu)]` for each control
/// over `[0, horizon]` and returns the best. Every value is a lower bound
/// for the constrained super-hedging price. `config.steps` sets the Euler
/// resolution where stepping is not exact.
pub fn dual_lower_bound(
    model: &MarketModel,
    g: &Payoff,
    k: &ConstraintSet,
    horizon: f64,
    controls: &[DualControl],
    config: &McConfig,
) -> Result<DualBound> {
    config.validate()?;
    if k.dim() != 1 {
        return Err(Error::InvalidInput("dual controls are one-dimensional".into()));
    }
    if controls.is_empty() {
        return Err(Error::InvalidInput("no dual controls given".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let r = model.rate;
    let beta_t = (-r * horizon).exp();
    let mut estimates = Vec::with_capacity(controls.len());
    for (ci, control) in controls.iter().enumerate() {
        match control {
            DualControl::Schedule(s) => {
                for (j, &v) in s.values().iter().enumerate() {
                    if !k.support_1d(v).is_finite() {
                        return Err(Error::InfeasibleControl { time: s.knots()[j] });
                    }
                }
            }
            DualControl::TerminalLift { switch, overshoot } => {
                if !(*switch >= 0.0 && *switch < horizon) || !(*overshoot >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "lift control needs 0 <= switch < {horizon} and overshoot >= 0"
                    )));
                }
            }
        }
        let plan = pieces(control, horizon);
        let overshoot = match control {
            DualControl::TerminalLift { overshoot, .. } => *overshoot,
            DualControl::Schedule(_) => 0.0,
        };
        let samples = map_paths(config.paths, |p| {
            let mut rng = path_rng(config.seed, p as u64);
            let mut x = model.spot;
            let mut penalty = 0.0;
            for piece in &plan {
                let nu = piece.nu.unwrap_or_else(|| {
                    let y = lift_target(g, k, x);
                    let shift = if y == 0.0 { 0.0 } else { y + overshoot * y.signum() };
                    shift / growth_integral(r, piece.start, piece.end)
                });
                let len = piece.end - piece.start;
                penalty += k.support_1d(nu) * len;
                let substeps = ((config.steps as f64 * len / horizon).ceil() as usize).max(1);
                x = advance(model, x, nu, piece.start, piece.end, substeps, &mut rng);
            }
            beta_t * g.eval(x) - penalty
        });
        let fp = format!("{};control={ci}", config.fingerprint());
        estimates.push(estimate(&samples, &fp)?);
    }
    let best = (0..estimates.len())
        .max_by(|&a, &b| estimates[a].mean.total_cmp(&estimates[b].mean))
        .unwrap_or(0);
    Ok(DualBound { controls: controls.to_vec(), estimates, best })
}
