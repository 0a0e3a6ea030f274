//! Book liquidation under price impact: terminal gain and its inverse, the
//! boundary at full liquidation, simulation of selling schedules and
//! premium upper bounds over schedule families.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::market::PiecewiseConstant;
use crate::mc::{estimate, map_paths, path_rng, McConfig, McEstimate};

/// Rejected (negative-price) paths tolerated before the run is refused.
const MAX_REJECTION_RATE: f64 = 0.01;
/// Resampling attempts per path before giving up on it.
const MAX_RESAMPLES: usize = 100;

/// Strictly increasing loss map onto the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiquidationLoss {
    Identity,
    /// `z^n` for odd `n`.
    OddPower(u32),
}

impl LiquidationLoss {
    pub fn odd_power(n: u32) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::InvalidInput(format!("loss power must be odd, got {n}")));
        }
        Ok(LiquidationLoss::OddPower(n))
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            LiquidationLoss::Identity => z,
            LiquidationLoss::OddPower(n) => z.powi(n as i32),
        }
    }

    pub fn inverse(&self, p: f64) -> Result<f64> {
        if !p.is_finite() {
            return Err(Error::Range(format!("loss level {p} is not finite")));
        }
        Ok(match *self {
            LiquidationLoss::Identity => p,
            LiquidationLoss::OddPower(1) => p,
            LiquidationLoss::OddPower(3) => p.cbrt(),
            LiquidationLoss::OddPower(n) => p.signum() * p.abs().powf(1.0 / n as f64),
        })
    }
}

/// Price `dX1 = X1 (mu dt + sigma dW) - X1 beta dL`, inventory sold `X2`,
/// cash `dY = X1 dL`, judged by `loss(Y_T + final block - target)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidationModel {
    pub mu: f64,
    pub sigma: f64,
    /// Price depression per unit sold.
    pub impact: f64,
    pub target: f64,
    pub loss: LiquidationLoss,
}

impl LiquidationModel {
    pub fn new(mu: f64, sigma: f64, impact: f64, target: f64, loss: LiquidationLoss) -> Result<Self> {
        if !(sigma >= 0.0) || !(impact >= 0.0) || !(target > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need sigma >= 0, impact >= 0, target > 0 (got {sigma}, {impact}, {target})"
            )));
        }
        Ok(Self { mu, sigma, impact, target, loss })
    }

    /// Proceeds of selling the remaining `1 - x2` at the impacted price.
    fn final_block(&self, x1: f64, x2: f64) -> f64 {
        let rest = 1.0 - x2;
        (x1 - x1 * self.impact * rest) * rest
    }
}

/// `loss(y + [x1 - x1 beta (1 - x2)] (1 - x2) - target)`.
pub fn terminal_psi(x1: f64, x2: f64, y: f64, model: &LiquidationModel) -> Result<f64> {
    check_state(x1, x2)?;
    Ok(model.loss.eval(y + model.final_block(x1, x2) - model.target))
}

/// The `y` with `terminal_psi(x1, x2, y) = p`.
pub fn psi_inverse(x1: f64, x2: f64, p: f64, model: &LiquidationModel) -> Result<f64> {
    check_state(x1, x2)?;
    Ok(model.loss.inverse(p)? - model.final_block(x1, x2) + model.target)
}

fn check_state(x1: f64, x2: f64) -> Result<()> {
    if !(x1 > 0.0) {
        return Err(Error::InvalidInput(format!("price must be positive, got {x1}")));
    }
    if !(0.0..=1.0).contains(&x2) {
        return Err(Error::InvalidInput(format!("sold inventory must lie in [0, 1], got {x2}")));
    }
    Ok(())
}

/// Selling schedule on `[t0, T]`, as a nonnegative rate.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// Sells `total` at a constant rate.
    Constant { total: f64 },
    /// Sells `total` at a rate proportional to `(1 - u)^power`, `u` the
    /// elapsed fraction of the horizon.
    FrontLoaded { total: f64, power: f64 },
    /// Tabulated rates in calendar time.
    TimeGrid(PiecewiseConstant),
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        match self {
            Schedule::Constant { total } | Schedule::FrontLoaded { total, .. } if !(*total >= 0.0) => {
                Err(Error::InvalidInput(format!("schedule total must be nonnegative, got {total}")))
            }
            Schedule::FrontLoaded { power, .. } if !(*power >= 0.0) => {
                Err(Error::InvalidInput(format!("front-loading power must be nonnegative, got {power}")))
            }
            Schedule::TimeGrid(r) if r.values().iter().any(|&v| !(v >= 0.0)) => {
                Err(Error::InvalidInput("schedule rates must be nonnegative".into()))
            }
            _ => Ok(()),
        }
    }

    /// Cumulative amount sold between `t0` and `t`.
    pub fn cumulative(&self, t0: f64, horizon: f64, t: f64) -> f64 {
        let len = horizon - t0;
        let u = ((t - t0) / len).clamp(0.0, 1.0);
        match self {
            Schedule::Constant { total } => total * u,
            Schedule::FrontLoaded { total, power } => total * (1.0 - (1.0 - u).powf(power + 1.0)),
            Schedule::TimeGrid(rates) => {
                let t = t.clamp(t0, horizon);
                let mut sum = 0.0;
                let knots = rates.knots();
                for (i, &v) in rates.values().iter().enumerate() {
                    let a = knots[i].max(t0);
                    let b = knots.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
                    if b > a {
                        sum += v * (b - a);
                    }
                }
                sum
            }
        }
    }

    pub fn total(&self, t0: f64, horizon: f64) -> f64 {
        self.cumulative(t0, horizon, horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiquidationRun {
    /// `(X1_T, X2_T, Y_T)` per path.
    pub terminal: Vec<(f64, f64, f64)>,
    pub psi: McEstimate,
    pub rejection_rate: f64,
}

impl LiquidationRun {
    /// `Y_T + final block - target` per path, with the cash started at 0.
    fn offsets(&self, model: &LiquidationModel, y0: f64) -> Vec<f64> {
        self.terminal.iter().map(|&(x1, x2, y)| y - y0 + model.final_block(x1, x2) - model.target).collect()
    }
}

/// Euler simulation of `schedule` from `(t0, x1, x2, y)` to `horizon`.
/// Each step applies the diffusion first, books the sale at that price and
/// then applies the impact. Paths whose price turns negative are redrawn.
pub fn simulate_schedule(
    model: &LiquidationModel,
    schedule: &Schedule,
    t0: f64,
    horizon: f64,
    x0: (f64, f64, f64),
    config: &McConfig,
) -> Result<LiquidationRun> {
    config.validate()?;
    schedule.validate()?;
    let (x1_0, x2_0, y0) = x0;
    check_state(x1_0, x2_0)?;
    if !(horizon > t0) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must exceed t0 = {t0}")));
    }
    if config.steps < 50 {
        return Err(Error::InvalidInput(format!("need at least 50 steps, got {}", config.steps)));
    }
    let total = schedule.total(t0, horizon);
    if total > 1.0 - x2_0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "schedule sells {total}, more than the remaining inventory {}",
            1.0 - x2_0
        )));
    }
    let steps = config.steps;
    let dt = (horizon - t0) / steps as f64;
    let sold: Vec<f64> = (0..=steps).map(|k| schedule.cumulative(t0, horizon, t0 + dt * k as f64)).collect();
    let runs = map_paths(config.paths, |p| {
        let mut rng = path_rng(config.seed, p as u64);
        let mut rejected = 0usize;
        'attempt: loop {
            let (mut x1, mut x2, mut y) = (x1_0, x2_0, y0);
            for k in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                let dl = sold[k + 1] - sold[k];
                let moved = x1 + x1 * model.mu * dt + x1 * model.sigma * dt.sqrt() * z;
                y += moved * dl;
                x1 = moved - moved * model.impact * dl;
                x2 += dl;
                if !(x1 > 0.0) {
                    rejected += 1;
                    if rejected > MAX_RESAMPLES {
                        return (None, rejected);
                    }
                    continue 'attempt;
                }
            }
            return (Some((x1, x2.min(1.0), y)), rejected);
        }
    });
    let mut terminal = Vec::with_capacity(config.paths);
    let mut rejected = 0usize;
    for (t, r) in runs {
        rejected += r;
        match t {
            Some(v) => terminal.push(v),
            None => return Err(Error::Rejection { rate: 1.0 }),
        }
    }
    let rate = rejected as f64 / (config.paths + rejected) as f64;
    if rate > MAX_REJECTION_RATE {
        return Err(Error::Rejection { rate });
    }
    let psi: Vec<f64> = terminal
        .iter()
        .map(|&(x1, x2, y)| model.loss.eval(y + model.final_block(x1, x2) - model.target))
        .collect();
    Ok(LiquidationRun { psi: estimate(&psi, &config.fingerprint())?, terminal, rejection_rate: rate })
}

/// Least `y` with `mean(loss(y + c_i)) >= p`.
fn least_premium(loss: LiquidationLoss, offsets: &[f64], p: f64) -> Result<f64> {
    let n = offsets.len() as f64;
    let first = offsets[0];
    if loss == LiquidationLoss::Identity {
        return Ok(p - offsets.iter().sum::<f64>() / n);
    }
    if offsets.iter().all(|&c| c == first) {
        return Ok(loss.inverse(p)? - first);
    }
    let f = |y: f64| offsets.iter().map(|&c| loss.eval(y + c)).sum::<f64>() / n;
    let centre = loss.inverse(p)? - offsets.iter().sum::<f64>() / n;
    let mut step = 1.0f64.max(centre.abs());
    let (mut lo, mut hi) = (centre - step, centre + step);
    let mut tries = 0;
    while f(lo) >= p || f(hi) < p {
        step *= 2.0;
        lo = centre - step;
        hi = centre + step;
        tries += 1;
        if tries > 200 {
            return Err(Error::Range(format!("no premium reaches loss level {p}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub schedule_id: usize,
    /// `None` when the schedule was skipped; see `note`.
    pub y_star: Option<f64>,
    pub e_psi: Option<McEstimate>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PremiumBound {
    pub y_star: f64,
    pub best: usize,
    pub rows: Vec<ScheduleResult>,
}

impl PremiumBound {
    /// Writes `schedule_id,y_star,e_psi,stderr` rows; skipped schedules
    /// have empty fields.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "schedule_id,y_star,e_psi,stderr")?;
        for r in &self.rows {
            match (&r.y_star, &r.e_psi) {
                (Some(y), Some(e)) => {
                    writeln!(out, "{},{},{},{}", r.schedule_id, fmt_f64(*y), fmt_f64(e.mean), fmt_f64(e.stderr))?
                }
                _ => writeln!(out, "{},,,", r.schedule_id)?,
            }
        }
        Ok(())
    }
}

/// Smallest premium over `family` meeting `E[loss] >= p`; an upper bound for
/// the premium over all schedules. Schedules that oversell are skipped.
pub fn premium_upper_bound(
    model: &LiquidationModel,
    p: f64,
    family: &[Schedule],
    t0: f64,
    horizon: f64,
    x0: (f64, f64),
    config: &McConfig,
) -> Result<PremiumBound> {
    if family.is_empty() {
        return Err(Error::InvalidInput("schedule family is empty".into()));
    }
    model.loss.inverse(p)?;
    let mut rows = Vec::with_capacity(family.len());
    let mut best: Option<(usize, f64)> = None;
    for (id, s) in family.iter().enumerate() {
        if s.total(t0, horizon) > 1.0 - x0.1 + 1e-12 {
            rows.push(ScheduleResult {
                schedule_id: id,
                y_star: None,
                e_psi: None,
                note: Some("sells more than the remaining inventory".into()),
            });
            continue;
        }
        let run = simulate_schedule(model, s, t0, horizon, (x0.0, x0.1, 0.0), config)?;
        let offsets = run.offsets(model, 0.0);
        let y = least_premium(model.loss, &offsets, p)?;
        let psi: Vec<f64> = offsets.iter().map(|c| model.loss.eval(y + c)).collect();
        let e = estimate(&psi, &config.fingerprint())?;
        if best.map_or(true, |(_, b)| y < b) {
            best = Some((id, y));
        }
        rows.push(ScheduleResult { schedule_id: id, y_star: Some(y), e_psi: Some(e), note: None });
    }
    let (best, y_star) = best.ok_or_else(|| Error::InvalidInput("every schedule oversells the inventory".into()))?;
    Ok(PremiumBound { y_star, best, rows })
}

/// Premium at full liquidation: nothing is left to sell, so the loss is
/// deterministic in `y` and the answer is `target + loss^{-1}(p)`.
pub fn boundary_full_liquidated(model: &LiquidationModel, p: f64) -> Result<f64> {
    Ok(model.target + model.loss.inverse(p)?)
}
