use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::estimate::{estimate, map_paths, path_rng, McConfig, McEstimate};
use super::paths::{step_exact, Measure};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::market::MarketModel;
use crate::numerics::pairwise_sum;
use crate::payoff::Payoff;
use crate::pde::{clustered_times, PdeSolution};

/// Hedge ratio as a function of calendar time and price.
pub trait DeltaSource: Sync {
    /// Units of the asset to hold at `(t, x)`, and whether the source had to
    /// extrapolate to answer.
    fn delta(&self, t: f64, x: f64) -> (f64, bool);
}

/// Wraps a closure `(t, x) -> delta`.
pub struct ClosedFormDelta<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> DeltaSource for ClosedFormDelta<F> {
    fn delta(&self, t: f64, x: f64) -> (f64, bool) {
        ((self.0)(t, x), false)
    }
}

/// Holds no asset; wealth just accrues interest.
pub struct ZeroDelta;

impl DeltaSource for ZeroDelta {
    fn delta(&self, _t: f64, _x: f64) -> (f64, bool) {
        (0.0, false)
    }
}

/// Uses the stored gradient of the last time slice not after `t`.
impl DeltaSource for PdeSolution {
    fn delta(&self, t: f64, x: f64) -> (f64, bool) {
        self.delta_at(self.time_index(t), x)
    }
}

const COVERAGE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RebalanceGrid {
    Uniform,
    /// `t_k = T (1 - (1 - k/m)^power)`, denser near maturity.
    Clustered { power: f64 },
}

impl RebalanceGrid {
    pub fn times(&self, horizon: f64, count: usize) -> Vec<f64> {
        match *self {
            RebalanceGrid::Uniform => clustered_times(horizon, count, 1.0),
            RebalanceGrid::Clustered { power } => clustered_times(horizon, count, power),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeConfig {
    /// Paths and seed; `steps` is the number of rebalancing intervals.
    pub mc: McConfig,
    pub grid: RebalanceGrid,
    pub measure: Measure,
    /// A path counts as a success when `Y_T >= g(X_T) - tolerance`.
    pub success_tolerance: f64,
}

impl HedgeConfig {
    pub fn new(mc: McConfig) -> Self {
        Self { mc, grid: RebalanceGrid::Uniform, measure: Measure::Statistical, success_tolerance: 0.0 }
    }

    pub fn rebalance_times(&self, horizon: f64) -> Vec<f64> {
        self.grid.times(horizon, self.mc.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeReport {
    pub terminal_price: Vec<f64>,
    pub terminal_wealth: Vec<f64>,
    /// `Y_T - g(X_T)` per path.
    pub path_error: Vec<f64>,
    pub error: McEstimate,
    /// `((g(X_T) - Y_T)^+)^2` per path.
    pub squared_shortfall: McEstimate,
    pub success: McEstimate,
    /// Fraction of delta lookups that fell outside the source's range.
    pub clamped_fraction: f64,
    /// More than 5% of lookups were clamped.
    pub coverage_warning: bool,
}

impl HedgeReport {
    pub fn success_frequency(&self) -> f64 {
        self.success.mean
    }

    /// Writes `path_id,x_T,y_T,error` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "path_id,x_T,y_T,error")?;
        for (p, ((x, y), e)) in self.terminal_price.iter().zip(&self.terminal_wealth).zip(&self.path_error).enumerate() {
            writeln!(out, "{p},{},{},{}", fmt_f64(*x), fmt_f64(*y), fmt_f64(*e))?;
        }
        Ok(())
    }

    pub fn rms_error(&self) -> f64 {
        let sq: Vec<f64> = self.path_error.iter().map(|e| e * e).collect();
        (pairwise_sum(&sq) / sq.len() as f64).sqrt()
    }
}

/// Self-financing discrete hedge started with wealth `y0`, rebalanced on the
/// configured grid over `[0, horizon]` and compared against `claim`.
pub fn hedge_simulation(
    source: &dyn DeltaSource,
    model: &MarketModel,
    claim: &Payoff,
    y0: f64,
    horizon: f64,
    config: &HedgeConfig,
) -> Result<HedgeReport> {
    config.mc.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    if !y0.is_finite() {
        return Err(Error::InvalidInput("initial wealth must be finite".into()));
    }
    let times = config.rebalance_times(horizon);
    let r = model.rate;
    let antithetic = config.mc.antithetic;
    let chunks = if antithetic { config.mc.paths / 2 } else { config.mc.paths };
    let results = map_paths(chunks, |i| {
        let mut rng = path_rng(config.mc.seed, i as u64);
        let copies = if antithetic { 2 } else { 1 };
        let mut state = [(model.spot, y0); 2];
        let mut clamped = 0usize;
        for k in 0..times.len() - 1 {
            let dt = times[k + 1] - times[k];
            let z: f64 = rng.sample(StandardNormal);
            for (c, st) in state.iter_mut().enumerate().take(copies) {
                let (x, y) = *st;
                let (phi, cl) = source.delta(times[k], x);
                clamped += cl as usize;
                let zz = if c == 0 { z } else { -z };
                let xn = step_exact(model, config.measure, x, dt, zz);
                let yn = y + phi * (xn - x) + (y - phi * x) * (r * dt).exp_m1();
                *st = (xn, yn);
            }
        }
        (state, clamped)
    });

    let n = config.mc.paths;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut clamped = 0usize;
    for (state, cl) in &results {
        for &(x, y) in state.iter().take(if antithetic { 2 } else { 1 }) {
            xs.push(x);
            ys.push(y);
        }
        clamped += cl;
    }
    let err: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - claim.eval(*x)).collect();
    let short: Vec<f64> = err.iter().map(|e| e.min(0.0).powi(2)).collect();
    let hit: Vec<f64> =
        err.iter().map(|e| if *e >= -config.success_tolerance { 1.0 } else { 0.0 }).collect();
    let fp = format!(
        "{};grid={:?};measure={:?};tolerance={}",
        config.mc.fingerprint(),
        config.grid,
        config.measure,
        config.success_tolerance
    );
    let pair = |v: &[f64]| -> Vec<f64> {
        if antithetic {
            v.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
        } else {
            v.to_vec()
        }
    };
    let frac = clamped as f64 / (n * (times.len() - 1)) as f64;
    Ok(HedgeReport {
        error: estimate(&pair(&err), &fp)?,
        squared_shortfall: estimate(&pair(&short), &fp)?,
        success: estimate(&pair(&hit), &fp)?,
        terminal_price: xs,
        terminal_wealth: ys,
        path_error: err,
        clamped_fraction: frac,
        coverage_warning: frac > COVERAGE_LIMIT,
    })
}
