//! The run configuration: flat JSON with one block per library module.
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superhedge::constraints::{ConstraintSet, ProportionRange, Sign, Transform};
use superhedge::io::{read_payoff_csv, read_scenarios_csv, read_schedule_csv};
use superhedge::liquidation::{LiquidationLoss, LiquidationModel, Schedule};
use superhedge::market::{MarketModel, PiecewiseConstant};
use superhedge::mc::{HedgeConfig, McConfig, Measure, RebalanceGrid};
use superhedge::payoff::Payoff;
use superhedge::pde::{ConstraintKind, Grid1D, Scheme};
use superhedge::riskprice::{DualControl, LossFunction};

use crate::CliError;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(format!("missing key {key}")))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when present.
    pub command: Option<String>,
    pub market: Option<MarketBlock>,
    pub payoff: Option<PayoffBlock>,
    pub constraints: Option<ConstraintBlock>,
    pub analytic: Option<AnalyticBlock>,
    pub pde: Option<PdeBlock>,
    pub mc: Option<McBlock>,
    pub riskprice: Option<RiskBlock>,
    pub liquidation: Option<LiquidationBlock>,
    /// Output file name inside the output directory.
    pub output: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketBlock {
    /// `geometric` (default) or `arithmetic`.
    pub flavor: Option<String>,
    pub spot: Option<f64>,
    /// Defaults to the rate.
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub rate: Option<f64>,
    /// Current time, default 0.
    pub t: Option<f64>,
    /// Maturity, default 1.
    pub maturity: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffBlock {
    /// `call`, `put`, `digital`, `linear`, `constant`, `softplus` or `table`.
    pub kind: String,
    pub strike: Option<f64>,
    pub value: Option<f64>,
    pub width: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub nodes: Option<usize>,
    /// CSV `x,value`, relative to the config file.
    pub path: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintBlock {
    /// `full`, `interval`, `cone` or `subspace`.
    pub kind: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// For cones: `nonnegative`, `nonpositive` or `free`.
    pub sign: Option<String>,
    /// `amount` (default), `proportion`, `proportion-domain`, or for
    /// `facelift` also `concave-envelope`.
    pub on: Option<String>,
    /// Tabulation grid for `facelift` when the payoff is not a table.
    pub grid_lo: Option<f64>,
    pub grid_hi: Option<f64>,
    pub grid_nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticBlock {
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub rho: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeBlock {
    pub space_nodes: Option<usize>,
    pub time_steps: Option<usize>,
    /// `implicit` (default), `explicit`, `crank-nicolson` or `theta`.
    pub scheme: Option<String>,
    pub theta: Option<f64>,
    /// Volatility used to size the grid; defaults to the model's (or the
    /// upper BSB) volatility.
    pub sigma_max: Option<f64>,
    pub sigma_lo: Option<f64>,
    pub sigma_hi: Option<f64>,
    pub time_clustering: Option<f64>,
    /// Write every time slice instead of only the initial one.
    pub all_slices: Option<bool>,
    /// `convergence`: the problem (`linear`, `constrained`, `bsb`), the
    /// `[space_nodes, time_steps]` levels and an optional exact value.
    pub problem: Option<String>,
    pub levels: Option<Vec<[usize; 2]>>,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
    /// `statistical` (default) or `pricing`.
    pub measure: Option<String>,
    /// Rebalance grid: `uniform` (default) or `clustered` with `power`.
    pub grid: Option<String>,
    pub power: Option<f64>,
    pub tolerance: Option<f64>,
    /// Hedge ratios: `closed-form` (default) or `pde` on `delta_nodes`.
    pub delta: Option<String>,
    pub delta_nodes: Option<usize>,
    /// Initial capital; defaults to the model price of the claim.
    pub capital: Option<f64>,
    /// Run a hedge verification after `quantile` or `shortfall`.
    pub verify: Option<bool>,
    pub gamma: Option<GammaBlock>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaBlock {
    pub base: Option<f64>,
    pub skew: Option<f64>,
    pub reference: Option<f64>,
    /// Maturity of the hedged claim (the payoff block).
    pub t1: Option<f64>,
    /// Strike and maturity of the call used as hedging instrument.
    pub instrument_strike: Option<f64>,
    pub t2: Option<f64>,
    pub rebalances: Option<Vec<usize>>,
    pub space_nodes: Option<usize>,
    pub time_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskBlock {
    pub level: Option<f64>,
    /// `quantile`: success-ratio pricing at this capital. `shortfall` with
    /// scenarios: the capital.
    pub budget: Option<f64>,
    /// CSV `G,density` for the scenario shortfall problem.
    pub scenarios: Option<String>,
    /// `quadratic` (default) or `power` with `loss_power`.
    pub loss: Option<String>,
    pub loss_power: Option<f64>,
    pub controls: Option<Vec<ControlBlock>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBlock {
    /// `constant`, `lift` or `schedule`.
    pub kind: String,
    pub nu: Option<f64>,
    pub switch: Option<f64>,
    pub overshoot: Option<f64>,
    pub knots: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiquidationBlock {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub impact: Option<f64>,
    pub target: Option<f64>,
    /// `identity` (default) or `power` with odd `loss_power`.
    pub loss: Option<String>,
    pub loss_power: Option<u32>,
    pub level: Option<f64>,
    pub t0: Option<f64>,
    pub horizon: Option<f64>,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub schedules: Option<Vec<ScheduleBlock>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    /// `constant`, `front-loaded` or `table` (CSV `t,rate`).
    pub kind: String,
    pub total: Option<f64>,
    pub power: Option<f64>,
    pub path: Option<String>,
}

/// A parsed configuration together with the directory its relative paths
/// resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn block<'a, T>(&self, b: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        b.as_ref().ok_or_else(|| invalid(format!("missing block {name}")))
    }

    pub fn market_block(&self) -> Result<&MarketBlock, CliError> {
        self.block(&self.config.market, "market")
    }

    pub fn market(&self) -> Result<MarketModel, CliError> {
        let m = self.market_block()?;
        let rate = m.rate.unwrap_or(0.0);
        let flavor = match m.flavor.as_deref().unwrap_or("geometric") {
            "geometric" => superhedge::market::Flavor::Geometric,
            "arithmetic" => superhedge::market::Flavor::Arithmetic,
            other => return Err(invalid(format!("market.flavor: unknown flavor {other:?}"))),
        };
        Ok(MarketModel::new(need(m.spot, "market.spot")?, m.mu.unwrap_or(rate), need(m.sigma, "market.sigma")?, rate, flavor)?)
    }

    /// `(t, maturity)`.
    pub fn times(&self) -> Result<(f64, f64), CliError> {
        let m = self.market_block()?;
        let (t, mat) = (m.t.unwrap_or(0.0), m.maturity.unwrap_or(1.0));
        if !(mat > t) {
            return Err(invalid(format!("market.maturity {mat} must exceed market.t {t}")));
        }
        Ok((t, mat))
    }

    pub fn payoff(&self) -> Result<Payoff, CliError> {
        let p = self.block(&self.config.payoff, "payoff")?;
        let strike = || need(p.strike, "payoff.strike");
        Ok(match p.kind.as_str() {
            "call" => Payoff::call(strike()?),
            "put" => Payoff::put(strike()?),
            "digital" => Payoff::digital(strike()?),
            "linear" => Payoff::Linear,
            "constant" => Payoff::constant(need(p.value, "payoff.value")?),
            "softplus" => Payoff::softplus_call(
                strike()?,
                need(p.width, "payoff.width")?,
                need(p.lo, "payoff.lo")?,
                need(p.hi, "payoff.hi")?,
                need(p.nodes, "payoff.nodes")?,
            )?,
            "table" => {
                let path = p.path.as_deref().ok_or_else(|| invalid("missing key payoff.path"))?;
                read_payoff_csv(&self.resolve(path))?
            }
            other => return Err(invalid(format!("payoff.kind: unknown payoff {other:?}"))),
        })
    }

    pub fn constraint_block(&self) -> Result<&ConstraintBlock, CliError> {
        self.block(&self.config.constraints, "constraints")
    }

    pub fn constraint_set(&self) -> Result<ConstraintSet, CliError> {
        let c = self.constraint_block()?;
        Ok(match c.kind.as_str() {
            "full" => ConstraintSet::full_space(1),
            "interval" => ConstraintSet::boxed(
                vec![c.lo.unwrap_or(f64::NEG_INFINITY)],
                vec![c.hi.unwrap_or(f64::INFINITY)],
            )?,
            "cone" => {
                let sign = match c.sign.as_deref() {
                    Some("nonnegative") => Sign::NonNegative,
                    Some("nonpositive") => Sign::NonPositive,
                    Some("free") => Sign::Free,
                    other => return Err(invalid(format!("constraints.sign: expected nonnegative, nonpositive or free, got {other:?}"))),
                };
                ConstraintSet::Cone { signs: vec![sign] }
            }
            "subspace" => ConstraintSet::Subspace { zeroed: vec![true] },
            other => return Err(invalid(format!("constraints.kind: unknown set {other:?}"))),
        })
    }

    pub fn constraint_kind(&self) -> Result<ConstraintKind, CliError> {
        match self.transform()? {
            Transform::Amount => Ok(ConstraintKind::Amount),
            Transform::Proportion(r) => Ok(ConstraintKind::Proportion(r)),
            Transform::ConcaveEnvelope => Err(invalid("constraints.on: concave-envelope applies to facelift only")),
        }
    }

    pub fn transform(&self) -> Result<Transform, CliError> {
        Ok(match self.constraint_block()?.on.as_deref().unwrap_or("amount") {
            "amount" => Transform::Amount,
            "proportion" => Transform::Proportion(ProportionRange::ConstraintSet),
            "proportion-domain" => Transform::Proportion(ProportionRange::SupportDomain),
            "concave-envelope" => Transform::ConcaveEnvelope,
            other => return Err(invalid(format!("constraints.on: unknown target {other:?}"))),
        })
    }

    pub fn analytic(&self) -> Result<&AnalyticBlock, CliError> {
        self.block(&self.config.analytic, "analytic")
    }

    pub fn pde_block(&self) -> PdeBlock {
        self.config.pde.clone().unwrap_or_default()
    }

    pub fn scheme(&self) -> Result<Scheme, CliError> {
        let p = self.pde_block();
        Ok(match p.scheme.as_deref().unwrap_or("implicit") {
            "implicit" => Scheme::Implicit,
            "explicit" => Scheme::Explicit,
            "crank-nicolson" => Scheme::CrankNicolson,
            "theta" => Scheme::Theta(need(p.theta, "pde.theta")?),
            other => return Err(invalid(format!("pde.scheme: unknown scheme {other:?}"))),
        })
    }

    pub fn grid(&self, model: &MarketModel, sigma_default: f64, space_nodes: usize, time_steps: usize) -> Result<Grid1D, CliError> {
        let p = self.pde_block();
        let (t, mat) = self.times()?;
        let grid = Grid1D::for_model(model, p.sigma_max.unwrap_or(sigma_default), mat - t, space_nodes, time_steps)?;
        Ok(match p.time_clustering {
            Some(pw) => grid.with_time_clustering(pw)?,
            None => grid,
        })
    }

    pub fn grid_size(&self) -> (usize, usize) {
        let p = self.pde_block();
        (p.space_nodes.unwrap_or(400), p.time_steps.unwrap_or(400))
    }

    pub fn mc_block(&self) -> McBlock {
        self.config.mc.clone().unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.mc_block().seed.unwrap_or(42)
    }

    pub fn mc(&self, default_paths: usize, default_steps: usize) -> Result<McConfig, CliError> {
        let m = self.mc_block();
        Ok(McConfig::new(m.paths.unwrap_or(default_paths), m.steps.unwrap_or(default_steps), self.seed())?
            .antithetic(m.antithetic.unwrap_or(false)))
    }

    pub fn hedge(&self, default_paths: usize, default_steps: usize) -> Result<HedgeConfig, CliError> {
        let m = self.mc_block();
        let mut h = HedgeConfig::new(self.mc(default_paths, default_steps)?);
        h.measure = match m.measure.as_deref().unwrap_or("statistical") {
            "statistical" => Measure::Statistical,
            "pricing" => Measure::Pricing,
            other => return Err(invalid(format!("mc.measure: unknown measure {other:?}"))),
        };
        h.grid = match m.grid.as_deref().unwrap_or("uniform") {
            "uniform" => RebalanceGrid::Uniform,
            "clustered" => RebalanceGrid::Clustered { power: need(m.power, "mc.power")? },
            other => return Err(invalid(format!("mc.grid: unknown grid {other:?}"))),
        };
        h.success_tolerance = m.tolerance.unwrap_or(0.0);
        if !(h.success_tolerance >= 0.0) {
            return Err(invalid("mc.tolerance must be nonnegative"));
        }
        Ok(h)
    }

    pub fn risk(&self) -> Result<&RiskBlock, CliError> {
        self.block(&self.config.riskprice, "riskprice")
    }

    pub fn loss(&self) -> Result<LossFunction, CliError> {
        let r = self.risk()?;
        Ok(match r.loss.as_deref().unwrap_or("quadratic") {
            "quadratic" => LossFunction::Quadratic,
            "power" => LossFunction::power(need(r.loss_power, "riskprice.loss_power")?)?,
            other => return Err(invalid(format!("riskprice.loss: unknown loss {other:?}"))),
        })
    }

    pub fn scenarios(&self) -> Result<Option<Vec<(f64, f64)>>, CliError> {
        match &self.risk()?.scenarios {
            Some(p) => Ok(Some(read_scenarios_csv(&self.resolve(p))?)),
            None => Ok(None),
        }
    }

    pub fn controls(&self) -> Result<Vec<DualControl>, CliError> {
        let blocks = self.risk()?.controls.as_ref().ok_or_else(|| invalid("missing key riskprice.controls"))?;
        if blocks.is_empty() {
            return Err(invalid("riskprice.controls is empty"));
        }
        blocks
            .iter()
            .map(|c| {
                Ok(match c.kind.as_str() {
                    "constant" => DualControl::constant(need(c.nu, "riskprice.controls.nu")?),
                    "lift" => DualControl::TerminalLift {
                        switch: need(c.switch, "riskprice.controls.switch")?,
                        overshoot: c.overshoot.unwrap_or(0.0),
                    },
                    "schedule" => DualControl::Schedule(PiecewiseConstant::new(
                        c.knots.clone().ok_or_else(|| invalid("missing key riskprice.controls.knots"))?,
                        c.values.clone().ok_or_else(|| invalid("missing key riskprice.controls.values"))?,
                    )?),
                    other => return Err(invalid(format!("riskprice.controls.kind: unknown control {other:?}"))),
                })
            })
            .collect()
    }

    pub fn liquidation(&self) -> Result<&LiquidationBlock, CliError> {
        self.block(&self.config.liquidation, "liquidation")
    }

    pub fn liquidation_model(&self) -> Result<LiquidationModel, CliError> {
        let l = self.liquidation()?;
        let loss = match l.loss.as_deref().unwrap_or("identity") {
            "identity" => LiquidationLoss::Identity,
            "power" => LiquidationLoss::odd_power(need(l.loss_power, "liquidation.loss_power")?)?,
            other => return Err(invalid(format!("liquidation.loss: unknown loss {other:?}"))),
        };
        Ok(LiquidationModel::new(
            l.mu.unwrap_or(0.0),
            need(l.sigma, "liquidation.sigma")?,
            l.impact.unwrap_or(0.0),
            need(l.target, "liquidation.target")?,
            loss,
        )?)
    }

    pub fn schedules(&self) -> Result<Vec<Schedule>, CliError> {
        let l = self.liquidation()?;
        let blocks = l.schedules.as_ref().ok_or_else(|| invalid("missing key liquidation.schedules"))?;
        blocks
            .iter()
            .map(|s| {
                Ok(match s.kind.as_str() {
                    "constant" => Schedule::Constant { total: need(s.total, "liquidation.schedules.total")? },
                    "front-loaded" => Schedule::FrontLoaded {
                        total: need(s.total, "liquidation.schedules.total")?,
                        power: need(s.power, "liquidation.schedules.power")?,
                    },
                    "table" => {
                        let path = s.path.as_deref().ok_or_else(|| invalid("missing key liquidation.schedules.path"))?;
                        let rows = read_schedule_csv(&self.resolve(path))?;
                        let (t, r): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
                        Schedule::TimeGrid(PiecewiseConstant::new(t, r)?)
                    }
                    other => return Err(invalid(format!("liquidation.schedules.kind: unknown schedule {other:?}"))),
                })
            })
            .collect()
    }
}
