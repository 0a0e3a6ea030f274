//! One function per subcommand, each producing a result table.

use superhedge::analytic::{bs_price, margrabe_exchange, PiecewiseAffine};
use superhedge::constraints::{concave_envelope, facelift_amount, facelift_proportion, Transform};
use superhedge::io::fmt_f64;
use superhedge::liquidation::premium_upper_bound;
use superhedge::market::MarketModel;
use superhedge::mc::{gamma_hedge_experiment, hedge_simulation, log_log_slope, ClosedFormDelta, GammaHedgeSetup, LocalVol};
use superhedge::payoff::Payoff;
use superhedge::pde::{estimate_convergence_order, solve_bsb, solve_constrained, solve_linear, Order, PdeOutcome, PdeSolution, Terminal};
use superhedge::riskprice::{
    dual_lower_bound, quantile_price, shortfall_optimal_ratio, shortfall_price_quadratic, success_ratio_price,
    verify_quantile_hedge, verify_shortfall_hedge, DeltaMethod, QuantileProblem,
};

use crate::config::Loaded;
use crate::CliError;

/// A result table with its command-specific metadata.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Output {
    fn new(headers: &[&str]) -> Self {
        Self { meta: Vec::new(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn meta(&mut self, k: &str, v: impl Into<String>) {
        self.meta.push((k.to_string(), v.into()));
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub const COMMANDS: [&str; 13] = [
    "price-bs",
    "price-exchange",
    "facelift",
    "pde-linear",
    "pde-constrained",
    "pde-bsb",
    "quantile",
    "shortfall",
    "dual-bound",
    "hedge-sim",
    "gamma-exp",
    "liquidate",
    "convergence",
];

pub fn dispatch(command: &str, cfg: &Loaded) -> Result<Output, CliError> {
    match command {
        "price-bs" => price_bs(cfg),
        "price-exchange" => price_exchange(cfg),
        "facelift" => facelift(cfg),
        "pde-linear" => pde(cfg, Problem::Linear),
        "pde-constrained" => pde(cfg, Problem::Constrained),
        "pde-bsb" => pde(cfg, Problem::Bsb),
        "quantile" => quantile(cfg),
        "shortfall" => shortfall(cfg),
        "dual-bound" => dual_bound(cfg),
        "hedge-sim" => hedge_sim(cfg),
        "gamma-exp" => gamma_exp(cfg),
        "liquidate" => liquidate(cfg),
        "convergence" => convergence(cfg),
        other => Err(invalid(format!("unknown command {other:?}"))),
    }
}

fn price_bs(cfg: &Loaded) -> Result<Output, CliError> {
    let m = cfg.market()?;
    if m.flavor != superhedge::market::Flavor::Geometric {
        return Err(invalid("price-bs needs a geometric market"));
    }
    let g = cfg.payoff()?;
    let (t, mat) = cfg.times()?;
    let price = bs_price(&g, m.spot, m.rate, m.sigma, mat - t)?;
    let mut out = Output::new(&["spot", "tau", "price"]);
    out.row(vec![f(m.spot), f(mat - t), f(price)]);
    Ok(out)
}

fn price_exchange(cfg: &Loaded) -> Result<Output, CliError> {
    let a = cfg.analytic()?;
    let get = |v: Option<f64>, k: &str| v.ok_or_else(|| invalid(format!("missing key analytic.{k}")));
    let (s1, s2, tau) = (get(a.s1, "s1")?, get(a.s2, "s2")?, get(a.tau, "tau")?);
    let (v1, v2, rho) = (get(a.sigma1, "sigma1")?, get(a.sigma2, "sigma2")?, a.rho.unwrap_or(0.0));
    if !(s1 > 0.0 && s2 > 0.0 && tau >= 0.0 && v1 >= 0.0 && v2 >= 0.0 && (-1.0..=1.0).contains(&rho)) {
        return Err(invalid("price-exchange needs positive prices, tau >= 0, vols >= 0 and rho in [-1, 1]"));
    }
    let eff = (v1 * v1 + v2 * v2 - 2.0 * rho * v1 * v2).max(0.0).sqrt();
    let mut out = Output::new(&["s1", "s2", "sigma_eff", "tau", "price"]);
    out.row(vec![f(s1), f(s2), f(eff), f(tau), f(margrabe_exchange(s1, s2, eff, tau))]);
    Ok(out)
}

fn facelift(cfg: &Loaded) -> Result<Output, CliError> {
    let g = cfg.payoff()?;
    let k = cfg.constraint_set()?;
    let c = cfg.constraint_block()?;
    let grid: Vec<f64> = match (&g, c.grid_nodes) {
        (Payoff::Tabulated(t), None) => t.grid().to_vec(),
        (_, nodes) => {
            let (lo, hi, n) = (
                c.grid_lo.ok_or_else(|| invalid("missing key constraints.grid_lo"))?,
                c.grid_hi.ok_or_else(|| invalid("missing key constraints.grid_hi"))?,
                nodes.ok_or_else(|| invalid("missing key constraints.grid_nodes"))?,
            );
            if !(hi > lo) || n < 2 {
                return Err(invalid("constraints.grid needs grid_hi > grid_lo and at least 2 nodes"));
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let values = match cfg.transform()? {
        Transform::Amount => grid.iter().map(|&x| facelift_amount(&g, &k, x)).collect::<superhedge::Result<Vec<_>>>()?,
        Transform::Proportion(r) => grid.iter().map(|&x| facelift_proportion(&g, &k, x, r)).collect::<superhedge::Result<Vec<_>>>()?,
        Transform::ConcaveEnvelope => concave_envelope(&g, &grid)?.values,
    };
    let mut out = Output::new(&["x", "value"]);
    for (x, v) in grid.iter().zip(&values) {
        out.row(vec![f(*x), f(*v)]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Problem {
    Linear,
    Constrained,
    Bsb,
}

/// Volatility bounds `(lo, hi)` for the BSB problem.
fn bsb_bounds(cfg: &Loaded) -> Result<(f64, f64), CliError> {
    let p = cfg.pde_block();
    let lo = p.sigma_lo.ok_or_else(|| invalid("missing key pde.sigma_lo"))?;
    let hi = p.sigma_hi.ok_or_else(|| invalid("missing key pde.sigma_hi"))?;
    Ok((lo, hi))
}

fn solve(cfg: &Loaded, problem: Problem, m: &MarketModel, g: &Payoff, j: usize, n: usize) -> Result<PdeOutcome, CliError> {
    let scheme = cfg.scheme()?;
    Ok(match problem {
        Problem::Linear => PdeOutcome::Solved(solve_linear(m, &Terminal::Payoff(g.clone()), &cfg.grid(m, m.sigma, j, n)?, scheme)?),
        Problem::Constrained => {
            solve_constrained(m, g, &cfg.constraint_set()?, &cfg.grid(m, m.sigma, j, n)?, scheme, cfg.constraint_kind()?)?
        }
        Problem::Bsb => {
            let (lo, hi) = bsb_bounds(cfg)?;
            if m.flavor != superhedge::market::Flavor::Geometric {
                return Err(invalid("pde-bsb needs a geometric market"));
            }
            PdeOutcome::Solved(solve_bsb(g, lo, hi, m.rate, &cfg.grid(m, hi, j, n)?, scheme)?)
        }
    })
}

fn pde(cfg: &Loaded, problem: Problem) -> Result<Output, CliError> {
    let m = cfg.market()?;
    let g = cfg.payoff()?;
    let (j, n) = cfg.grid_size();
    let outcome = solve(cfg, problem, &m, &g, j, n)?;
    let mut out = Output::new(&["t", "x", "value", "delta", "constraint_active"]);
    out.meta("price", f(outcome.price_at(m.spot)));
    match &outcome {
        PdeOutcome::Solved(s) => {
            out.meta("solver", format!("{:?}", s.scheme.kind));
            slices(&mut out, s, cfg.pde_block().all_slices.unwrap_or(false));
        }
        PdeOutcome::InfinitePrice => {
            let (t, _) = cfg.times()?;
            out.row(vec![f(t), f(m.spot), f(f64::INFINITY), "nan".into(), "1".into()]);
        }
    }
    Ok(out)
}

fn slices(out: &mut Output, s: &PdeSolution, all: bool) {
    let idx: Vec<usize> = if all { (0..s.values.len()).collect() } else { vec![0] };
    for i in idx {
        let t = s.grid.times()[i];
        for (jx, x) in s.grid.nodes().iter().enumerate() {
            out.row(vec![f(t), f(*x), f(s.values[i][jx]), f(s.delta[i][jx]), u8::from(s.active[i][jx]).to_string()]);
        }
    }
}

fn problem(cfg: &Loaded) -> Result<QuantileProblem, CliError> {
    let (t, mat) = cfg.times()?;
    let level = cfg.risk()?.level.ok_or_else(|| invalid("missing key riskprice.level"))?;
    Ok(QuantileProblem::new(cfg.market()?, cfg.payoff()?, t, mat, level)?)
}

fn delta_method(cfg: &Loaded) -> Result<DeltaMethod, CliError> {
    let m = cfg.mc_block();
    Ok(match m.delta.as_deref().unwrap_or("closed-form") {
        "closed-form" => DeltaMethod::ClosedForm,
        "pde" => DeltaMethod::Pde { space_nodes: m.delta_nodes.unwrap_or(800) },
        other => return Err(invalid(format!("mc.delta: unknown method {other:?}"))),
    })
}

fn quantile(cfg: &Loaded) -> Result<Output, CliError> {
    let pr = problem(cfg)?;
    if let Some(y) = cfg.risk()?.budget {
        let s = success_ratio_price(&pr, y)?;
        let mut out = Output::new(&["budget", "ratio", "q_hat", "c_hat", "gamma"]);
        out.row(vec![f(s.budget), f(s.ratio), f(s.q_hat), f(s.c_hat), f(s.gamma)]);
        return Ok(out);
    }
    let s = quantile_price(&pr)?;
    let mut out = Output::new(&["level", "price", "q_bar", "achieved", "atom"]);
    out.row(vec![f(pr.level), f(s.price), f(s.q_bar), f(s.achieved), u8::from(s.atom).to_string()]);
    if cfg.mc_block().verify.unwrap_or(false) {
        let v = verify_quantile_hedge(&pr, &s, delta_method(cfg)?, &cfg.hedge(100_000, 1000)?)?;
        let e = &v.report.success;
        out.meta("success_frequency", f(e.mean));
        out.meta("success_stderr", f(e.stderr));
        out.meta("mc", e.fingerprint.clone());
    }
    Ok(out)
}

fn shortfall(cfg: &Loaded) -> Result<Output, CliError> {
    if let Some(sc) = cfg.scenarios()? {
        let y = cfg.risk()?.budget.ok_or_else(|| invalid("missing key riskprice.budget"))?;
        let s = shortfall_optimal_ratio(&cfg.loss()?, &sc, y)?;
        let mut out = Output::new(&["scenario", "G", "density", "ratio"]);
        out.meta("multiplier", f(s.multiplier));
        out.meta("risk", f(s.risk));
        for (i, ((g, d), r)) in sc.iter().zip(&s.ratios).enumerate() {
            out.row(vec![i.to_string(), f(*g), f(*d), f(*r)]);
        }
        return Ok(out);
    }
    let pr = problem(cfg)?;
    let s = shortfall_price_quadratic(&pr)?;
    let mut out = Output::new(&["level", "price", "q_bar", "achieved_risk", "max_risk"]);
    out.row(vec![f(pr.level), f(s.price), f(s.q_bar), f(s.achieved_risk), f(s.max_risk)]);
    if cfg.mc_block().verify.unwrap_or(false) {
        let nodes = cfg.mc_block().delta_nodes.unwrap_or(800);
        let v = verify_shortfall_hedge(&pr, &s, nodes, &cfg.hedge(100_000, 1000)?)?;
        let e = &v.report.squared_shortfall;
        out.meta("squared_shortfall", f(e.mean));
        out.meta("squared_shortfall_stderr", f(e.stderr));
        out.meta("mc", e.fingerprint.clone());
    }
    Ok(out)
}

fn dual_bound(cfg: &Loaded) -> Result<Output, CliError> {
    let m = cfg.market()?;
    let (t, mat) = cfg.times()?;
    let b = dual_lower_bound(&m, &cfg.payoff()?, &cfg.constraint_set()?, mat - t, &cfg.controls()?, &cfg.mc(100_000, 10)?)?;
    let mut out = Output::new(&["control_id", "bound", "stderr"]);
    out.meta("best_control", b.best.to_string());
    out.meta("best_bound", f(b.best_estimate().mean));
    for (i, e) in b.estimates.iter().enumerate() {
        out.row(vec![i.to_string(), f(e.mean), f(e.stderr)]);
    }
    Ok(out)
}

fn hedge_sim(cfg: &Loaded) -> Result<Output, CliError> {
    let m = cfg.market()?;
    let g = cfg.payoff()?;
    let (t, mat) = cfg.times()?;
    let tau = mat - t;
    let h = cfg.hedge(10_000, 250)?;
    let (report, price) = match delta_method(cfg)? {
        DeltaMethod::ClosedForm => {
            let kinks = g.kinks();
            let aff = PiecewiseAffine::interpolate(|x| g.eval(x), &kinks)
                .map_err(|e| invalid(format!("closed-form deltas need a piecewise-affine payoff: {e}")))?;
            let price = aff.price_delta(&m, m.spot, tau).0;
            let src = ClosedFormDelta(|s: f64, x: f64| aff.delta(&m, x, tau - s));
            (hedge_simulation(&src, &m, &g, cfg.mc_block().capital.unwrap_or(price), tau, &h)?, price)
        }
        DeltaMethod::Pde { space_nodes } => {
            let grid = cfg.grid(&m, m.sigma, space_nodes, h.mc.steps.max(8))?.with_times(h.rebalance_times(tau))?;
            let sol = solve_linear(&m, &Terminal::Payoff(g.clone()), &grid, superhedge::pde::Scheme::Implicit)?;
            let price = sol.price_at(m.spot);
            (hedge_simulation(&sol, &m, &g, cfg.mc_block().capital.unwrap_or(price), tau, &h)?, price)
        }
    };
    let mut out = Output::new(&["path_id", "x_T", "y_T", "error"]);
    out.meta("capital", f(cfg.mc_block().capital.unwrap_or(price)));
    out.meta("success_frequency", f(report.success.mean));
    out.meta("success_stderr", f(report.success.stderr));
    out.meta("mean_error", f(report.error.mean));
    out.meta("rms_error", f(report.rms_error()));
    out.meta("clamped_fraction", f(report.clamped_fraction));
    if report.coverage_warning {
        out.meta("warning", "more than 5% of hedge ratios were read outside the grid");
    }
    for (i, ((x, y), e)) in report.terminal_price.iter().zip(&report.terminal_wealth).zip(&report.path_error).enumerate() {
        out.row(vec![i.to_string(), f(*x), f(*y), f(*e)]);
    }
    Ok(out)
}

fn gamma_exp(cfg: &Loaded) -> Result<Output, CliError> {
    let m = cfg.market()?;
    let f_claim = cfg.payoff()?;
    let gb = cfg.mc_block().gamma.ok_or_else(|| invalid("missing block mc.gamma"))?;
    let get = |v: Option<f64>, k: &str| v.ok_or_else(|| invalid(format!("missing key mc.gamma.{k}")));
    let vol = LocalVol::new(get(gb.base, "base")?, gb.skew.unwrap_or(0.0), gb.reference.unwrap_or(m.spot))?;
    let (t1, t2) = (get(gb.t1, "t1")?, get(gb.t2, "t2")?);
    let instrument = Payoff::call(get(gb.instrument_strike, "instrument_strike")?);
    let ns = gb.rebalances.clone().unwrap_or_else(|| vec![10, 20, 40, 80]);
    if ns.is_empty() {
        return Err(invalid("mc.gamma.rebalances is empty"));
    }
    let mc = cfg.mc(20_000, 1600)?;
    let results = match (gb.space_nodes, gb.time_steps) {
        (None, None) => ns.iter().map(|&n| gamma_hedge_experiment(vol, m.spot, &f_claim, t1, &instrument, t2, n, &mc)).collect::<Result<Vec<_>, _>>()?,
        (j, n) => {
            let setup = GammaHedgeSetup::prepare(vol, m.spot, f_claim, t1, instrument, t2, j.unwrap_or(1501), n.unwrap_or(800))?;
            ns.iter().map(|&n| setup.run(n, &mc)).collect::<Result<Vec<_>, _>>()?
        }
    };
    let mut out = Output::new(&["n", "rms_error", "rms_stderr", "mean_error", "max_abs_error"]);
    if results.len() >= 2 {
        let xs: Vec<f64> = results.iter().map(|r| r.rebalances as f64).collect();
        let ys: Vec<f64> = results.iter().map(|r| r.rms_error).collect();
        if ys.iter().all(|&y| y > 0.0) {
            out.meta("log_log_slope", f(log_log_slope(&xs, &ys)));
        }
    }
    for r in &results {
        out.row(vec![r.rebalances.to_string(), f(r.rms_error), f(r.rms_stderr), f(r.mean_error), f(r.max_abs_error)]);
    }
    Ok(out)
}

fn liquidate(cfg: &Loaded) -> Result<Output, CliError> {
    let model = cfg.liquidation_model()?;
    let l = cfg.liquidation()?;
    let p = l.level.unwrap_or(0.0);
    let t0 = l.t0.unwrap_or(0.0);
    let horizon = l.horizon.unwrap_or(1.0);
    let x0 = (l.x1.ok_or_else(|| invalid("missing key liquidation.x1"))?, l.x2.unwrap_or(0.0));
    let b = premium_upper_bound(&model, p, &cfg.schedules()?, t0, horizon, x0, &cfg.mc(10_000, 100)?)?;
    let mut out = Output::new(&["schedule_id", "y_star", "e_psi", "stderr"]);
    out.meta("y_star", f(b.y_star));
    out.meta("best_schedule", b.best.to_string());
    for r in &b.rows {
        match (&r.y_star, &r.e_psi) {
            (Some(y), Some(e)) => out.row(vec![r.schedule_id.to_string(), f(*y), f(e.mean), f(e.stderr)]),
            _ => {
                out.row(vec![r.schedule_id.to_string(), String::new(), String::new(), String::new()]);
                if let Some(n) = &r.note {
                    out.meta(&format!("schedule_{}", r.schedule_id), n.clone());
                }
            }
        }
    }
    Ok(out)
}

fn convergence(cfg: &Loaded) -> Result<Output, CliError> {
    let p = cfg.pde_block();
    let problem = match p.problem.as_deref().unwrap_or("linear") {
        "linear" => Problem::Linear,
        "constrained" => Problem::Constrained,
        "bsb" => Problem::Bsb,
        other => return Err(invalid(format!("pde.problem: unknown problem {other:?}"))),
    };
    let levels: Vec<(usize, usize)> = p
        .levels
        .clone()
        .ok_or_else(|| invalid("missing key pde.levels"))?
        .iter()
        .map(|l| (l[0], l[1]))
        .collect();
    let m = cfg.market()?;
    let g = cfg.payoff()?;
    let mut failure = None;
    let report = estimate_convergence_order(
        |j, n| match solve(cfg, problem, &m, &g, j, n) {
            Ok(o) => Ok(o.price_at(m.spot)),
            Err(e) => {
                failure = Some(e);
                Err(superhedge::Error::InvalidInput("level failed".into()))
            }
        },
        &levels,
        p.reference,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let report = report?;
    let mut out = Output::new(&["space_nodes", "time_steps", "value", "error", "order"]);
    out.meta("reference", f(report.reference));
    if report.non_monotone {
        out.meta("warning", "error did not decrease along the refinement");
    }
    for (i, l) in report.levels.iter().enumerate() {
        let order = match i.checked_sub(1).and_then(|k| report.orders.get(k)) {
            Some(Order::Observed(o)) => f(*o),
            Some(Order::Exact) => "exact".into(),
            Some(Order::Undefined) => "undefined".into(),
            None => String::new(),
        };
        out.row(vec![l.space_nodes.to_string(), l.time_steps.to_string(), f(l.value), f(l.error), order]);
    }
    Ok(out)
}
