use rand::Rng;
use rand_distr::StandardNormal;
use superhedge::analytic::{bs_call, brownian_constrained_price, margrabe_exchange};
use superhedge::constraints::ConstraintSet;
use superhedge::market::{density_along_path, MarketModel, MeasureChange, PiecewiseConstant};
use superhedge::mc::{estimate, map_paths, path_rng, HedgeConfig, McConfig, RebalanceGrid};
use superhedge::payoff::Payoff;
use superhedge::riskprice::*;
use superhedge::Error;

fn call_problem(level: f64) -> QuantileProblem {
    let m = MarketModel::geometric(100.0, 0.1, 0.2, 0.0).unwrap();
    QuantileProblem::new(m, Payoff::call(100.0), 0.0, 1.0, level).unwrap()
}

/// sup_q (p q - w(q)) by a log grid followed by golden-section refinement;
/// the objective is concave in q.
fn fenchel_oracle(pr: &QuantileProblem) -> (f64, f64) {
    let p = pr.level;
    let f = |q: f64| p * q - dual_objective_w(pr, q).unwrap();
    let grid: Vec<f64> = (0..=240).map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 240.0)).collect();
    let i = (0..grid.len()).max_by(|&a, &b| f(grid[a]).total_cmp(&f(grid[b]))).unwrap();
    let (mut a, mut b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let q = 0.5 * (a + b);
    (f(q), q)
}

#[test]
fn dual_objective_degenerate_cases() {
    // No premium: Q_T = q, so w = E[(q - g)^+] = q - C(K) + C(K + q).
    let m = MarketModel::geometric(100.0, 0.03, 0.2, 0.03).unwrap();
    let pr = QuantileProblem::new(m, Payoff::call(100.0), 0.0, 1.0, 0.5).unwrap();
    let w = dual_objective_w(&pr, 7.0).unwrap();
    let df = (-0.03f64).exp();
    // With rate: w = E[(q - df g)^+] = df E[(q/df - g)^+].
    let qq = 7.0 / df;
    let want = df * (qq - (bs_call(100.0, 100.0, 0.03, 0.2, 1.0) - bs_call(100.0, 100.0 + qq, 0.03, 0.2, 1.0)) / df);
    assert!((w - want).abs() < 1e-9, "{w} {want}");

    let zero = QuantileProblem::new(m, Payoff::constant(0.0), 0.0, 1.0, 0.5).unwrap();
    assert!((dual_objective_w(&zero, 3.5).unwrap() - 3.5).abs() < 1e-10);

    let m = MarketModel::geometric(80.0, 0.15, 0.3, 0.0).unwrap();
    let lin = QuantileProblem::new(m, Payoff::Linear, 0.0, 2.0, 0.5).unwrap();
    let lambda: f64 = 0.5;
    for q in [40.0, 80.0, 150.0] {
        let w = dual_objective_w(&lin, q).unwrap();
        let want = margrabe_exchange(q, 80.0, (lambda - 0.3).abs(), 2.0);
        assert!((w - want).abs() < 1e-9, "{q}: {w} {want}");
    }
}

#[test]
fn dual_objective_is_convex_nondecreasing() {
    let pr = call_problem(0.5);
    let qs: Vec<f64> = (1..40).map(|i| 0.5 * i as f64).collect();
    let w: Vec<f64> = qs.iter().map(|&q| dual_objective_w(&pr, q).unwrap()).collect();
    for i in 1..w.len() {
        let slope = (w[i] - w[i - 1]) / 0.5;
        assert!((-1e-9..=1.0 + 1e-9).contains(&slope), "slope {slope} at {}", qs[i]);
    }
    for i in 1..w.len() - 1 {
        assert!(w[i + 1] - 2.0 * w[i] + w[i - 1] >= -1e-9);
    }
}

#[test]
fn quantile_reference_solution() {
    let s = quantile_price(&call_problem(0.8)).unwrap();
    assert!((s.q_bar - 16.3309).abs() < 1e-3, "{}", s.q_bar);
    assert!((s.price - 4.27092).abs() < 1e-4, "{}", s.price);
    assert!((s.achieved - 0.8).abs() < 1e-8);
    assert!(!s.atom);
}

#[test]
fn quantile_endpoints() {
    let full = quantile_price(&call_problem(1.0)).unwrap();
    assert!((full.price - bs_call(100.0, 100.0, 0.0, 0.2, 1.0)).abs() < 1e-9);
    assert_eq!(quantile_price(&call_problem(0.0)).unwrap().price, 0.0);
    // Below the probability of finishing out of the money nothing is needed.
    assert_eq!(quantile_price(&call_problem(0.3)).unwrap().price, 0.0);
    assert!(quantile_price(&call_problem(1.2)).is_err());
}

#[test]
fn quantile_agrees_with_fenchel_oracle() {
    for p in [0.5, 0.9] {
        let pr = call_problem(p);
        let s = quantile_price(&pr).unwrap();
        let (v, q) = fenchel_oracle(&pr);
        assert!((s.price - v).abs() < 1e-3, "{p}: {} {v}", s.price);
        assert!((s.q_bar - q).abs() < 1e-2 * q, "{p}: {} {q}", s.q_bar);
    }
}

#[test]
fn quantile_is_monotone_and_convex_in_level() {
    let pr = call_problem(0.5);
    let v: Vec<f64> = (1..=9).map(|i| quantile_price(&pr.with_level(i as f64 / 10.0)).unwrap().price).collect();
    for w in v.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for w in v.windows(3) {
        assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9, "{v:?}");
    }
}

#[test]
fn atom_is_flagged_and_randomized() {
    // mu = sigma^2 makes dP/dQ proportional to the discounted asset.
    let m = MarketModel::geometric(50.0, 0.04, 0.2, 0.0).unwrap();
    let pr = QuantileProblem::new(m, Payoff::Linear, 0.0, 1.0, 0.4).unwrap();
    assert!(quantile_price(&pr).unwrap().atom);
    let s = success_ratio_price(&pr, 20.0).unwrap();
    assert!((s.gamma - 0.4).abs() < 1e-6, "{s:?}");
    assert!((s.ratio - 0.4).abs() < 1e-6);
}

#[test]
fn success_ratio_matches_quantile_set_without_atoms() {
    let pr = call_problem(0.8);
    let q = quantile_price(&pr).unwrap();
    let s = success_ratio_price(&pr, q.price).unwrap();
    assert_eq!(s.gamma, 0.0);
    assert!((s.ratio - 0.8).abs() < 1e-6, "{}", s.ratio);
    assert!((s.q_hat / q.q_bar - 1.0).abs() < 1e-6);
    let full = success_ratio_price(&pr, 100.0).unwrap();
    assert_eq!(full.ratio, 1.0);
    let tiny = success_ratio_price(&pr, 1e-6).unwrap();
    assert!(tiny.ratio < 0.4);
}

#[test]
fn shortfall_endpoints_and_oracle_moment() {
    let pr = call_problem(0.0);
    let s = shortfall_price_quadratic(&pr).unwrap();
    assert!((s.price - bs_call(100.0, 100.0, 0.0, 0.2, 1.0)).abs() < 1e-9);
    // E[g^2] under P by simulation.
    let sq = map_paths(2_000_000, |p| {
        let z: f64 = path_rng(31, p as u64).sample(StandardNormal);
        let x = 100.0 * ((0.1 - 0.02) + 0.2 * z).exp();
        (x - 100.0f64).max(0.0).powi(2)
    });
    let e = estimate(&sq, "").unwrap();
    assert!((e.mean - s.max_risk).abs() < 3.0 * e.stderr, "{} {}", e.mean, s.max_risk);
    let none = shortfall_price_quadratic(&pr.with_level(-s.max_risk)).unwrap();
    assert_eq!(none.price, 0.0);
    assert!(matches!(shortfall_price_quadratic(&pr.with_level(-2.0 * s.max_risk)), Err(Error::Range(_))));
    let half = shortfall_price_quadratic(&pr.with_level(-0.5 * s.max_risk)).unwrap();
    assert!(half.price > 0.0 && half.price < s.price);
    assert!((half.achieved_risk / (0.5 * s.max_risk) - 1.0).abs() < 1e-6);
}

#[test]
fn shortfall_price_decreases_with_allowed_risk() {
    let pr = call_problem(0.0);
    let max = shortfall_price_quadratic(&pr).unwrap().max_risk;
    let prices: Vec<f64> =
        [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|f| shortfall_price_quadratic(&pr.with_level(-f * max)).unwrap().price).collect();
    for w in prices.windows(2) {
        assert!(w[1] < w[0], "{prices:?}");
    }
}

fn scenarios() -> Vec<(f64, f64)> {
    vec![(10.0, 0.8), (4.0, 1.3), (0.0, 0.9), (7.0, 1.0)]
}

#[test]
fn shortfall_ratio_matches_brute_force() {
    let sc = scenarios();
    let loss = LossFunction::Quadratic;
    let y = 3.0;
    let s = shortfall_optimal_ratio(&loss, &sc, y).unwrap();
    // Budget is piecewise linear in c for the quadratic loss, so a log grid
    // plus linear interpolation inside the bracketing cell is exact.
    let k = |c: f64| sc.iter().map(|&(g, d)| if g > 0.0 { d * (g - (c * d / 2.0).min(g)) } else { 0.0 }).sum::<f64>() / 4.0;
    let grid: Vec<f64> = (0..=1_200_000).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 1_200_000.0)).collect();
    let j = grid.partition_point(|&c| k(c) > y);
    let (c0, c1) = (grid[j - 1], grid[j]);
    let c = c0 + (k(c0) - y) / (k(c0) - k(c1)) * (c1 - c0);
    assert!((s.multiplier - c).abs() < 1e-6, "{} {c}", s.multiplier);
    let risk = sc.iter().map(|&(g, d)| (c * d / 2.0).min(g).powi(2)).sum::<f64>() / 4.0;
    assert!((s.risk - risk).abs() < 1e-6);
    assert!((s.budget - y).abs() < 1e-9);
    assert_eq!(s.ratios[2], 0.0);
    assert!(s.ratios.iter().all(|r| (0.0..=1.0).contains(r)));
}

#[test]
fn shortfall_ratio_limits_and_power_loss() {
    let sc = scenarios();
    let full: f64 = sc.iter().map(|&(g, d)| g * d).sum::<f64>() / 4.0;
    let s = shortfall_optimal_ratio(&LossFunction::Quadratic, &sc, full * (1.0 - 1e-9)).unwrap();
    for (r, &(g, _)) in s.ratios.iter().zip(&sc) {
        if g > 0.0 {
            assert!(*r > 1.0 - 1e-6);
        }
    }
    assert!(shortfall_optimal_ratio(&LossFunction::Quadratic, &sc, full).is_err());
    let loss = LossFunction::power(3.0).unwrap();
    let s = shortfall_optimal_ratio(&loss, &sc, 3.0).unwrap();
    assert!((s.budget - 3.0).abs() < 1e-9);
    // Each unhedged amount is I(c D) where interior.
    for (r, &(g, d)) in s.ratios.iter().zip(&sc) {
        if g > 0.0 && *r > 0.0 {
            assert!(((1.0 - r) * g - loss.gradient_inverse(s.multiplier * d)).abs() < 1e-9);
        }
    }
}

#[test]
fn shortfall_budget_is_nonincreasing_in_multiplier() {
    let sc = scenarios();
    let mut last = f64::INFINITY;
    for y in [0.5, 1.0, 2.0, 4.0, 5.0] {
        let c = shortfall_optimal_ratio(&LossFunction::Quadratic, &sc, y).unwrap().multiplier;
        assert!(c < last);
        last = c;
    }
}

#[test]
fn quantile_hedge_reaches_target_frequency() {
    let pr = call_problem(0.8);
    let s = quantile_price(&pr).unwrap();
    let mut cfg = HedgeConfig::new(McConfig::new(20_000, 1000, 5).unwrap());
    cfg.grid = RebalanceGrid::Clustered { power: 3.0 };
    cfg.success_tolerance = 2.0;
    let v = verify_quantile_hedge(&pr, &s, DeltaMethod::ClosedForm, &cfg).unwrap();
    assert!((v.model_price - s.price).abs() < 1e-9);
    let f = v.report.success_frequency();
    assert!((f - 0.8).abs() < 4.0 * v.report.success.stderr + 0.005, "{f}");
    let pde = verify_quantile_hedge(&pr, &s, DeltaMethod::Pde { space_nodes: 800 }, &cfg).unwrap();
    assert!((pde.model_price - s.price).abs() < 5e-3, "{}", pde.model_price);
}

fn digital() -> (MarketModel, Payoff, ConstraintSet) {
    (MarketModel::arithmetic(100.0, 0.0, 10.0, 0.0).unwrap(), Payoff::digital(100.0), ConstraintSet::interval(0.0, 0.1))
}

#[test]
fn dual_bound_without_constraints_is_the_price() {
    let (m, g, _) = digital();
    let cfg = McConfig::new(100_000, 10, 2).unwrap();
    let b = dual_lower_bound(&m, &g, &ConstraintSet::full_space(1), 1.0, &[DualControl::constant(0.0)], &cfg).unwrap();
    let e = b.best_estimate();
    assert!((e.mean - 0.5).abs() < 3.0 * e.stderr);
    let err = dual_lower_bound(&m, &g, &ConstraintSet::full_space(1), 1.0, &[DualControl::constant(1.0)], &cfg);
    assert!(matches!(err, Err(Error::InfeasibleControl { .. })));
}

#[test]
fn dual_bound_stays_below_and_near_the_constrained_price() {
    let (m, g, k) = digital();
    let oracle = brownian_constrained_price(&g, &k, 100.0, 10.0, 1.0).unwrap();
    let mut controls: Vec<DualControl> = [0.0, 2.0, 5.0, 10.0, 20.0].iter().map(|&n| DualControl::constant(n)).collect();
    controls.push(DualControl::TerminalLift { switch: 1.0 - 1e-6, overshoot: 0.03 });
    let b = dual_lower_bound(&m, &g, &k, 1.0, &controls, &McConfig::new(100_000, 10, 4).unwrap()).unwrap();
    for e in &b.estimates {
        assert!(e.mean <= oracle + 3.0 * e.stderr, "{} > {oracle}", e.mean);
    }
    let best = b.best_estimate().mean;
    assert!(best >= 0.95 * oracle, "{best} {oracle}");
    assert!(matches!(b.best_control(), DualControl::TerminalLift { .. }));
}

#[test]
fn dual_bound_matches_density_route() {
    let (m, g, k) = digital();
    let nu = 5.0;
    let cfg = McConfig::new(200_000, 1, 6).unwrap();
    let direct = dual_lower_bound(&m, &g, &k, 1.0, &[DualControl::constant(nu)], &cfg).unwrap();
    // Same bound under P, reweighted by the density of Q^nu.
    let mc = MeasureChange::new(0.0, 10.0, PiecewiseConstant::constant(nu)).unwrap();
    let w = map_paths(200_000, |p| {
        let dw: f64 = path_rng(99, p as u64).sample(StandardNormal);
        let x = 100.0 + 10.0 * dw;
        density_along_path(&mc, &[dw], 1.0).unwrap() * g.eval(x) - k.support_1d(nu)
    });
    let e = estimate(&w, "").unwrap();
    let d = direct.best_estimate();
    let tol = 3.0 * (e.stderr.powi(2) + d.stderr.powi(2)).sqrt();
    assert!((e.mean - d.mean).abs() < tol, "{} {}", e.mean, d.mean);
}
