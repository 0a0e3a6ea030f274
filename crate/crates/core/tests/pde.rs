use superhedge::analytic::{bs_call, brownian_constrained_price, Payoff};
use superhedge::constraints::{facelift_amount, ConstraintSet, ProportionRange};
use superhedge::market::MarketModel;
use superhedge::pde::{
    estimate_convergence_order, solve_bsb, solve_constrained, solve_linear, ConstraintKind, Grid1D, Order, PdeOutcome,
    Scheme, Terminal,
};

fn bs_model(sigma: f64) -> MarketModel {
    MarketModel::geometric(100.0, 0.0, sigma, 0.0).unwrap()
}

fn digital_model() -> MarketModel {
    MarketModel::arithmetic(100.0, 0.0, 10.0, 0.0).unwrap()
}

#[test]
fn implicit_call_matches_closed_form() {
    let m = bs_model(0.2);
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 400, 400).unwrap();
    let sol = solve_linear(&m, &Terminal::Payoff(Payoff::call(100.0)), &grid, Scheme::Implicit).unwrap();
    let v = sol.price_at(100.0);
    println!("implicit call {v}");
    assert!((v - bs_call(100.0, 100.0, 0.0, 0.2, 1.0)).abs() < 1e-2);
    let cn = solve_linear(&m, &Terminal::Payoff(Payoff::call(100.0)), &grid, Scheme::CrankNicolson).unwrap();
    assert!((cn.price_at(100.0) - bs_call(100.0, 100.0, 0.0, 0.2, 1.0)).abs() < 1e-2);
}

#[test]
fn call_with_rate_matches_closed_form() {
    let m = MarketModel::geometric(100.0, 0.0, 0.25, 0.05).unwrap();
    let grid = Grid1D::for_model(&m, 0.25, 1.5, 400, 400).unwrap();
    let sol = solve_linear(&m, &Terminal::Payoff(Payoff::call(110.0)), &grid, Scheme::CrankNicolson).unwrap();
    for x in [90.0, 100.0, 120.0] {
        assert!((sol.price_at(x) - bs_call(x, 110.0, 0.05, 0.25, 1.5)).abs() < 1e-2, "x={x}");
    }
}

#[test]
fn constant_and_deterministic_cases() {
    let m = bs_model(0.3);
    let grid = Grid1D::for_model(&m, 0.3, 1.0, 64, 32).unwrap();
    let sol = solve_linear(&m, &Terminal::Payoff(Payoff::constant(3.0)), &grid, Scheme::Implicit).unwrap();
    for slice in &sol.values {
        for v in slice {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }
    let flat = bs_model(0.0);
    let grid = Grid1D::for_model(&flat, 0.2, 1.0, 64, 32).unwrap();
    let g = Payoff::call(100.0);
    let sol = solve_linear(&flat, &Terminal::Payoff(g.clone()), &grid, Scheme::CrankNicolson).unwrap();
    for slice in &sol.values {
        for (x, v) in grid.nodes().iter().zip(slice) {
            assert!((v - g.eval(*x)).abs() < 1e-12);
        }
    }
}

#[test]
fn terminal_slice_is_bit_exact() {
    let m = bs_model(0.2);
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 101, 20).unwrap();
    let g = Payoff::put(95.0);
    let sol = solve_linear(&m, &Terminal::Payoff(g.clone()), &grid, Scheme::Implicit).unwrap();
    for (x, v) in grid.nodes().iter().zip(sol.terminal()) {
        assert_eq!(*v, g.eval(*x));
    }
}

#[test]
fn explicit_scheme_checks_stability() {
    let m = bs_model(0.2);
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 400, 50).unwrap();
    let err = solve_linear(&m, &Terminal::Payoff(Payoff::call(100.0)), &grid, Scheme::Explicit).unwrap_err();
    assert!(matches!(err, superhedge::Error::Stability { .. }));
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 100, 1000).unwrap();
    let sol = solve_linear(&m, &Terminal::Payoff(Payoff::call(100.0)), &grid, Scheme::Explicit).unwrap();
    assert!((sol.price_at(100.0) - bs_call(100.0, 100.0, 0.0, 0.2, 1.0)).abs() < 3e-2);
}

#[test]
fn full_space_constraint_is_a_no_op() {
    let m = MarketModel::geometric(100.0, 0.0, 0.2, 0.03).unwrap();
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 200, 100).unwrap();
    let g = Payoff::call(100.0);
    let lin = solve_linear(&m, &Terminal::Payoff(g.clone()), &grid, Scheme::Implicit).unwrap();
    let out = solve_constrained(&m, &g, &ConstraintSet::full_space(1), &grid, Scheme::Implicit, ConstraintKind::Amount).unwrap();
    let con = out.solution().unwrap();
    assert_eq!(lin.values, con.values);
}

#[test]
fn constrained_digital_matches_facelifted_expectation() {
    let m = digital_model();
    let k = ConstraintSet::interval(0.0, 0.1);
    let g = Payoff::digital(100.0);
    let grid = Grid1D::for_model(&m, 10.0, 1.0, 400, 400).unwrap();
    let out = solve_constrained(&m, &g, &k, &grid, Scheme::Implicit, ConstraintKind::Amount).unwrap();
    let pde = out.price_at(100.0);
    let oracle = brownian_constrained_price(&g, &k, 100.0, 10.0, 1.0).unwrap();
    println!("constrained digital pde {pde} oracle {oracle}");
    assert!((pde - oracle).abs() < 1e-2);
    assert!(pde > 0.5 + 0.1);
}

#[test]
fn constrained_price_decreases_with_looser_bound() {
    let m = digital_model();
    let g = Payoff::digital(100.0);
    let grid = Grid1D::for_model(&m, 10.0, 1.0, 200, 200).unwrap();
    let prices: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&mb| {
            let k = ConstraintSet::interval(0.0, mb);
            solve_constrained(&m, &g, &k, &grid, Scheme::Implicit, ConstraintKind::Amount).unwrap().price_at(100.0)
        })
        .collect();
    println!("{prices:?}");
    assert!(prices[0] >= prices[1] && prices[1] >= prices[2]);
}

#[test]
fn gradient_constraint_holds_after_projection() {
    let m = MarketModel::geometric(100.0, 0.0, 0.3, 0.0).unwrap();
    let k = ConstraintSet::interval(-0.5, 0.6);
    let g = Payoff::digital(100.0);
    let grid = Grid1D::for_model(&m, 0.3, 1.0, 150, 60).unwrap();
    let sol = match solve_constrained(&m, &g, &k, &grid, Scheme::Implicit, ConstraintKind::Amount).unwrap() {
        PdeOutcome::Solved(s) => s,
        PdeOutcome::InfinitePrice => panic!("finite lift expected"),
    };
    let x = grid.nodes();
    for slice in &sol.values[..sol.values.len() - 1] {
        for j in 0..x.len() - 1 {
            let slope = (slice[j + 1] - slice[j]) / (x[j + 1] - x[j]);
            assert!(slope <= 0.6 + 1e-6 && slope >= -0.5 - 1e-6);
        }
    }
}

#[test]
fn infinite_facelift_is_signalled() {
    let m = bs_model(0.2);
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 64, 16).unwrap();
    let out = solve_constrained(&m, &Payoff::call(100.0), &ConstraintSet::interval(0.0, 0.5), &grid, Scheme::Implicit, ConstraintKind::Amount).unwrap();
    assert!(matches!(out, PdeOutcome::InfinitePrice));
    assert_eq!(out.price_at(100.0), f64::INFINITY);
}

#[test]
fn proportion_constraint_lifts_digital() {
    let m = bs_model(0.2);
    let k = ConstraintSet::interval(0.0, 1.0);
    let g = Payoff::digital(100.0);
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 200, 100).unwrap();
    let out = solve_constrained(&m, &g, &k, &grid, Scheme::Implicit, ConstraintKind::Proportion(ProportionRange::SupportDomain)).unwrap();
    let sol = out.solution().unwrap();
    // With r = 0, x/100 is a martingale and the lift x/100 ∧ 1 is the price
    // of a capped linear claim.
    let v = sol.price_at(100.0);
    let capped = 1.0 - bs_call(100.0, 100.0, 0.0, 0.2, 1.0) / 100.0;
    println!("proportion {v} vs {capped}");
    assert!((v - capped).abs() < 2e-3);
    assert!(v > superhedge::analytic::bs_digital(100.0, 100.0, 0.0, 0.2, 1.0));
}

#[test]
fn constrained_dominates_linear_of_lift() {
    let m = digital_model();
    let k = ConstraintSet::interval(0.0, 0.1);
    let g = Payoff::digital(100.0);
    let grid = Grid1D::for_model(&m, 10.0, 1.0, 200, 200).unwrap();
    let con = solve_constrained(&m, &g, &k, &grid, Scheme::Implicit, ConstraintKind::Amount).unwrap();
    let con = con.solution().unwrap();
    let lifted: Vec<f64> = grid.nodes().iter().map(|&x| facelift_amount(&g, &k, x).unwrap()).collect();
    let lin_lift = solve_linear(&m, &Terminal::Values(lifted), &grid, Scheme::Implicit).unwrap();
    let lin = solve_linear(&m, &Terminal::Payoff(g), &grid, Scheme::Implicit).unwrap();
    for j in 0..grid.len() {
        assert!(con.values[0][j] >= lin.values[0][j] - 1e-12);
        assert!(con.values[0][j] >= lin_lift.values[0][j] - 1e-8);
    }
}

#[test]
fn bsb_degenerate_interval_equals_linear() {
    let m = bs_model(0.2);
    let grid = Grid1D::for_model(&m, 0.2, 1.0, 200, 100).unwrap();
    let g = Payoff::call(100.0);
    let lin = solve_linear(&m, &Terminal::Payoff(g.clone()), &grid, Scheme::Implicit).unwrap();
    let bsb = solve_bsb(&g, 0.2, 0.2, 0.0, &grid, Scheme::Implicit).unwrap();
    for (a, b) in lin.values[0].iter().zip(&bsb.values[0]) {
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}

#[test]
fn bsb_convex_payoff_takes_high_vol() {
    let m = bs_model(0.3);
    let grid = Grid1D::for_model(&m, 0.3, 1.0, 400, 400).unwrap();
    let g = Payoff::call(100.0);
    let v = solve_bsb(&g, 0.1, 0.3, 0.0, &grid, Scheme::Implicit).unwrap().price_at(100.0);
    assert!((v - bs_call(100.0, 100.0, 0.0, 0.3, 1.0)).abs() < 1e-2, "{v}");
    let ex_grid = Grid1D::for_model(&m, 0.3, 1.0, 200, 800).unwrap();
    let ve = solve_bsb(&g, 0.1, 0.3, 0.0, &ex_grid, Scheme::Explicit).unwrap().price_at(100.0);
    assert!((ve - bs_call(100.0, 100.0, 0.0, 0.3, 1.0)).abs() < 2e-2, "{ve}");
}

#[test]
fn bsb_high_vol_approaches_spot() {
    let m = bs_model(5.0);
    // Wide log grids need fine spacing: the central scheme damps the linear
    // far field at a rate of order σ²h²/24.
    let grid = Grid1D::for_model(&m, 5.0, 1.0, 3200, 400).unwrap();
    let v = solve_bsb(&Payoff::call(100.0), 0.1, 5.0, 0.0, &grid, Scheme::Implicit).unwrap().price_at(100.0);
    println!("bsb sigma_hi=5: {v}, closed form {}", bs_call(100.0, 100.0, 0.0, 5.0, 1.0));
    assert!(v > 98.5);
}

#[test]
fn bsb_dominates_fixed_vol_solves() {
    // A call spread is neither convex nor concave.
    let g = Payoff::tabulated(vec![80.0, 100.0, 120.0], vec![0.0, 0.0, 20.0]).unwrap();
    let spread = Payoff::tabulated(vec![90.0, 110.0], vec![0.0, 20.0]).unwrap();
    for payoff in [g, spread] {
        let m = bs_model(0.3);
        let grid = Grid1D::for_model(&m, 0.3, 1.0, 200, 200).unwrap();
        let bsb = solve_bsb(&payoff, 0.1, 0.3, 0.0, &grid, Scheme::Implicit).unwrap();
        for s in [0.1, 0.2, 0.3] {
            let lin = solve_linear(&bs_model(s), &Terminal::Payoff(payoff.clone()), &grid, Scheme::Implicit).unwrap();
            for (a, b) in bsb.values[0].iter().zip(&lin.values[0]) {
                assert!(*a >= b - 1e-9, "sigma {s}: {a} < {b}");
            }
        }
    }
}

#[test]
fn implicit_order_against_closed_form() {
    let m = bs_model(0.2);
    let g = Payoff::call(100.0);
    let exact = bs_call(100.0, 100.0, 0.0, 0.2, 1.0);
    let report = estimate_convergence_order(
        |j, n| {
            let grid = Grid1D::for_model(&m, 0.2, 1.0, j, n)?;
            Ok(solve_linear(&m, &Terminal::Payoff(g.clone()), &grid, Scheme::Implicit)?.price_at(100.0))
        },
        &[(50, 50), (100, 100), (200, 200), (400, 400)],
        Some(exact),
    )
    .unwrap();
    println!("{report:?}");
    for o in &report.orders {
        match o {
            Order::Observed(p) => assert!((0.8..=2.2).contains(p), "order {p}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn constant_payoff_is_exact_on_all_grids() {
    let m = bs_model(0.2);
    let report = estimate_convergence_order(
        |j, n| {
            let grid = Grid1D::for_model(&m, 0.2, 1.0, j, n)?;
            Ok(solve_linear(&m, &Terminal::Payoff(Payoff::constant(1.0)), &grid, Scheme::Implicit)?.price_at(100.0))
        },
        &[(20, 10), (40, 20), (80, 40)],
        Some(1.0),
    )
    .unwrap();
    assert!(report.orders.iter().all(|o| *o == Order::Exact));
}

#[test]
fn bsb_degenerate_order_matches_linear() {
    let m = bs_model(0.2);
    let g = Payoff::call(100.0);
    let exact = bs_call(100.0, 100.0, 0.0, 0.2, 1.0);
    let levels = [(50, 50), (100, 100), (200, 200)];
    let lin = estimate_convergence_order(
        |j, n| Ok(solve_linear(&m, &Terminal::Payoff(g.clone()), &Grid1D::for_model(&m, 0.2, 1.0, j, n)?, Scheme::Implicit)?.price_at(100.0)),
        &levels,
        Some(exact),
    )
    .unwrap();
    let bsb = estimate_convergence_order(
        |j, n| Ok(solve_bsb(&g, 0.2, 0.2, 0.0, &Grid1D::for_model(&m, 0.2, 1.0, j, n)?, Scheme::Implicit)?.price_at(100.0)),
        &levels,
        Some(exact),
    )
    .unwrap();
    for (a, b) in lin.orders.iter().zip(&bsb.orders) {
        match (a, b) {
            (Order::Observed(p), Order::Observed(q)) => assert!((p - q).abs() < 1e-6),
            _ => panic!("orders {a:?} {b:?}"),
        }
    }
}
