use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use superhedge::analytic::bs_call;
use superhedge::io::{read_table, Table};

struct Run {
    code: i32,
    table: Option<Table>,
    bytes: Option<Vec<u8>>,
    stderr: String,
}

fn run_in(dir: &Path, command: &str, config: &Value, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{command}.json"));
    fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out_dir = dir.join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_superhedge"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap();
    let name = config.get("output").and_then(Value::as_str).map(str::to_string).unwrap_or(format!("{command}.csv"));
    let file: PathBuf = out_dir.join(name);
    let code = o.status.code().unwrap();
    let (table, bytes) = if code == 0 { (Some(read_table(&file).unwrap()), Some(fs::read(&file).unwrap())) } else { (None, None) };
    if code == 0 {
        fs::remove_file(&file).unwrap();
    }
    Run { code, table, bytes, stderr: String::from_utf8_lossy(&o.stderr).into_owned() }
}

fn run(command: &str, config: &Value) -> Run {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), command, config, &[])
}

fn bs_config() -> Value {
    json!({
        "market": {"spot": 100.0, "sigma": 0.2, "rate": 0.0, "maturity": 1.0},
        "payoff": {"kind": "call", "strike": 100.0}
    })
}

fn with(mut base: Value, key: &str, block: Value) -> Value {
    base[key] = block;
    base
}

fn value(t: &Table, col: &str) -> f64 {
    t.floats(col).unwrap()[0]
}

#[test]
fn price_bs_reproduces_the_closed_form() {
    let r = run("price-bs", &bs_config());
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = r.table.unwrap();
    assert!((value(&t, "price") - 7.9656).abs() < 1e-4);
    assert_eq!(value(&t, "price"), bs_call(100.0, 100.0, 0.0, 0.2, 1.0));
    for k in ["version", "seed", "config_hash", "command"] {
        assert!(t.meta(k).is_some(), "missing {k}");
    }
}

#[test]
fn facelift_without_constraints_returns_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = "x,value\n80,0\n95,1.5\n100,2\n110,12\n130,12\n";
    fs::write(dir.path().join("g.csv"), table).unwrap();
    let cfg = json!({"payoff": {"kind": "table", "path": "g.csv"}, "constraints": {"kind": "full"}});
    let r = run_in(dir.path(), "facelift", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = r.table.unwrap();
    assert_eq!(t.headers, vec!["x", "value"]);
    assert_eq!(t.floats("x").unwrap(), vec![80.0, 95.0, 100.0, 110.0, 130.0]);
    assert_eq!(t.floats("value").unwrap(), vec![0.0, 1.5, 2.0, 12.0, 12.0]);
}

#[test]
fn quantile_at_full_level_is_the_price() {
    let q = run("quantile", &with(bs_config(), "riskprice", json!({"level": 1.0})));
    assert_eq!(q.code, 0, "{}", q.stderr);
    let t = q.table.unwrap();
    let p = run("price-bs", &bs_config()).table.unwrap();
    assert!((value(&t, "price") - value(&p, "price")).abs() < 1e-9);
    assert_eq!(t.rows[0][t.column("q_bar").unwrap()], "inf");
}

#[test]
fn infinite_price_is_reported_in_band() {
    let cfg = with(bs_config(), "constraints", json!({"kind": "interval", "lo": 0.0, "hi": 0.5}));
    let r = run("pde-constrained", &with(cfg, "pde", json!({"space_nodes": 64, "time_steps": 16})));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = r.table.unwrap();
    assert_eq!(t.meta("price"), Some("inf"));
    assert_eq!(t.rows[0][t.column("value").unwrap()], "inf");
}

#[test]
fn exit_codes_separate_input_from_numeric_failures() {
    let mut bad = bs_config();
    bad["market"]["volatility"] = json!(0.2);
    let r = run("price-bs", &bad);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("price-bs.json") && r.stderr.contains("volatility"), "{}", r.stderr);

    let unstable = with(bs_config(), "pde", json!({"space_nodes": 400, "time_steps": 50, "scheme": "explicit"}));
    assert_eq!(run("pde-linear", &unstable).code, 3);

    let mut mismatch = bs_config();
    mismatch["command"] = json!("pde-linear");
    assert_eq!(run("price-bs", &mismatch).code, 2);
    assert_eq!(run("no-such-command", &bs_config()).code, 2);

    let missing = with(bs_config(), "payoff", json!({"kind": "table", "path": "absent.csv"}));
    let r = run("price-bs", &missing);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("absent.csv"));
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides_apply() {
    let cfg = with(bs_config(), "mc", json!({"paths": 500, "steps": 20, "seed": 3}));
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(dir.path(), "hedge-sim", &cfg, &[]);
    let b = run_in(dir.path(), "hedge-sim", &cfg, &[]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.bytes, b.bytes);
    let c = run_in(dir.path(), "hedge-sim", &cfg, &["--seed", "4"]);
    let (ta, tc) = (a.table.unwrap(), c.table.unwrap());
    assert_eq!(tc.meta("seed"), Some("4"));
    assert_ne!(ta.meta("config_hash"), tc.meta("config_hash"));
    assert_ne!(ta.floats("x_T").unwrap(), tc.floats("x_T").unwrap());
    assert_eq!(ta.headers, vec!["path_id", "x_T", "y_T", "error"]);
}

#[test]
fn every_command_runs_and_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sc.csv"), "G,density\n10,0.8\n4,1.3\n0,0.9\n7,1.0\n").unwrap();
    fs::write(dir.path().join("rates.csv"), "t,rate\n0,0.6\n0.5,0.4\n").unwrap();
    let small_pde = json!({"space_nodes": 101, "time_steps": 50});
    let digital = json!({
        "market": {"flavor": "arithmetic", "spot": 100.0, "sigma": 10.0},
        "payoff": {"kind": "digital", "strike": 100.0},
        "constraints": {"kind": "interval", "lo": 0.0, "hi": 0.1}
    });
    let cases: Vec<(&str, Value, &str)> = vec![
        ("price-bs", bs_config(), "price"),
        ("price-exchange", json!({"analytic": {"s1": 100.0, "s2": 95.0, "sigma1": 0.3, "sigma2": 0.2, "rho": 0.5, "tau": 1.0}}), "price"),
        ("facelift", with(digital.clone(), "constraints", json!({"kind": "interval", "lo": 0.0, "hi": 0.1, "grid_lo": 80.0, "grid_hi": 120.0, "grid_nodes": 41})), "value"),
        ("pde-linear", with(bs_config(), "pde", small_pde.clone()), "value"),
        ("pde-constrained", with(digital.clone(), "pde", small_pde.clone()), "value"),
        ("pde-bsb", with(bs_config(), "pde", json!({"space_nodes": 101, "time_steps": 50, "sigma_lo": 0.1, "sigma_hi": 0.3})), "value"),
        ("quantile", with(bs_config(), "riskprice", json!({"level": 0.8})), "price"),
        ("shortfall", with(bs_config(), "riskprice", json!({"level": -100.0})), "price"),
        ("dual-bound", with(with(digital.clone(), "riskprice", json!({"controls": [{"kind": "constant", "nu": 0.0}, {"kind": "lift", "switch": 0.999, "overshoot": 0.3}]})), "mc", json!({"paths": 1000, "steps": 10})), "bound"),
        ("hedge-sim", with(bs_config(), "mc", json!({"paths": 200, "steps": 10, "delta": "pde", "delta_nodes": 101})), "y_T"),
        ("liquidate", json!({
            "liquidation": {"sigma": 0.2, "impact": 0.01, "target": 90.0, "level": 0.0, "x1": 100.0,
                "schedules": [{"kind": "constant", "total": 1.0}, {"kind": "front-loaded", "total": 1.0, "power": 2.0}, {"kind": "table", "path": "rates.csv"}]},
            "mc": {"paths": 500, "steps": 50}
        }), "y_star"),
        ("convergence", with(bs_config(), "pde", json!({"levels": [[50, 50], [100, 100], [200, 200]], "reference": bs_call(100.0, 100.0, 0.0, 0.2, 1.0)})), "error"),
    ];
    for (cmd, cfg, col) in cases {
        let r = run_in(dir.path(), cmd, &cfg, &[]);
        assert_eq!(r.code, 0, "{cmd}: {}", r.stderr);
        let t = r.table.unwrap();
        assert!(!t.rows.is_empty(), "{cmd}");
        assert!(t.floats(col).is_ok(), "{cmd}: column {col}");
    }
    let sc = with(json!({}), "riskprice", json!({"scenarios": "sc.csv", "budget": 3.0}));
    let r = run_in(dir.path(), "shortfall", &sc, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.table.unwrap().floats("ratio").unwrap().len(), 4);
}

#[test]
fn gamma_experiment_reports_the_rate() {
    let cfg = json!({
        "market": {"spot": 100.0, "sigma": 0.2},
        "payoff": {"kind": "softplus", "strike": 100.0, "width": 5.0, "lo": 0.0, "hi": 2000.0, "nodes": 20001},
        "mc": {"paths": 2000, "steps": 320, "gamma": {"base": 0.15, "skew": 0.1, "reference": 100.0, "t1": 0.5,
            "instrument_strike": 100.0, "t2": 1.0, "rebalances": [10, 20, 40], "space_nodes": 601, "time_steps": 160}}
    });
    let r = run("gamma-exp", &cfg);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = r.table.unwrap();
    let slope: f64 = t.meta("log_log_slope").unwrap().parse().unwrap();
    assert!((-1.35..=-0.65).contains(&slope), "{slope}");
}
