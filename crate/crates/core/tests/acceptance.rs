//! Acceptance gate. Run with `cargo test -p tailsens-core --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::*;
use tailsens_core::experiments::{self, Scenario, Table1Variant, ALPHA};
use tailsens_core::*;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn within(what: &str, got: f64, want: f64, tol: f64) -> Outcome {
    let r = rel(got, want);
    let line = format!("{what} = {got:.6e} vs {want:.3e} (rel {r:.2e}, tol {tol:.0e})");
    if r <= tol {
        Ok(line)
    } else {
        Err(line)
    }
}

fn collect(parts: Vec<Outcome>) -> Outcome {
    let failed = parts.iter().any(|p| p.is_err());
    let text = parts
        .into_iter()
        .map(|p| match p {
            Ok(s) => s,
            Err(s) => format!("[x] {s}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let time = format!("{}{:.1}s of {}s", if in_time { "" } else { "[x] " }, took.as_secs_f64(), limit.as_secs());
    match out {
        Ok(s) if in_time => Ok(format!("{s}; {time}")),
        Ok(s) | Err(s) => Err(format!("{s}; {time}")),
    }
}

fn report(s: Scenario) -> Result<SensitivityReport, String> {
    analyze(&s.pair().map_err(|e| e.to_string())?, ALPHA, &EngineConfig::default()).map_err(|e| e.to_string())
}

fn row(rows: &[Scenario], pick: impl Fn(&Scenario) -> bool) -> Scenario {
    *rows.iter().find(|s| pick(s)).expect("scenario in table")
}

fn prior_var() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    timed(Duration::from_secs(60), || {
        pool.install(|| {
            let v = var(ALPHA, &[experiments::prior_cell().unwrap()], &EngineConfig::default()).map_err(|e| e.to_string())?;
            within("VaR(L)", v.value, 5.01e11, 5e-3)
        })
    })
}

fn table2() -> Outcome {
    timed(Duration::from_secs(300), || {
        let rows = experiments::table2();
        let mut parts = Vec::new();
        for (xi, approx, dv) in [(1.0, 2.00e8, 2.02e8), (1.2, 3.30e9, 3.31e9)] {
            let r = report(row(&rows, |s| s.xi_s == xi))?;
            parts.push(within(&format!("xi_S={xi} Approx"), r.approx, approx, 1e-2));
            parts.push(within(&format!("xi_S={xi} dVaR"), r.delta_var, dv, 2e-2));
            let sign = format!("xi_S={xi} Error = {:.3e}", r.error);
            parts.push(if r.error < 0.0 { Ok(sign) } else { Err(sign) });
        }
        collect(parts)
    })
}

fn table3() -> Outcome {
    let rows = experiments::table3();
    let mut parts = Vec::new();
    for (sigma, dv) in [(100.0, 1.05e11), (1e4, 1.50e12)] {
        let r = report(row(&rows, |s| s.sigma_s == sigma))?;
        let err = format!("sigma_S={sigma} |Error| = {:.2e}", r.error.abs());
        parts.push(if r.error.abs() <= 1e-4 { Ok(err) } else { Err(err) });
        parts.push(within(&format!("sigma_S={sigma} dVaR"), r.delta_var, dv, 1e-2));
    }
    collect(parts)
}

/// Closed form of the heavy-add-on approximation built from scratch: the
/// add-on quantile of the largest of a Poisson number of severities,
/// `(sigma/xi)((lambda / -ln alpha)^xi - 1)`, plus `v^(gamma+1-beta) / (k gamma)`.
fn heavy_add_on_closed_form(l: &CompoundCell, s: &CompoundCell, alpha: f64) -> f64 {
    let (ll, xl, sl) = (l.lambda(), l.severity.xi(), l.severity.sigma());
    let (ls, xs, ss) = (s.lambda(), s.severity.xi(), s.severity.sigma());
    let (beta, gamma) = (1.0 / xl, 1.0 / xs);
    let k = (ls / ll) * (ss / xs).powf(gamma) / (sl / xl).powf(beta);
    let v = ss / xs * ((ls / -alpha.ln()).powf(xs) - 1.0);
    v + v.powf(gamma + 1.0 - beta) / (k * gamma)
}

fn table4() -> Outcome {
    let rows = experiments::table4();
    let mut parts = Vec::new();
    for (xi, total) in [(3.5, 2.99e15), (4.0, 2.52e17)] {
        let s = row(&rows, |s| s.xi_s == xi);
        let r = report(s)?;
        parts.push(within(&format!("xi_S={xi} VaR(L+S)"), r.var_ls, total, 2e-2));
        let pair = s.pair().unwrap();
        let oracle = heavy_add_on_closed_form(&pair.cell_l, &pair.cell_s, ALPHA);
        parts.push(within(&format!("xi_S={xi} Approx vs closed form"), r.approx, oracle, 1e-3));
    }
    collect(parts)
}

fn table1() -> Outcome {
    let mut parts = Vec::new();
    let stated = experiments::table1(Table1Variant::AsStated);
    for xi in [0.1, 0.3] {
        let r = report(row(&stated, |s| s.xi_s == xi))?;
        let el = 10.0 * 1e4 / (1.0 - xi);
        parts.push(within(&format!("lambda_S=10 xi_S={xi} dVaR"), r.delta_var, el, 2e-2));
    }
    let published = experiments::table1(Table1Variant::AsPublished);
    for (xi, dv) in [(0.1, 1_111_092.0), (0.3, 1_428_553.0)] {
        let r = report(row(&published, |s| s.xi_s == xi))?;
        parts.push(within(&format!("lambda_S=100 xi_S={xi} dVaR"), r.delta_var, dv, 2e-2));
    }
    collect(parts)
}

fn figure1() -> Outcome {
    let cfg = EngineConfig::default();
    let mut parts = Vec::new();
    for s in experiments::figure1() {
        let pair = s.pair().unwrap();
        let at = |a: f64| analyze(&pair, a, &cfg).map(|r| r.error.abs()).map_err(|e| e.to_string());
        let (e3, e5) = (at(0.999)?, at(0.99999)?);
        let line = format!("xi_S={} |Error| {e3:.3e} -> {e5:.3e}", s.xi_s);
        parts.push(if e5 < e3 { Ok(line) } else { Err(line) });
    }
    collect(parts)
}

fn cross_engine() -> Outcome {
    timed(Duration::from_secs(120), || {
        let c = cell(2.0, 0.5, 1.0);
        let mut parts = Vec::new();
        for alpha in [0.9, 0.99] {
            let cf = var(alpha, &[c], &EngineConfig::default()).map_err(|e| e.to_string())?.value;
            let pj_cfg = EngineConfig {
                panjer_step: Some(1e-4),
                ..EngineConfig::with_kind(EngineKind::Panjer)
            };
            let pj = var(alpha, &[c], &pj_cfg).map_err(|e| e.to_string())?.value;
            parts.push(within(&format!("alpha={alpha} Panjer vs cf"), pj, cf, 2e-3));
            let mc_cfg = EngineConfig {
                mc_samples: 10_000_000,
                ..EngineConfig::with_kind(EngineKind::MonteCarlo)
            };
            let mc = var(alpha, &[c], &mc_cfg).map_err(|e| e.to_string())?;
            let (lo, hi) = (mc.diagnostics.ci_low.unwrap(), mc.diagnostics.ci_high.unwrap());
            let line = format!("alpha={alpha} MC 95% CI [{lo:.6e}, {hi:.6e}] vs cf {cf:.6e}");
            parts.push(if lo <= cf && cf <= hi { Ok(line) } else { Err(line) });
        }
        collect(parts)
    })
}

fn property_suites() -> Outcome {
    let trend = |name: &str, d: Result<Vec<f64>, String>| -> Outcome {
        let d = d?;
        let shown: Vec<String> = d.iter().map(|v| format!("{v:.2e}")).collect();
        let line = format!("{name} [{}]", shown.join(", "));
        if decreasing(&d) {
            Ok(line)
        } else {
            Err(line)
        }
    };
    collect(vec![
        run_gpd_roundtrip(&mut runner(512)).map(|_| "GPD roundtrip".into()),
        run_cf_identities(&mut runner(256)).map(|_| "cf identities".into()),
        run_dominance(&mut runner(10)).map(|_| "dominance on 10 pairs".into()),
        trend("convolution tail ratio gap", convolution_ratio_trend()),
        trend("finite-mean ratio gap", finite_mean_trend()),
        trend("power-difference ratio gap", power_diff_trend()),
    ])
}

fn small_add_on() -> Outcome {
    let pair = RiskPair::independent(cell(10.0, 0.4, 1e4), cell(10.0, 0.1, 1e4));
    let rows = marginal_vs_component(&pair, 0.99, &[0.01], 10_000_000, EngineConfig::default().mc_seed)
        .map_err(|e| e.to_string())?;
    let mean = pair.cell_s.expected_loss().unwrap();
    within("(VaR(L+eS)-VaR(L))/e", rows[0].marginal, mean, 0.1)
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("prior VaR", prior_var),
        ("table 2", table2),
        ("table 3", table3),
        ("table 4", table4),
        ("table 1", table1),
        ("figure 1", figure1),
        ("cross-engine", cross_engine),
        ("property suites", property_suites),
        ("small add-on", small_add_on),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {} ({name}): PASS | {d}", i + 1),
            Err(d) => {
                println!("criterion {} ({name}): FAIL | {d}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
