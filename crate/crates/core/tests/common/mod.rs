//! Checks shared by the property suite and the acceptance gate.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use tailsens_core::asymptotics::{convolution_tail_ratio, tail_difference_ratio};
use tailsens_core::engine::{cf_compound, cf_severity};
use tailsens_core::*;

pub fn cell(lambda: f64, xi: f64, sigma: f64) -> CompoundCell {
    CompoundCell::from_params(lambda, xi, sigma).unwrap()
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

pub fn xi_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..1.0, 1.0f64..4.0]
}

pub fn sigma_strategy() -> impl Strategy<Value = f64> {
    (-2.0f64..6.0).prop_map(|e| 10f64.powf(e))
}

/// `p -> quantile -> cdf` returns `p` to 1e-12 relative.
pub fn gpd_roundtrip(xi: f64, sigma: f64, p: f64) -> Result<(), TestCaseError> {
    let d = GpdSeverity::new(xi, sigma).unwrap();
    let x = d.quantile(p).unwrap();
    let back = d.cdf(x).unwrap();
    prop_assert!(
        (back - p).abs() <= 1e-12 * p.max(1e-300) || (back - p).abs() <= 1e-15,
        "xi={xi} sigma={sigma} p={p} x={x} back={back}"
    );
    // the tail side carries the precision near 1
    let q = 1.0 - p;
    if q > 0.0 {
        let sf = d.sf(x).unwrap();
        prop_assert!((sf - q).abs() <= 1e-12 * q + 1e-16, "sf={sf} q={q}");
    }
    Ok(())
}

/// `phi(0) = 1`, `|phi| <= 1` and `phi(-t) = conj(phi(t))` for the severity
/// and the compound cell.
pub fn cf_identities(c: &CompoundCell, t: f64) -> Result<(), TestCaseError> {
    let cfg = EngineConfig::default();
    let at0 = cf_severity(0.0, &c.severity, &cfg).unwrap();
    prop_assert!((at0.re - 1.0).abs() < 1e-15 && at0.im.abs() < 1e-15);
    let c0 = cf_compound(0.0, c, &cfg).unwrap();
    prop_assert!((c0.re - 1.0).abs() < 1e-15 && c0.im.abs() < 1e-15);
    for tt in [t, -t] {
        let p = cf_severity(tt, &c.severity, &cfg).unwrap();
        prop_assert!(p.norm() <= 1.0 + 1e-12, "|phi({tt})| = {}", p.norm());
        let q = cf_compound(tt, c, &cfg).unwrap();
        prop_assert!(q.norm() <= 1.0 + 1e-12, "|phi_cpd({tt})| = {}", q.norm());
    }
    let (a, b) = (cf_severity(t, &c.severity, &cfg).unwrap(), cf_severity(-t, &c.severity, &cfg).unwrap());
    prop_assert!((a - b.conj()).norm() <= 1e-13, "{a} vs {b}");
    Ok(())
}

/// `VaR(L+S) >= VaR(L)` for a pair, through the sensitivity report.
pub fn dominance(pair: &RiskPair, alpha: f64) -> Result<(), TestCaseError> {
    let cfg = EngineConfig {
        mc_samples: 200_000,
        ..EngineConfig::default()
    };
    let r = analyze(pair, alpha, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(r.var_ls >= r.var_l, "alpha={alpha} {pair:?}: {} < {}", r.var_ls, r.var_l);
    prop_assert!(r.delta_var >= 0.0);
    Ok(())
}

pub fn pair_strategy() -> impl Strategy<Value = (RiskPair, f64)> {
    (
        0.5f64..10.0,
        0.2f64..2.5,
        sigma_strategy(),
        0.5f64..10.0,
        0.2f64..2.5,
        sigma_strategy(),
        any::<bool>(),
        0.9f64..0.9999,
    )
        .prop_map(|(ll, xl, sl, ls, xs, ss, dependent, alpha)| {
            let (l, s) = (cell(ll, xl, sl), cell(ls, xs, ss));
            let pair = if dependent {
                let g = GSpec::new(0.5, 2.0, 0.5, 1.0 / ss).unwrap();
                RiskPair::scale_mixture(l, s, g)
            } else {
                RiskPair::independent(l, s)
            };
            (pair, alpha)
        })
}

pub fn run_gpd_roundtrip(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&(xi_strategy(), sigma_strategy(), 0.0f64..=(1.0 - 1e-9)), |(xi, sigma, p)| {
            gpd_roundtrip(xi, sigma, p)
        })
        .map_err(|e| e.to_string())
}

pub fn run_cf_identities(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(
            &(0.1f64..10.0, xi_strategy(), sigma_strategy(), -6.0f64..3.0),
            |(lambda, xi, sigma, lt)| cf_identities(&cell(lambda, xi, sigma), 10f64.powf(lt) / sigma),
        )
        .map_err(|e| e.to_string())
}

pub fn run_dominance(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&pair_strategy(), |(pair, alpha)| dominance(&pair, alpha))
        .map_err(|e| e.to_string())
}

/// Strictly decreasing sequence.
pub fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `|P(L+S > x) / (P(L > x) + P(S > x)) - 1|` at the total's VaR for
/// increasing levels.
pub fn convolution_ratio_trend() -> Result<Vec<f64>, String> {
    let cfg = EngineConfig::default();
    let (l, s) = (cell(2.0, 0.5, 1.0), cell(3.0, 0.7, 2.0));
    [0.99, 0.999, 0.9999]
        .iter()
        .map(|&a| {
            let x = var(a, &[l, s], &cfg).map_err(|e| e.to_string())?.value;
            Ok((convolution_tail_ratio(x, &l, &s, &cfg).map_err(|e| e.to_string())? - 1.0).abs())
        })
        .collect()
}

/// Relative distance of `(F_{L+S} - F_L)/f_L` from `-E[S]`, finite-mean
/// add-on with `beta + 1 < gamma`.
pub fn finite_mean_trend() -> Result<Vec<f64>, String> {
    let cfg = EngineConfig::default();
    let (l, s) = (cell(2.0, 0.5, 1.0), cell(2.0, 0.2, 1.0));
    let es = s.expected_loss().unwrap();
    [100.0, 300.0, 1000.0, 3000.0]
        .iter()
        .map(|&x| {
            let r = tail_difference_ratio(x, &l, &s, &cfg).map_err(|e| e.to_string())?;
            Ok((r / -es - 1.0).abs())
        })
        .collect()
}

/// Relative distance of `(F_{L+S} - F_L)/f_L` from `-k x^(beta+1-gamma)/beta`
/// with `beta < gamma <= beta + 1`.
pub fn power_diff_trend() -> Result<Vec<f64>, String> {
    let cfg = EngineConfig::default();
    let (l, s) = (cell(2.0, 0.5, 1.0), cell(2.0, 0.4, 1.0));
    let (beta, gamma) = (l.tail_index(), s.tail_index());
    let k = k_constant(&l, &s).value;
    [100.0, 300.0, 1000.0, 3000.0, 1e4]
        .iter()
        .map(|&x| {
            let r = tail_difference_ratio(x, &l, &s, &cfg).map_err(|e| e.to_string())?;
            let limit = -k * x.powf(beta + 1.0 - gamma) / beta;
            Ok((r / limit - 1.0).abs())
        })
        .collect()
}
