mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tailsens_core::asymptotics::{equal_tails_total, subexponential_aggregate_var};
use tailsens_core::engine::{cdf_compound, sample_pair};
use tailsens_core::experiments;
use tailsens_core::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gpd_cdf_is_monotone_and_complements_sf(xi in xi_strategy(), sigma in sigma_strategy(), a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let d = GpdSeverity::new(xi, sigma).unwrap();
        let (x1, x2) = (a.min(b) * sigma, a.max(b) * sigma);
        prop_assert!(d.cdf(x2).unwrap() >= d.cdf(x1).unwrap());
        for x in [x1, x2] {
            if d.sf(x).unwrap() > 1e-10 {
                prop_assert!((d.sf(x).unwrap() + d.cdf(x).unwrap() - 1.0).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn gpd_quantile_roundtrip(xi in xi_strategy(), sigma in sigma_strategy(), p in 0.0f64..=(1.0 - 1e-9)) {
        gpd_roundtrip(xi, sigma, p)?;
    }

    #[test]
    fn gpd_tail_is_regularly_varying(xi in 0.1f64..4.0, sigma in sigma_strategy()) {
        let d = GpdSeverity::new(xi, sigma).unwrap();
        let x = 1e6 * sigma;
        for t in [0.5, 2.0, 10.0] {
            let r = d.sf(t * x).unwrap() / d.sf(x).unwrap();
            let limit = t.powf(-1.0 / xi);
            prop_assert!((r / limit - 1.0).abs() < 5e-3, "xi={xi} t={t} {r} vs {limit}");
        }
    }

    #[test]
    fn characteristic_function_identities(lambda in 0.1f64..10.0, xi in xi_strategy(), sigma in sigma_strategy(), lt in -6.0f64..3.0) {
        cf_identities(&cell(lambda, xi, sigma), 10f64.powf(lt) / sigma)?;
    }

    #[test]
    fn k_scales_with_common_sigma_factor(
        ll in 0.5f64..20.0, xl in 0.2f64..3.0, sl in sigma_strategy(),
        ls in 0.5f64..20.0, xs in 0.2f64..3.0, ss in sigma_strategy(),
        c in (-3.0f64..3.0).prop_map(|e| 10f64.powf(e)),
    ) {
        let (l, s) = (cell(ll, xl, sl), cell(ls, xs, ss));
        let (l2, s2) = (l.scaled(c).unwrap(), s.scaled(c).unwrap());
        let k = k_constant(&l, &s).value;
        let k2 = k_constant(&l2, &s2).value;
        let expected = k * c.powf(1.0 / xs - 1.0 / xl);
        prop_assert!((k2 / expected - 1.0).abs() < 1e-11, "{k2} vs {expected}");
    }

    #[test]
    fn classification_is_stable_under_small_perturbations(
        beta in 0.1f64..10.0,
        gamma in prop_oneof![0.1f64..10.0, Just(-1.0), Just(-2.0), Just(-3.0)],
        d1 in -0.49f64..0.49, d2 in -0.49f64..0.49,
    ) {
        let eq_tol = DEFAULT_EQ_TOL;
        // negative draws pick a boundary: equal tails or either power-difference edge
        let gamma = if gamma > 0.0 {
            gamma
        } else if gamma == -1.0 {
            beta
        } else if gamma == -2.0 {
            beta + 1.0
        } else {
            (beta - 1.0).max(0.1)
        };
        let base = classify_regime(beta, gamma, eq_tol).unwrap();
        let scale = eq_tol * 1f64.max(beta).max(gamma);
        let moved = classify_regime(beta + d1 * scale, gamma + d2 * scale, eq_tol).unwrap();
        prop_assert!((base.kind.order() - moved.kind.order()).abs() <= 1, "{base:?} -> {moved:?}");
    }

    #[test]
    fn conditional_expectation_ignores_sample_order(seed in any::<u64>(), x in 0.5f64..20.0, m in 30usize..200) {
        let pair = RiskPair::independent(cell(2.0, 0.5, 1.0), cell(1.0, 0.3, 1.0));
        let sample = sample_pair(&pair, 5_000, seed);
        let mut shuffled = sample.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37));
        for bw in [Bandwidth::Auto, Bandwidth::Neighbors(m), Bandwidth::Fixed(0.5)] {
            for cond in [Conditioning::OnL, Conditioning::OnSum] {
                let a = conditional_expectation_at(&sample, cond, x, bw);
                let b = conditional_expectation_at(&shuffled, cond, x, bw);
                let again = conditional_expectation_at(&sample, cond, x, bw);
                prop_assert_eq!(&a, &again);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert!(a.value.to_bits() == b.value.to_bits() && a.n_effective == b.n_effective),
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn compound_cdf_is_clamped_and_monotone(lambda in 0.2f64..10.0, xi in 0.1f64..2.5, sigma in sigma_strategy()) {
        let c = cell(lambda, xi, sigma);
        let cfg = EngineConfig::default();
        let mut prev = 0.0;
        for i in 0..24 {
            let x = sigma * 10f64.powf(-2.0 + 0.3 * i as f64);
            let f = cdf_compound(x, &[c], &cfg).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev, "x={x}: {f} < {prev}");
            prev = f;
        }
    }

    #[test]
    fn inversion_and_panjer_agree(lambda in 0.2f64..10.0, xi in 0.1f64..1.0, sigma in sigma_strategy()) {
        let c = cell(lambda, xi, sigma);
        for alpha in [0.9, 0.99] {
            let cf = var(alpha, &[c], &EngineConfig::default()).unwrap();
            let pj = var(alpha, &[c], &EngineConfig::with_kind(EngineKind::Panjer)).unwrap();
            if cf.value == 0.0 {
                prop_assert_eq!(pj.value, 0.0);
            } else {
                prop_assert!((cf.value - pj.value).abs() / cf.value <= 2e-3, "alpha={alpha} {} vs {}", cf.value, pj.value);
            }
        }
    }

    #[test]
    fn report_is_self_consistent(xs in 0.1f64..4.5, ss in sigma_strategy(), alpha in 0.99f64..0.9999) {
        let pair = RiskPair::independent(experiments::prior_cell().unwrap(), cell(10.0, xs, ss));
        let r = analyze(&pair, alpha, &EngineConfig::default()).unwrap();
        prop_assert_eq!(r.delta_var, r.var_ls - r.var_l);
        prop_assert!(r.delta_var >= 0.0);
        let target = match r.comparison {
            Comparison::DeltaVar => r.delta_var,
            Comparison::TotalVar => r.var_ls,
        };
        let recomputed = r.approx / target - 1.0;
        prop_assert!((recomputed - r.error).abs() <= 1e-15 * recomputed.abs().max(1.0));
        if r.regime.kind == RegimeKind::ExpectedLoss {
            prop_assert_eq!(r.approx, pair.cell_s.expected_loss().unwrap());
        }
        prop_assert_eq!(r.var_s.is_some(), r.regime.kind.needs_var_s());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn adding_a_loss_never_lowers_var((pair, alpha) in pair_strategy()) {
        dominance(&pair, alpha)?;
    }
}

#[test]
fn monte_carlo_interval_covers_inversion() {
    // 95% intervals: more than two misses in eight is a 0.6% event
    let cases = [
        (2.0, 0.5, 1.0, 0.9),
        (2.0, 0.5, 1.0, 0.99),
        (0.5, 0.9, 3.0, 0.95),
        (5.0, 0.3, 10.0, 0.99),
        (10.0, 0.7, 1.0, 0.9),
        (1.0, 1.0, 100.0, 0.99),
        (8.0, 0.2, 0.1, 0.95),
        (3.0, 0.6, 2.0, 0.995),
    ];
    let mut misses = Vec::new();
    for (i, &(lambda, xi, sigma, alpha)) in cases.iter().enumerate() {
        let c = cell(lambda, xi, sigma);
        let cf = var(alpha, &[c], &EngineConfig::default()).unwrap().value;
        let cfg = EngineConfig {
            mc_samples: 1_000_000,
            mc_seed: 1000 + i as u64,
            ..EngineConfig::with_kind(EngineKind::MonteCarlo)
        };
        let mc = var(alpha, &[c], &cfg).unwrap();
        let (lo, hi) = (mc.diagnostics.ci_low.unwrap(), mc.diagnostics.ci_high.unwrap());
        if !(lo <= cf && cf <= hi) {
            misses.push((i, cf, lo, hi));
        }
    }
    assert!(misses.len() <= 2, "{misses:?}");
}

#[test]
fn convolution_tail_ratio_approaches_one() {
    let d = convolution_ratio_trend().unwrap();
    assert!(decreasing(&d), "{d:?}");
}

#[test]
fn finite_mean_add_on_ratio_approaches_minus_mean() {
    let d = finite_mean_trend().unwrap();
    assert!(decreasing(&d), "{d:?}");
}

#[test]
fn power_difference_ratio_approaches_limit() {
    let d = power_diff_trend().unwrap();
    assert!(decreasing(&d), "{d:?}");
}

#[test]
fn equal_tails_approximation_meets_mixture_quantile() {
    let (l, s) = (cell(10.0, 2.0, 1e4), cell(5.0, 2.0, 3e3));
    let cfg = EngineConfig::default();
    let regime = regime_of(&l, &s, DEFAULT_EQ_TOL).unwrap();
    assert_eq!(regime.kind, RegimeKind::EqualTails);
    let k = k_constant(&l, &s);
    let d: Vec<f64> = [0.99, 0.999, 0.9999]
        .iter()
        .map(|&a| {
            let var_l = var(a, &[l], &cfg).unwrap().value;
            let approx = equal_tails_total(k, regime.beta, var_l);
            let agg = subexponential_aggregate_var(a, &l, &s, &cfg, DEFAULT_EQ_TOL).unwrap();
            (approx / agg - 1.0).abs()
        })
        .collect();
    assert!(decreasing(&d), "{d:?}");
}

#[test]
fn linearization_error_is_quadratic() {
    for beta in [0.3, 0.5, 0.8, 1.5, 3.0] {
        let c = (1.0 / beta) * (1.0 / beta - 1.0);
        for k in [1e-1, 1e-2, 1e-3] {
            let exact = ((1.0 / beta) * f64::ln_1p(k)).exp_m1();
            assert!((exact - k / beta).abs() <= c.abs() * k * k, "beta={beta} k={k}");
        }
    }
}

#[test]
fn delta_var_grows_with_alpha() {
    let cfg = EngineConfig::default();
    for s in experiments::figure1() {
        let rows = sweep_alpha(&s.pair().unwrap(), &experiments::FIGURE1_ALPHAS, &cfg).unwrap();
        let dv: Vec<f64> = rows.into_iter().map(|r| r.unwrap().delta_var).collect();
        assert!(dv.windows(2).all(|w| w[1] >= w[0]), "xi_S={}: {dv:?}", s.xi_s);
    }
}

#[test]
fn independent_conditional_expectation_is_the_mean() {
    let pair = RiskPair::independent(cell(10.0, 0.4, 1e4), cell(10.0, 0.1, 1e4));
    let sample = sample_pair(&pair, 1_000_000, 77);
    let mean = pair.cell_s.expected_loss().unwrap();
    let mut l: Vec<f64> = sample.iter().map(|p| p.0).collect();
    l.sort_by(f64::total_cmp);
    let grid: Vec<f64> = (0..20).map(|i| l[(l.len() as f64 * (0.05 + 0.045 * i as f64)) as usize]).collect();
    let covered = grid
        .iter()
        .filter(|&&x| {
            let e = conditional_expectation_at(&sample, Conditioning::OnL, x, Bandwidth::Auto).unwrap();
            (e.value - mean).abs() <= e.ci_halfwidth
        })
        .count();
    assert!(covered >= 19, "{covered}/20");
}

#[test]
fn independent_conditional_interval_coverage_is_nominal() {
    // 500 disjoint windows over five samples; binomial sd of the rate is 0.01
    let pair = RiskPair::independent(cell(10.0, 0.4, 1e4), cell(10.0, 0.1, 1e4));
    let mean = pair.cell_s.expected_loss().unwrap();
    let (mut covered, mut total) = (0, 0);
    for seed in 500..505 {
        let sample = sample_pair(&pair, 1_000_000, seed);
        let mut l: Vec<f64> = sample.iter().map(|p| p.0).collect();
        l.sort_by(f64::total_cmp);
        for i in 0..100 {
            let x = l[(l.len() as f64 * (0.0405 + 0.0095 * i as f64)) as usize];
            let e = conditional_expectation_at(&sample, Conditioning::OnL, x, Bandwidth::Auto).unwrap();
            total += 1;
            covered += usize::from((e.value - mean).abs() <= e.ci_halfwidth);
        }
    }
    let rate = covered as f64 / total as f64;
    assert!((0.92..=0.98).contains(&rate), "{covered}/{total}");
}

/// Scale mixture `L = g(S) U` in the finite-mean zone: `dVaR` over
/// `E[S | L = VaR(L)]` close to one and not drifting away as alpha grows.
#[test]
fn scale_mixture_ratio_trend() {
    let g = GSpec::new(0.5, 2.0, 0.5, 1e-5).unwrap();
    let pair = RiskPair::scale_mixture(cell(10.0, 0.4, 1e4), cell(10.0, 0.1, 1e4), g);
    let cfg = EngineConfig {
        mc_samples: 10_000_000,
        ..EngineConfig::with_kind(EngineKind::MonteCarlo)
    };
    let ratio = |a: f64| {
        let r = analyze(&pair, a, &cfg).unwrap();
        assert_eq!(r.regime.kind, RegimeKind::ExpectedLoss);
        r.delta_var / r.approx
    };
    let (r99, r999) = (ratio(0.99), ratio(0.999));
    assert!((0.7..=1.3).contains(&r999), "{r999}");
    assert!((r999 - 1.0).abs() <= (r99 - 1.0).abs(), "{r99} -> {r999}");
}
