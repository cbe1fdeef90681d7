//! Dependent loss pairs and conditional-expectation estimators.
//!
//! The dependent family is the scale mixture `L = g(S) U`, where `U` is drawn
//! from the prior cell and `g` is a clamped affine function bounded away
//! from zero. Component VaR, `E[S | L + S = VaR(L+S)]`, and its marginal
//! counterpart are estimated on Monte Carlo samples with rank windows:
//! near extreme quantiles a fixed-width window is almost always empty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{CompoundCell, DistError};
use crate::engine::{empirical_quantile, sample_pair, EngineError, QuantileCi};

const BOOTSTRAP_ROUNDS: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x0b00_75ee_d000_0001;
/// Smallest window accepted as reliable.
pub const MIN_WINDOW: usize = 30;
/// Batches used for the spread of marginal VaR differences.
const MARGINAL_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DependenceError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },
    #[error("conditioning window holds {n_effective} points (need at least {MIN_WINDOW})")]
    Unreliable { n_effective: usize },
}

fn domain(what: &'static str, detail: String) -> DependenceError {
    DependenceError::Domain { what, detail }
}

/// Clamped affine scale function `g(s) = clamp(c0 + c1 s, a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSpec {
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
}

impl GSpec {
    pub fn new(a: f64, b: f64, c0: f64, c1: f64) -> Result<Self, DistError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(DistError::InvalidParameter {
                name: "a",
                value: a,
                reason: "lower bound must be finite and > 0",
            });
        }
        if !(b.is_finite() && b >= a) {
            return Err(DistError::InvalidParameter {
                name: "b",
                value: b,
                reason: "upper bound must be finite and >= a",
            });
        }
        for (name, v) in [("c0", c0), ("c1", c1)] {
            if !v.is_finite() {
                return Err(DistError::InvalidParameter {
                    name,
                    value: v,
                    reason: "coefficient must be finite",
                });
            }
        }
        Ok(Self { a, b, c0, c1 })
    }

    /// `g ≡ c`.
    pub fn constant(c: f64) -> Result<Self, DistError> {
        Self::new(c, c, c, 0.0)
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.c0 + self.c1 * s).clamp(self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dependence {
    Independent,
    /// `L = g(S) U` with `U` distributed as the prior cell.
    ScaleMixture(GSpec),
}

/// Prior cell `L`, add-on cell `S` and their dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPair {
    pub cell_l: CompoundCell,
    pub cell_s: CompoundCell,
    pub dependence: Dependence,
}

impl RiskPair {
    pub fn independent(cell_l: CompoundCell, cell_s: CompoundCell) -> Self {
        Self {
            cell_l,
            cell_s,
            dependence: Dependence::Independent,
        }
    }

    pub fn scale_mixture(cell_l: CompoundCell, cell_s: CompoundCell, g: GSpec) -> Self {
        Self {
            cell_l,
            cell_s,
            dependence: Dependence::ScaleMixture(g),
        }
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.dependence, Dependence::Independent)
    }
}

/// Variable the expectation is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conditioning {
    OnL,
    OnSum,
}

/// Window selection around the conditioning point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `max(30, n / 1000)` nearest neighbours.
    Auto,
    /// The given number of nearest neighbours.
    Neighbors(usize),
    /// Every point within this distance.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentVarEstimate {
    pub value: f64,
    /// Realized half-width of the window in the conditioning variable.
    pub bandwidth: f64,
    pub n_effective: usize,
    /// 95% bootstrap half-width.
    pub ci_halfwidth: f64,
    pub reliable: bool,
}

/// Points of the window, sorted by `(conditioning value, s, l)`.
fn window(
    sample: &[(f64, f64)],
    conditioning: Conditioning,
    x: f64,
    bandwidth: Bandwidth,
) -> Result<(Vec<(f64, f64)>, f64), DependenceError> {
    if sample.is_empty() {
        return Err(domain("sample", "empty sample".into()));
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(domain("x", format!("conditioning point must be finite and > 0, got {x}")));
    }
    let cond = |p: &(f64, f64)| match conditioning {
        Conditioning::OnL => p.0,
        Conditioning::OnSum => p.0 + p.1,
    };
    let key_cmp = |a: &(f64, f64), b: &(f64, f64)| {
        let (ca, cb) = (cond(a), cond(b));
        (ca - x)
            .abs()
            .total_cmp(&(cb - x).abs())
            .then(ca.total_cmp(&cb))
            .then(a.1.total_cmp(&b.1))
            .then(a.0.total_cmp(&b.0))
    };
    let mut chosen: Vec<(f64, f64)> = match bandwidth {
        Bandwidth::Fixed(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(domain("bandwidth", format!("must be finite and > 0, got {h}")));
            }
            sample.iter().copied().filter(|p| (cond(p) - x).abs() <= h).collect()
        }
        Bandwidth::Auto | Bandwidth::Neighbors(_) => {
            let m = match bandwidth {
                Bandwidth::Neighbors(m) => m,
                _ => MIN_WINDOW.max(sample.len() / 1000),
            }
            .clamp(1, sample.len());
            let mut idx: Vec<usize> = (0..sample.len()).collect();
            if m < idx.len() {
                idx.select_nth_unstable_by(m - 1, |&i, &j| key_cmp(&sample[i], &sample[j]));
                idx.truncate(m);
            }
            idx.into_iter().map(|i| sample[i]).collect()
        }
    };
    if chosen.is_empty() {
        return Err(DependenceError::Unreliable { n_effective: 0 });
    }
    chosen.sort_by(|a, b| cond(a).total_cmp(&cond(b)).then(a.1.total_cmp(&b.1)).then(a.0.total_cmp(&b.0)));
    let half = chosen.iter().map(|p| (cond(p) - x).abs()).fold(0.0, f64::max);
    Ok((chosen, half))
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut n = 0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
        n += 1;
    }
    ((sum + comp) / n as f64, n)
}

fn bootstrap_halfwidth(values: &[f64]) -> f64 {
    let m = values.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED ^ m as u64);
    let mut means: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .map(|_| (0..m).map(|_| values[rng.random_range(0..m)]).sum::<f64>() / m as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = means[(0.025 * BOOTSTRAP_ROUNDS as f64) as usize];
    let hi = means[((0.975 * BOOTSTRAP_ROUNDS as f64) as usize).min(BOOTSTRAP_ROUNDS - 1)];
    0.5 * (hi - lo)
}

fn estimate(values: &[f64], half: f64) -> ComponentVarEstimate {
    let (value, n) = mean(values.iter().copied());
    ComponentVarEstimate {
        value,
        bandwidth: half,
        n_effective: n,
        ci_halfwidth: bootstrap_halfwidth(values),
        reliable: n >= MIN_WINDOW,
    }
}

/// Nadaraya-Watson estimate of `E[S | C = x]` with a uniform kernel on the
/// rank window around `x`, where `C` is `L` or `L + S`. The result depends
/// only on the multiset of sample points.
pub fn conditional_expectation_at(
    sample: &[(f64, f64)],
    conditioning: Conditioning,
    x: f64,
    bandwidth: Bandwidth,
) -> Result<ComponentVarEstimate, DependenceError> {
    let (w, half) = window(sample, conditioning, x, bandwidth)?;
    let s: Vec<f64> = w.iter().map(|p| p.1).collect();
    Ok(estimate(&s, half))
}

/// Euler decomposition of the simulated `VaR_alpha(L + S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentVarReport {
    pub var_total: QuantileCi,
    /// `E[S | L + S = VaR(L+S)]`
    pub add_on: ComponentVarEstimate,
    /// `E[L | L + S = VaR(L+S)]`
    pub prior: ComponentVarEstimate,
}

fn check_alpha(alpha: f64) -> Result<(), DependenceError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain("alpha", format!("confidence level must lie in (0, 1), got {alpha}")))
    }
}

/// Component VaR of both parts of the pair on `n` simulated scenarios.
pub fn component_var(
    pair: &RiskPair,
    alpha: f64,
    n: usize,
    seed: u64,
    bandwidth: Bandwidth,
) -> Result<ComponentVarReport, DependenceError> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(domain("n", "at least one scenario is required".into()));
    }
    let sample = sample_pair(pair, n, seed);
    component_var_on(&sample, alpha, bandwidth)
}

/// [`component_var`] on a materialized sample.
pub fn component_var_on(
    sample: &[(f64, f64)],
    alpha: f64,
    bandwidth: Bandwidth,
) -> Result<ComponentVarReport, DependenceError> {
    check_alpha(alpha)?;
    let mut totals: Vec<f64> = sample.iter().map(|p| p.0 + p.1).collect();
    let var_total = empirical_quantile(&mut totals, alpha)?;
    if var_total.value <= 0.0 {
        return Err(domain("alpha", "the total's quantile is 0 (zero-loss atom)".into()));
    }
    let (w, half) = window(sample, Conditioning::OnSum, var_total.value, bandwidth)?;
    let s: Vec<f64> = w.iter().map(|p| p.1).collect();
    let l: Vec<f64> = w.iter().map(|p| p.0).collect();
    Ok(ComponentVarReport {
        var_total,
        add_on: estimate(&s, half),
        prior: estimate(&l, half),
    })
}

/// One row of [`marginal_vs_component`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub epsilon: f64,
    /// `(VaR(L + eps S) - VaR(L)) / eps`
    pub marginal: f64,
    /// 95% half-width of `marginal` from batch means.
    pub marginal_ci_halfwidth: f64,
    /// `E[S | L + eps S = VaR(L + eps S)]`
    pub component: ComponentVarEstimate,
    /// Set when either confidence interval is wider than its estimate.
    pub flagged: bool,
}

fn quantile_of(values: impl Iterator<Item = f64>, alpha: f64) -> Result<f64, DependenceError> {
    let mut v: Vec<f64> = values.collect();
    Ok(empirical_quantile(&mut v, alpha)?.value)
}

/// Marginal VaR differences `(VaR(L + eps S) - VaR(L)) / eps` next to the
/// component estimates, on one common sample so the differences are not
/// swamped by independent quantile noise.
pub fn marginal_vs_component(
    pair: &RiskPair,
    alpha: f64,
    epsilon_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<MarginalRow>, DependenceError> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(domain("n", "at least one scenario is required".into()));
    }
    for &e in epsilon_grid {
        if !(e > 0.0 && e <= 1.0) {
            return Err(domain("epsilon", format!("values must lie in (0, 1], got {e}")));
        }
    }
    let sample = sample_pair(pair, n, seed);
    marginal_vs_component_on(&sample, alpha, epsilon_grid)
}

/// [`marginal_vs_component`] on a materialized sample.
pub fn marginal_vs_component_on(
    sample: &[(f64, f64)],
    alpha: f64,
    epsilon_grid: &[f64],
) -> Result<Vec<MarginalRow>, DependenceError> {
    check_alpha(alpha)?;
    let var_l = quantile_of(sample.iter().map(|p| p.0), alpha)?;
    let batch = sample.len() / MARGINAL_BATCHES;
    let batch_var_l: Vec<f64> = if batch >= MIN_WINDOW {
        sample
            .chunks_exact(batch)
            .take(MARGINAL_BATCHES)
            .map(|c| quantile_of(c.iter().map(|p| p.0), alpha))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let mut rows = Vec::with_capacity(epsilon_grid.len());
    for &eps in epsilon_grid {
        let var_eps = quantile_of(sample.iter().map(|p| p.0 + eps * p.1), alpha)?;
        let marginal = (var_eps - var_l) / eps;
        let marginal_ci_halfwidth = if batch_var_l.is_empty() {
            f64::INFINITY
        } else {
            let diffs: Vec<f64> = sample
                .chunks_exact(batch)
                .take(MARGINAL_BATCHES)
                .zip(&batch_var_l)
                .map(|(c, vl)| Ok((quantile_of(c.iter().map(|p| p.0 + eps * p.1), alpha)? - vl) / eps))
                .collect::<Result<_, DependenceError>>()?;
            let (m, k) = mean(diffs.iter().copied());
            let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (k - 1) as f64;
            1.96 * (var / k as f64).sqrt()
        };
        let scaled: Vec<(f64, f64)> = sample.iter().map(|p| (p.0, eps * p.1)).collect();
        let mut component = if var_eps > 0.0 {
            conditional_expectation_at(&scaled, Conditioning::OnSum, var_eps, Bandwidth::Auto)?
        } else {
            ComponentVarEstimate {
                value: 0.0,
                bandwidth: 0.0,
                n_effective: 0,
                ci_halfwidth: f64::INFINITY,
                reliable: false,
            }
        };
        component.value /= eps;
        component.ci_halfwidth /= eps;
        let flagged = !component.reliable
            || marginal_ci_halfwidth > marginal.abs()
            || component.ci_halfwidth > component.value.abs();
        rows.push(MarginalRow {
            epsilon: eps,
            marginal,
            marginal_ci_halfwidth,
            component,
            flagged,
        });
    }
    Ok(rows)
}
