//! Sensitivity of VaR to an added loss factor: exact prior and posterior
//! quantiles next to the regime's closed-form approximation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{
    approx_delta_var, k_constant, regime_of, ApproxInputs, AsymptoticsError, KConstant, Regime, RegimeKind,
    DEFAULT_EQ_TOL,
};
use crate::dependence::{conditional_expectation_at, Bandwidth, Conditioning, Dependence, RiskPair};
use crate::dist::CompoundCell;
use crate::engine::{self, empirical_quantile, sample_pair, Diagnostics, EngineConfig, EngineError, EngineKind};

/// What the approximation is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    /// `Error = Approx / (VaR(L+S) - VaR(L)) - 1`
    DeltaVar,
    /// `Error = Approx / VaR(L+S) - 1`, with `Approx = VaR(S) + term`.
    TotalVar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub alpha: f64,
    pub var_l: f64,
    pub var_ls: f64,
    /// Present when the regime uses it.
    pub var_s: Option<f64>,
    pub delta_var: f64,
    pub approx: f64,
    /// NaN when the comparison target is 0.
    pub error: f64,
    pub regime: Regime,
    pub k: KConstant,
    pub comparison: Comparison,
    pub engine: EngineKind,
    /// Worst absolute CDF error over the quantiles (0 for sampling engines).
    pub achieved_tol: f64,
    /// Set when `alpha` does not exceed the zero-loss atom of `L`.
    pub zero_atom: bool,
    pub diagnostics_l: Diagnostics,
    pub diagnostics_ls: Diagnostics,
    pub diagnostics_s: Option<Diagnostics>,
}

impl SensitivityReport {
    /// Value the approximation is compared with.
    pub fn target(&self) -> f64 {
        match self.comparison {
            Comparison::DeltaVar => self.delta_var,
            Comparison::TotalVar => self.var_ls,
        }
    }
}

fn relative_error(approx: f64, target: f64) -> f64 {
    if target > 0.0 && approx.is_finite() {
        approx / target - 1.0
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error("{stage} failed: {source}")]
    Engine {
        stage: &'static str,
        source: EngineError,
        /// Report with the fields computed before the failure; the rest are NaN.
        partial: Box<SensitivityReport>,
    },
    #[error("alpha grid must be strictly increasing; {0} is out of order")]
    Grid(f64),
}

struct Quantiles {
    var_l: (f64, Diagnostics),
    var_ls: (f64, Diagnostics),
    var_s: Option<(f64, Diagnostics)>,
    /// `E[S | L = VaR(L)]`, only for dependent pairs in the first regime.
    cond_s: Option<f64>,
    /// `E[g(S)^beta]`, the tail weight a scale mixture puts on `L`.
    tail_weight: f64,
    /// `E[g(S)]`.
    mean_scale: f64,
}

fn blank_report(alpha: f64, regime: Regime, k: KConstant, engine: EngineKind) -> SensitivityReport {
    SensitivityReport {
        alpha,
        var_l: f64::NAN,
        var_ls: f64::NAN,
        var_s: None,
        delta_var: f64::NAN,
        approx: f64::NAN,
        error: f64::NAN,
        regime,
        k,
        comparison: if regime.kind.is_mirror() {
            Comparison::TotalVar
        } else {
            Comparison::DeltaVar
        },
        engine,
        achieved_tol: f64::NAN,
        zero_atom: false,
        diagnostics_l: Diagnostics::default(),
        diagnostics_ls: Diagnostics::default(),
        diagnostics_s: None,
    }
}

fn independent_quantiles(
    alpha: f64,
    pair: &RiskPair,
    regime: &Regime,
    cfg: &EngineConfig,
    partial: &mut SensitivityReport,
) -> Result<Quantiles, SensitivityError> {
    let fail = |stage: &'static str, e: EngineError, p: &SensitivityReport| SensitivityError::Engine {
        stage,
        source: e,
        partial: Box::new(p.clone()),
    };
    let l = engine::var(alpha, &[pair.cell_l], cfg).map_err(|e| fail("VaR(L)", e, partial))?;
    partial.var_l = l.value;
    let ls = engine::var(alpha, &[pair.cell_l, pair.cell_s], cfg).map_err(|e| fail("VaR(L+S)", e, partial))?;
    partial.var_ls = ls.value;
    let var_s = if regime.kind.needs_var_s() {
        let s = engine::var(alpha, &[pair.cell_s], cfg).map_err(|e| fail("VaR(S)", e, partial))?;
        Some((s.value, s.diagnostics))
    } else {
        None
    };
    Ok(Quantiles {
        var_l: (l.value, l.diagnostics),
        var_ls: (ls.value, ls.diagnostics),
        var_s,
        cond_s: None,
        tail_weight: 1.0,
        mean_scale: 1.0,
    })
}

fn sampled_quantiles(alpha: f64, pair: &RiskPair, regime: &Regime, cfg: &EngineConfig) -> Result<Quantiles, SensitivityError> {
    let sample = sample_pair(pair, cfg.mc_samples, cfg.mc_seed);
    let n = sample.len();
    let quantile = |f: &dyn Fn(&(f64, f64)) -> f64| -> Result<(f64, Diagnostics), EngineError> {
        let mut v: Vec<f64> = sample.iter().map(f).collect();
        let q = empirical_quantile(&mut v, alpha)?;
        Ok((
            q.value,
            Diagnostics {
                samples: n,
                evaluations: n,
                ci_low: Some(q.low),
                ci_high: Some(q.high),
                zero_atom: q.value == 0.0,
                ..Diagnostics::default()
            },
        ))
    };
    let blank = blank_report(alpha, *regime, k_constant(&pair.cell_l, &pair.cell_s), EngineKind::MonteCarlo);
    let wrap = |stage: &'static str| {
        let blank = blank.clone();
        move |e: EngineError| SensitivityError::Engine {
            stage,
            source: e,
            partial: Box::new(blank),
        }
    };
    let var_l = quantile(&|p| p.0).map_err(wrap("VaR(L)"))?;
    let var_ls = quantile(&|p| p.0 + p.1).map_err(wrap("VaR(L+S)"))?;
    let var_s = if regime.kind.needs_var_s() {
        Some(quantile(&|p| p.1).map_err(wrap("VaR(S)"))?)
    } else {
        None
    };
    let (tail_weight, mean_scale) = match &pair.dependence {
        Dependence::ScaleMixture(g) => {
            let beta = regime.beta;
            let (w, m) = sample
                .iter()
                .fold((0.0, 0.0), |(w, m), p| {
                    let gs = g.eval(p.1);
                    (w + gs.powf(beta), m + gs)
                });
            (w / n as f64, m / n as f64)
        }
        Dependence::Independent => (1.0, 1.0),
    };
    let cond_s = if regime.kind == RegimeKind::ExpectedLoss && !pair.is_independent() && var_l.0 > 0.0 {
        let est = conditional_expectation_at(&sample, Conditioning::OnL, var_l.0, Bandwidth::Auto).map_err(|e| {
            SensitivityError::Engine {
                stage: "E[S | L = VaR(L)]",
                source: EngineError::Domain {
                    what: "conditional expectation",
                    detail: e.to_string(),
                },
                partial: Box::new(blank.clone()),
            }
        })?;
        Some(est.value)
    } else {
        None
    };
    Ok(Quantiles {
        var_l,
        var_ls,
        var_s,
        cond_s,
        tail_weight,
        mean_scale,
    })
}

/// Exact prior and posterior VaR, the regime's approximation and its error.
///
/// Independent pairs use the configured engine. Scale-mixture pairs are
/// always simulated; there the first regime's approximation is the
/// estimated `E[S | L = VaR(L)]`, and `k` absorbs the tail weight
/// `E[g(S)^beta]` of the mixture.
pub fn analyze(pair: &RiskPair, alpha: f64, cfg: &EngineConfig) -> Result<SensitivityReport, SensitivityError> {
    let regime = regime_of(&pair.cell_l, &pair.cell_s, DEFAULT_EQ_TOL)?;
    let k_base = k_constant(&pair.cell_l, &pair.cell_s);
    let engine_kind = if pair.is_independent() {
        cfg.kind
    } else {
        EngineKind::MonteCarlo
    };
    let mut report = blank_report(alpha, regime, k_base, engine_kind);
    let q = if pair.is_independent() {
        independent_quantiles(alpha, pair, &regime, cfg, &mut report)?
    } else {
        sampled_quantiles(alpha, pair, &regime, cfg)?
    };
    // P(g(S) U > x) ~ E[g(S)^beta] P(U > x), so k scales by E[g^beta]^(-gamma/beta).
    let k = KConstant {
        value: k_base.value * q.tail_weight.powf(-regime.gamma / regime.beta),
    };

    report.k = k;
    report.var_l = q.var_l.0;
    report.var_ls = q.var_ls.0;
    report.var_s = q.var_s.as_ref().map(|v| v.0);
    report.delta_var = q.var_ls.0 - q.var_l.0;
    report.diagnostics_l = q.var_l.1.clone();
    report.diagnostics_ls = q.var_ls.1.clone();
    report.diagnostics_s = q.var_s.as_ref().map(|v| v.1.clone());
    report.zero_atom = q.var_l.1.zero_atom;
    report.achieved_tol = [Some(&q.var_l.1), Some(&q.var_ls.1), q.var_s.as_ref().map(|v| &v.1)]
        .into_iter()
        .flatten()
        .map(|d| d.achieved_tol)
        .fold(0.0, f64::max);

    let needs_positive = match regime.kind {
        RegimeKind::ExpectedLoss | RegimeKind::MirrorExpectedLoss => false,
        RegimeKind::PowerDiff | RegimeKind::EqualTails => true,
        RegimeKind::MirrorPowerDiff => true,
    };
    let base_var = match regime.kind {
        RegimeKind::PowerDiff | RegimeKind::EqualTails => Some(report.var_l),
        RegimeKind::MirrorPowerDiff => report.var_s,
        _ => None,
    };
    if report.zero_atom || (needs_positive && base_var.is_some_and(|v| v <= 0.0)) {
        report.zero_atom = true;
        return Ok(report);
    }

    let expected_loss = match regime.kind {
        RegimeKind::ExpectedLoss => match q.cond_s {
            Some(c) => Some(c),
            None => pair.cell_s.expected_loss().ok(),
        },
        RegimeKind::MirrorExpectedLoss => pair.cell_l.expected_loss().ok().map(|e| e * q.mean_scale),
        _ => None,
    };
    let term = approx_delta_var(
        &regime,
        ApproxInputs {
            var: base_var,
            k: Some(k),
            expected_loss,
        },
    )?;
    report.approx = match report.comparison {
        Comparison::DeltaVar => term,
        Comparison::TotalVar => report.var_s.unwrap_or(f64::NAN) + term,
    };
    report.error = relative_error(report.approx, report.target());
    Ok(report)
}

/// Independent pair of cells analyzed with `cfg`.
pub fn analyze_cells(
    cell_l: &CompoundCell,
    cell_s: &CompoundCell,
    alpha: f64,
    cfg: &EngineConfig,
) -> Result<SensitivityReport, SensitivityError> {
    analyze(&RiskPair::independent(*cell_l, *cell_s), alpha, cfg)
}

/// One report per level, in grid order. Failing points are returned as
/// errors without stopping the sweep.
pub fn sweep_alpha(
    pair: &RiskPair,
    alpha_grid: &[f64],
    cfg: &EngineConfig,
) -> Result<Vec<Result<SensitivityReport, SensitivityError>>, SensitivityError> {
    for w in alpha_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(SensitivityError::Grid(w[1]));
        }
    }
    Ok(alpha_grid.par_iter().map(|&a| analyze(pair, a, cfg)).collect())
}
