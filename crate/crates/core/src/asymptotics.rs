//! Asymptotic VaR sensitivity: regime classification, the five closed-form
//! approximations of `VaR(L+S) - VaR(L)`, aggregation of two cells and the
//! tail-constant `k` linking the two survival functions.
//!
//! With `beta` the tail index of `L` and `gamma` that of `S`, the regimes
//! are ordered along `gamma - beta`:
//!
//! | regime            | condition               | approximation                          |
//! |-------------------|-------------------------|----------------------------------------|
//! | `ExpectedLoss`    | `beta + 1 < gamma`      | `E[S]`                                 |
//! | `PowerDiff`       | `beta < gamma <= beta+1`| `(k/beta) VaR(L)^(beta+1-gamma)`       |
//! | `EqualTails`      | `beta = gamma`          | `((1+k)^(1/beta) - 1) VaR(L)`          |
//! | `MirrorPowerDiff` | `gamma < beta <= gamma+1`| `VaR(S)^(gamma+1-beta) / (k gamma)` over `VaR(S)` |
//! | `MirrorExpectedLoss` | `gamma + 1 < beta`   | `E[L]` over `VaR(S)`                   |
//!
//! In the two mirror regimes `S` has the fatter tail and the approximation
//! is to `VaR(L+S) - VaR(S)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{CompoundCell, DistError};
use crate::engine::{self, brent_root, sf_compound, EngineConfig, EngineError, EngineKind};

/// Default relative tolerance for treating tail indices as equal.
pub const DEFAULT_EQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },
    #[error("regime {regime} needs {what}")]
    MissingInput { regime: RegimeKind, what: &'static str },
    #[error("k = 0 makes the {0} approximation undefined")]
    ZeroK(RegimeKind),
}

fn domain(what: &'static str, detail: String) -> AsymptoticsError {
    AsymptoticsError::Domain { what, detail }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    /// `beta + 1 < gamma`
    ExpectedLoss,
    /// `beta < gamma <= beta + 1`
    PowerDiff,
    /// `beta = gamma`
    EqualTails,
    /// `gamma < beta <= gamma + 1`
    MirrorPowerDiff,
    /// `gamma + 1 < beta`
    MirrorExpectedLoss,
}

impl RegimeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeKind::ExpectedLoss => "EL",
            RegimeKind::PowerDiff => "PowerDiff",
            RegimeKind::EqualTails => "EqualTails",
            RegimeKind::MirrorPowerDiff => "MirrorPowerDiff",
            RegimeKind::MirrorExpectedLoss => "MirrorEL",
        }
    }

    /// Position along `gamma - beta`, used to test adjacency.
    pub fn order(&self) -> i32 {
        match self {
            RegimeKind::MirrorExpectedLoss => 0,
            RegimeKind::MirrorPowerDiff => 1,
            RegimeKind::EqualTails => 2,
            RegimeKind::PowerDiff => 3,
            RegimeKind::ExpectedLoss => 4,
        }
    }

    /// Mirror regimes approximate `VaR(L+S) - VaR(S)` instead of `Delta VaR`.
    pub fn is_mirror(&self) -> bool {
        matches!(self, RegimeKind::MirrorPowerDiff | RegimeKind::MirrorExpectedLoss)
    }

    /// Whether the approximation uses `VaR(S)`.
    pub fn needs_var_s(&self) -> bool {
        matches!(
            self,
            RegimeKind::EqualTails | RegimeKind::MirrorPowerDiff | RegimeKind::MirrorExpectedLoss
        )
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime with the tail indices it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Tail index of `L`.
    pub beta: f64,
    /// Tail index of `S`.
    pub gamma: f64,
}

/// Which cell dominates the aggregate quantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregateCase {
    /// `beta < gamma`: `VaR(L+S) ~ VaR(L)`.
    PriorDominates,
    /// `beta = gamma`: quantile of the equal-weight mixture at `1 - (1-alpha)/2`.
    Mixture,
    /// `beta > gamma`: `VaR(L+S) ~ VaR(S)`.
    AddOnDominates,
}

impl Regime {
    pub fn aggregate_case(&self) -> AggregateCase {
        match self.kind {
            RegimeKind::ExpectedLoss | RegimeKind::PowerDiff => AggregateCase::PriorDominates,
            RegimeKind::EqualTails => AggregateCase::Mixture,
            _ => AggregateCase::AddOnDominates,
        }
    }
}

/// Tail constant `k = lim P(S > x) / P(L > x)^(gamma/beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KConstant {
    pub value: f64,
}

/// For GPD severities `P(L > x) ~ lambda_L (sigma_L/xi_L)^(1/xi_L) x^(-1/xi_L)`,
/// which gives
/// `k = (lambda_S/lambda_L) (sigma_S/xi_S)^(1/xi_S) (sigma_L/xi_L)^(-1/xi_L)`.
pub fn k_constant(cell_l: &CompoundCell, cell_s: &CompoundCell) -> KConstant {
    let (dl, ds) = (&cell_l.severity, &cell_s.severity);
    let ln_k = (cell_s.lambda() / cell_l.lambda()).ln() + (ds.sigma() / ds.xi()).ln() / ds.xi()
        - (dl.sigma() / dl.xi()).ln() / dl.xi();
    KConstant { value: ln_k.exp() }
}

fn check_index(name: &'static str, v: f64) -> Result<(), AsymptoticsError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(name, format!("tail index must be finite and > 0, got {v}")))
    }
}

/// Classifies `(beta, gamma)`. Two indices count as equal when they differ
/// by at most `eq_tol * max(1, beta, gamma)`; the boundaries `gamma = beta+1`
/// and `beta = gamma+1` belong to the power-difference cases.
pub fn classify_regime(beta: f64, gamma: f64, eq_tol: f64) -> Result<Regime, AsymptoticsError> {
    check_index("beta", beta)?;
    check_index("gamma", gamma)?;
    if !(eq_tol >= 0.0 && eq_tol.is_finite()) {
        return Err(domain("eq_tol", format!("must be finite and >= 0, got {eq_tol}")));
    }
    let tol = eq_tol * beta.max(gamma).max(1.0);
    let kind = if (beta - gamma).abs() <= tol {
        RegimeKind::EqualTails
    } else if gamma > beta {
        if gamma - (beta + 1.0) > tol {
            RegimeKind::ExpectedLoss
        } else {
            RegimeKind::PowerDiff
        }
    } else if beta - (gamma + 1.0) > tol {
        RegimeKind::MirrorExpectedLoss
    } else {
        RegimeKind::MirrorPowerDiff
    };
    Ok(Regime { kind, beta, gamma })
}

/// Regime of a pair of cells.
pub fn regime_of(cell_l: &CompoundCell, cell_s: &CompoundCell, eq_tol: f64) -> Result<Regime, AsymptoticsError> {
    classify_regime(cell_l.tail_index(), cell_s.tail_index(), eq_tol)
}

/// Inputs of [`approx_delta_var`]. `var` is `VaR(L)` in the regimes
/// (ii)-(iii) and `VaR(S)` in (iv); `expected_loss` is `E[S]` in (i) and
/// `E[L]` in (v).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ApproxInputs {
    pub var: Option<f64>,
    pub k: Option<KConstant>,
    pub expected_loss: Option<f64>,
}

/// Closed-form approximation for the given regime: `VaR(L+S) - VaR(L)` in
/// (i)-(iii), `VaR(L+S) - VaR(S)` in (iv)-(v). Case (iii) uses the
/// difference form `((1+k)^(1/beta) - 1) VaR(L)`.
pub fn approx_delta_var(regime: &Regime, inputs: ApproxInputs) -> Result<f64, AsymptoticsError> {
    let kind = regime.kind;
    let (beta, gamma) = (regime.beta, regime.gamma);
    let need_var = || -> Result<f64, AsymptoticsError> {
        let v = inputs.var.ok_or(AsymptoticsError::MissingInput { regime: kind, what: "a VaR" })?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(domain("var", format!("VaR must be finite and > 0, got {v}")))
        }
    };
    let need_k = || -> Result<f64, AsymptoticsError> {
        let k = inputs.k.ok_or(AsymptoticsError::MissingInput { regime: kind, what: "k" })?.value;
        if k.is_finite() && k >= 0.0 {
            Ok(k)
        } else {
            Err(domain("k", format!("must be finite and >= 0, got {k}")))
        }
    };
    let need_el = || -> Result<f64, AsymptoticsError> {
        match inputs.expected_loss {
            Some(e) if e.is_finite() && e >= 0.0 => Ok(e),
            _ => Err(AsymptoticsError::MissingInput {
                regime: kind,
                what: "a finite expected loss",
            }),
        }
    };
    match kind {
        RegimeKind::ExpectedLoss | RegimeKind::MirrorExpectedLoss => need_el(),
        RegimeKind::PowerDiff => {
            let (k, v) = (need_k()?, need_var()?);
            Ok(k / beta * ((beta + 1.0 - gamma) * v.ln()).exp())
        }
        RegimeKind::EqualTails => {
            let (k, v) = (need_k()?, need_var()?);
            Ok(((1.0 / beta) * k.ln_1p()).exp_m1() * v)
        }
        RegimeKind::MirrorPowerDiff => {
            let (k, v) = (need_k()?, need_var()?);
            if k == 0.0 {
                return Err(AsymptoticsError::ZeroK(kind));
            }
            Ok(((gamma + 1.0 - beta) * v.ln()).exp() / (k * gamma))
        }
    }
}

/// Multiplicative form of the equal-tails regime: `(1+k)^(1/beta) VaR(L)`.
pub fn equal_tails_total(k: KConstant, beta: f64, var_l: f64) -> f64 {
    ((1.0 / beta) * k.value.ln_1p()).exp() * var_l
}

/// Small-`k` linearization of the equal-tails regime: `(k/beta) VaR(L)`.
pub fn equal_tails_linearized(k: KConstant, beta: f64, var_l: f64) -> f64 {
    k.value / beta * var_l
}

/// Substitute for `VaR(S)` in the mirror regimes when only `VaR(L)` is
/// known: `k^(1/gamma) VaR(L)^(beta/gamma)`, valid when `x^beta P(L > x)`
/// or `x^gamma P(S > x)` converges.
pub fn mirror_var_s_substitute(k: KConstant, beta: f64, gamma: f64, var_l: f64) -> f64 {
    (k.value.ln() / gamma + beta / gamma * var_l.ln()).exp()
}

/// Single-loss approximation `(sigma/xi)((lambda/(1-alpha))^xi - 1)`, the
/// root of `lambda * P(X > x) = 1 - alpha`.
pub fn single_loss_var(alpha: f64, cell: &CompoundCell) -> Result<f64, AsymptoticsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("alpha", format!("confidence level must lie in (0, 1), got {alpha}")));
    }
    let tail = 1.0 - alpha;
    if tail >= cell.lambda() {
        return Err(domain(
            "alpha",
            format!("1 - alpha = {tail} must be below lambda = {}", cell.lambda()),
        ));
    }
    let d = &cell.severity;
    Ok(d.sigma() / d.xi() * (d.xi() * (cell.lambda() / tail).ln()).exp_m1())
}

/// Engine configuration forced onto the inversion engine, which is the only
/// one that evaluates survival functions of sums.
fn inversion_cfg(cfg: &EngineConfig) -> EngineConfig {
    EngineConfig {
        kind: EngineKind::CfInversion,
        ..cfg.clone()
    }
}

/// Solves `sum_i P(X_i > x) = 1 - alpha` over separately evaluated totals.
/// With two cells this is the quantile at `1 - (1-alpha)/2` of the
/// equal-weight mixture of their distributions.
pub fn mixture_quantile(alpha: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<f64, AsymptoticsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("alpha", format!("confidence level must lie in (0, 1), got {alpha}")));
    }
    let cfg = inversion_cfg(cfg);
    let target = 1.0 - alpha;
    let f = |x: f64| -> Result<f64, EngineError> {
        let mut s = 0.0;
        for c in cells {
            s += sf_compound(x, std::slice::from_ref(c), &cfg)?;
        }
        Ok(s.max(f64::MIN_POSITIVE).ln() - target.ln())
    };
    let g = engine::single_loss_guess(alpha, cells);
    let (mut lo, mut hi) = (0.2 * g, 5.0 * g);
    let mut tries = 0;
    while f(lo)? < 0.0 && tries < 60 {
        hi = lo;
        lo *= 0.2;
        tries += 1;
    }
    while f(hi)? > 0.0 && tries < 60 {
        lo = hi;
        hi *= 5.0;
        tries += 1;
    }
    let r = brent_root(f, lo, hi, 1e-15 * g, 200)?
        .ok_or_else(|| EngineError::NoConvergence("mixture quantile not bracketed".into()))?;
    Ok(r.root)
}

/// Aggregate quantile `VaR(L+S)` by tail dominance: the fatter cell's VaR,
/// or the mixture quantile when the tails are equally heavy.
pub fn subexponential_aggregate_var(
    alpha: f64,
    cell_l: &CompoundCell,
    cell_s: &CompoundCell,
    cfg: &EngineConfig,
    eq_tol: f64,
) -> Result<f64, AsymptoticsError> {
    let regime = regime_of(cell_l, cell_s, eq_tol)?;
    let cfg = inversion_cfg(cfg);
    Ok(match regime.aggregate_case() {
        AggregateCase::PriorDominates => engine::var(alpha, &[*cell_l], &cfg)?.value,
        AggregateCase::AddOnDominates => engine::var(alpha, &[*cell_s], &cfg)?.value,
        AggregateCase::Mixture => mixture_quantile(alpha, &[*cell_l, *cell_s], &cfg)?,
    })
}

fn shifted_level(alpha: f64, lambda_scale: f64) -> Result<f64, AsymptoticsError> {
    if !(lambda_scale.is_finite() && lambda_scale > 0.0) {
        return Err(domain("lambda_scale", format!("must be finite and > 0, got {lambda_scale}")));
    }
    let level = 1.0 - (1.0 - alpha) / lambda_scale;
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(domain(
            "alpha",
            format!("adjusted level 1 - (1 - {alpha})/{lambda_scale} = {level} is outside (0, 1)"),
        ))
    }
}

/// `VaR_{1 - (1-alpha)/lambda}(Y)^ratio`: the quantile of a variable whose
/// tail is `lambda` times that of `Y^ratio`.
pub fn quantile_shift_transform(
    alpha: f64,
    lambda_scale: f64,
    cell_y: &CompoundCell,
    ratio: f64,
    cfg: &EngineConfig,
) -> Result<f64, AsymptoticsError> {
    let level = shifted_level(alpha, lambda_scale)?;
    let v = engine::var(level, &[*cell_y], &inversion_cfg(cfg))?.value;
    Ok(v.powf(ratio))
}

/// Companion form `lambda^(1/beta) VaR_alpha(Y)^ratio` with
/// `beta = gamma_Y / ratio`.
pub fn quantile_shift_companion(
    alpha: f64,
    lambda_scale: f64,
    cell_y: &CompoundCell,
    ratio: f64,
    cfg: &EngineConfig,
) -> Result<f64, AsymptoticsError> {
    shifted_level(alpha, lambda_scale)?;
    let beta = cell_y.tail_index() / ratio;
    let v = engine::var(alpha, &[*cell_y], &inversion_cfg(cfg))?.value;
    Ok((lambda_scale.ln() / beta + ratio * v.ln()).exp())
}

/// Capital sufficient for an add-on whose loss is at least `l` with
/// probability `p`: `(1/beta) (l / VaR_{1-p}(L))^beta VaR_alpha(L)`.
pub fn conservative_bound(
    l: f64,
    p: f64,
    beta: f64,
    var_l_at_1mp: f64,
    var_l_at_alpha: f64,
) -> Result<f64, AsymptoticsError> {
    check_index("beta", beta)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", format!("probability must lie in (0, 1), got {p}")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(domain("l", format!("loss level must be finite and > 0, got {l}")));
    }
    if !(var_l_at_1mp >= l && var_l_at_1mp.is_finite()) {
        return Err(domain(
            "l",
            format!("requires VaR_(1-p)(L) = {var_l_at_1mp} >= l = {l}"),
        ));
    }
    Ok((l / var_l_at_1mp).powf(beta) * var_l_at_alpha / beta)
}

/// Case (ii) evaluated at the same point as [`conservative_bound`]:
/// `(1/beta) (l / VaR_{1-p}(L))^gamma VaR_alpha(L)`.
pub fn power_diff_at_level(l: f64, beta: f64, gamma: f64, var_l_at_1mp: f64, var_l_at_alpha: f64) -> f64 {
    (l / var_l_at_1mp).powf(gamma) * var_l_at_alpha / beta
}

/// `P(L+S > x) / (P(L > x) + P(S > x))` for independent cells; tends to 1.
pub fn convolution_tail_ratio(x: f64, cell_l: &CompoundCell, cell_s: &CompoundCell, cfg: &EngineConfig) -> Result<f64, AsymptoticsError> {
    let cfg = inversion_cfg(cfg);
    let both = sf_compound(x, &[*cell_l, *cell_s], &cfg)?;
    let l = sf_compound(x, &[*cell_l], &cfg)?;
    let s = sf_compound(x, &[*cell_s], &cfg)?;
    Ok(both / (l + s))
}

/// `(F_{L+S}(x) - F_L(x)) / f_L(x)` for independent cells. Its limit is
/// `-E[S]` in the EL regime and `-k x^(beta+1-gamma) / beta` in the power-difference regime.
pub fn tail_difference_ratio(
    x: f64,
    cell_l: &CompoundCell,
    cell_s: &CompoundCell,
    cfg: &EngineConfig,
) -> Result<f64, AsymptoticsError> {
    let cfg = inversion_cfg(cfg);
    let both = sf_compound(x, &[*cell_l, *cell_s], &cfg)?;
    let l = sf_compound(x, &[*cell_l], &cfg)?;
    let density = engine::density_compound(x, &[*cell_l], &cfg)?;
    if density <= 0.0 {
        return Err(domain("x", format!("density of L vanishes at {x}")));
    }
    Ok((l - both) / density)
}
