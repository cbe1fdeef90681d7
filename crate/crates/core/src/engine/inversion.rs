//! Distribution function of a sum of independent compound Poisson cells by
//! inversion of the characteristic function.
//!
//! For a nonnegative total with characteristic function `psi`,
//!
//! ```text
//! sf(x) = (2/pi) ∫_0^∞ Re(1 - psi(u/x)) sin(u)/u du
//! ```
//!
//! The integrand is nonnegative apart from `sin u`, so integrating over the
//! half periods `[k pi, (k+1) pi]` yields an alternating series. Working with
//! the survival function keeps full relative precision deep in the tail.

use std::cell::RefCell;
use std::f64::consts::{FRAC_2_PI, PI};

use super::cf::{log_cf, re_one_minus_exp};
use super::quad::{integrate_adaptive, sum_segments, SeriesControl};
use super::root::brent_root;
use super::{single_loss_guess, zero_atom, Diagnostics, EngineConfig, EngineError, EngineKind, VarEstimate};
use crate::dist::CompoundCell;

const DIRECT_SEGMENTS: usize = 16;
const EULER_TERMS: usize = 24;
const MAX_PIECES: usize = 64;

/// One distribution-function evaluation with its error bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEvaluation {
    pub cdf: f64,
    pub sf: f64,
    /// Bound on the absolute error of `sf` (and `cdf`).
    pub error: f64,
    pub segments: usize,
    pub evaluations: usize,
}

fn check_x(x: f64) -> Result<(), EngineError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(EngineError::Domain {
            what: "x",
            detail: format!("loss amount must be finite and >= 0, got {x}"),
        })
    }
}

/// Evaluates the distribution function of the total of `cells` at `x`.
pub fn evaluate_cdf(x: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<CdfEvaluation, EngineError> {
    check_x(x)?;
    super::check_cells(cells)?;
    let atom = zero_atom(cells);
    if x == 0.0 {
        return Ok(CdfEvaluation {
            cdf: atom,
            sf: 1.0 - atom,
            error: 0.0,
            segments: 0,
            evaluations: 0,
        });
    }
    let failure: RefCell<Option<EngineError>> = RefCell::new(None);
    let integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        match log_cf(u / x, cells, cfg) {
            Ok(w) => re_one_minus_exp(w) * u.sin() / u,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let abs_floor = 0.01 * cfg.abs_cdf_tol / FRAC_2_PI;
    let series = sum_segments(
        |k| {
            let a = k as f64 * PI;
            integrate_adaptive(integrand, a, a + PI, cfg.quad_rel_tol, 0.0, MAX_PIECES)
        },
        |v: f64| (cfg.sf_rel_tol * v.abs()).max(abs_floor),
        SeriesControl {
            direct: DIRECT_SEGMENTS,
            euler_terms: EULER_TERMS,
            max_segments: cfg.max_segments,
        },
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let error = FRAC_2_PI * series.error;
    let sf = (FRAC_2_PI * series.value).clamp(0.0, 1.0 - atom);
    if error > cfg.abs_cdf_tol {
        return Err(EngineError::Accuracy {
            what: "characteristic-function inversion",
            estimate: 1.0 - sf,
            achieved: error,
            target: cfg.abs_cdf_tol,
        });
    }
    Ok(CdfEvaluation {
        cdf: 1.0 - sf,
        sf,
        error,
        segments: series.segments,
        evaluations: series.evaluations,
    })
}

/// `P(total <= x)` for the sum of independent `cells`.
pub fn cdf_compound(x: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<f64, EngineError> {
    evaluate_cdf(x, cells, cfg).map(|e| e.cdf)
}

/// `P(total > x)`, accurate relative to its own size far in the tail.
pub fn sf_compound(x: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<f64, EngineError> {
    evaluate_cdf(x, cells, cfg).map(|e| e.sf)
}

/// Density of the continuous part at `x > 0`, by central differencing of the
/// survival function with step `1e-4 x`.
pub fn density_compound(x: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<f64, EngineError> {
    check_x(x)?;
    if x == 0.0 {
        return Err(EngineError::Domain {
            what: "x",
            detail: "density is evaluated at x > 0 only".into(),
        });
    }
    let h = 1e-4 * x;
    let lo = sf_compound(x - h, cells, cfg)?;
    let hi = sf_compound(x + h, cells, cfg)?;
    Ok(((lo - hi) / (2.0 * h)).max(0.0))
}

pub(super) fn var_inversion(alpha: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<VarEstimate, EngineError> {
    let target = 1.0 - alpha;
    let ln_target = target.ln();
    let mut diag = Diagnostics::default();
    let eval = |x: f64, diag: &mut Diagnostics| -> Result<f64, EngineError> {
        let e = evaluate_cdf(x, cells, cfg)?;
        diag.segments = diag.segments.max(e.segments);
        diag.evaluations += e.evaluations;
        diag.achieved_tol = diag.achieved_tol.max(e.error);
        Ok(e.sf.max(f64::MIN_POSITIVE).ln() - ln_target)
    };

    let g = single_loss_guess(alpha, cells);
    let (mut lo, mut hi) = (0.2 * g, 5.0 * g);
    let mut f_lo = eval(lo, &mut diag)?;
    let mut widen = 0;
    while f_lo < 0.0 {
        hi = lo;
        lo *= 0.2;
        f_lo = eval(lo, &mut diag)?;
        widen += 1;
        if widen > 60 {
            return Err(EngineError::NoConvergence(format!("no lower bracket for alpha = {alpha}")));
        }
    }
    let mut f_hi = eval(hi, &mut diag)?;
    while f_hi > 0.0 {
        lo = hi;
        hi *= 5.0;
        f_hi = eval(hi, &mut diag)?;
        widen += 1;
        if widen > 60 || !hi.is_finite() {
            return Err(EngineError::NoConvergence(format!("no upper bracket for alpha = {alpha}")));
        }
    }
    let root = brent_root(|x| eval(x, &mut diag), lo, hi, 1e-15 * g, 200)?
        .ok_or_else(|| EngineError::NoConvergence("bracket lost its sign change".into()))?;
    diag.root_iterations = root.iterations;

    let check = evaluate_cdf(root.root, cells, cfg)?;
    let miss = (check.sf - target).abs();
    let allowed = (10.0 * cfg.abs_cdf_tol).max(1e-10);
    if !root.converged || miss > allowed {
        return Err(EngineError::Accuracy {
            what: "quantile by inversion",
            estimate: root.root,
            achieved: miss,
            target: allowed,
        });
    }
    Ok(VarEstimate {
        value: root.root,
        ci_halfwidth: 0.0,
        engine: EngineKind::CfInversion,
        diagnostics: diag,
    })
}
