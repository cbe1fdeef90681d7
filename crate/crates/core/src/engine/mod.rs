//! Numerical engines for compound Poisson distribution functions and VaR.
//!
//! Three independent routes are provided:
//!
//! * characteristic-function inversion ([`cdf_compound`], the precision
//!   engine, usable at quantiles of order 10^19),
//! * Panjer recursion on a moment-matched lattice ([`panjer_cdf`]),
//! * Monte Carlo with counter-based substreams ([`sample_compound`]).
//!
//! Sums of independent cells are supported by every engine.

mod cf;
mod expint;
mod inversion;
mod montecarlo;
mod panjer;
pub(crate) mod quad;
mod root;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{CompoundCell, DistError};

pub use cf::{cf_compound, cf_severity, cf_severity_quadrature};
pub use inversion::{cdf_compound, density_compound, evaluate_cdf, sf_compound, CdfEvaluation};
pub use montecarlo::{empirical_quantile, sample_compound, sample_pair, sample_total, QuantileCi};
pub use panjer::{panjer_cdf, panjer_recursion, PanjerLattice};
pub use root::{brent_root, RootResult};

/// Which engine computes distribution functions and quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    CfInversion,
    Panjer,
    MonteCarlo,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::CfInversion => "cf",
            EngineKind::Panjer => "panjer",
            EngineKind::MonteCarlo => "mc",
        }
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cf" | "cf_inversion" => Ok(EngineKind::CfInversion),
            "panjer" => Ok(EngineKind::Panjer),
            "mc" | "monte_carlo" => Ok(EngineKind::MonteCarlo),
            other => Err(format!("unknown engine '{other}' (expected cf, panjer or mc)")),
        }
    }
}

/// Engine settings. `None` for the Panjer lattice fields means "derive from
/// the single-loss approximation of the requested quantile".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub kind: EngineKind,
    /// Absolute accuracy required of every distribution-function value.
    pub abs_cdf_tol: f64,
    /// Relative accuracy the inversion engine aims for on tail probabilities.
    /// Failing it is not an error as long as `abs_cdf_tol` holds.
    pub sf_rel_tol: f64,
    /// Per-segment quadrature tolerance, relative to the segment's L1 mass.
    pub quad_rel_tol: f64,
    /// Cap on the number of half-period segments in one inversion.
    pub max_segments: usize,
    pub panjer_step: Option<f64>,
    pub panjer_cutoff: Option<f64>,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            kind: EngineKind::CfInversion,
            abs_cdf_tol: 1e-12,
            sf_rel_tol: 1e-12,
            quad_rel_tol: 1e-13,
            max_segments: 1_000_000,
            panjer_step: None,
            panjer_cutoff: None,
            mc_samples: 1_000_000,
            mc_seed: 0x5eed_1234_abcd_0001,
        }
    }
}

impl EngineConfig {
    pub fn with_kind(kind: EngineKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(EngineError::InvalidConfig(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("abs_cdf_tol", self.abs_cdf_tol)?;
        positive("sf_rel_tol", self.sf_rel_tol)?;
        positive("quad_rel_tol", self.quad_rel_tol)?;
        if let Some(h) = self.panjer_step {
            positive("panjer_step", h)?;
        }
        if let Some(c) = self.panjer_cutoff {
            positive("panjer_cutoff", c)?;
        }
        if self.max_segments < 8 {
            return Err(EngineError::InvalidConfig("max_segments must be >= 8".into()));
        }
        if self.mc_samples == 0 {
            return Err(EngineError::InvalidConfig("mc_samples must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },
    #[error("accuracy target missed in {what}: achieved error {achieved:e} > target {target:e} (estimate {estimate:e})")]
    Accuracy {
        what: &'static str,
        estimate: f64,
        achieved: f64,
        target: f64,
    },
    #[error("Panjer lattice truncated at {cutoff:e} with F(cutoff) = {cdf_at_cutoff} below the requested level")]
    Truncation { cutoff: f64, cdf_at_cutoff: f64 },
    #[error("root finder failed: {0}")]
    NoConvergence(String),
}

/// Engine-specific bookkeeping attached to a quantile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest number of half-period segments used by one inversion.
    pub segments: usize,
    /// Integrand (or lattice / sample) evaluations.
    pub evaluations: usize,
    pub root_iterations: usize,
    /// Worst absolute CDF error bound over the evaluations.
    pub achieved_tol: f64,
    pub samples: usize,
    pub lattice_points: usize,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Set when the level does not exceed the zero-loss atom, so VaR is 0.
    pub zero_atom: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarEstimate {
    pub value: f64,
    /// 95% half-width; 0 for deterministic engines.
    pub ci_halfwidth: f64,
    pub engine: EngineKind,
    pub diagnostics: Diagnostics,
}

/// Total intensity and zero-loss atom `P(total = 0) = exp(-sum lambda)`.
pub(crate) fn zero_atom(cells: &[CompoundCell]) -> f64 {
    (-cells.iter().map(|c| c.lambda()).sum::<f64>()).exp()
}

fn check_alpha(alpha: f64) -> Result<(), EngineError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(EngineError::Domain {
            what: "alpha",
            detail: format!("confidence level must lie in (0, 1), got {alpha}"),
        })
    }
}

fn check_cells(cells: &[CompoundCell]) -> Result<(), EngineError> {
    if cells.is_empty() {
        Err(EngineError::Domain {
            what: "cells",
            detail: "at least one compound cell is required".into(),
        })
    } else {
        Ok(())
    }
}

/// Seed for bracketing: root of `sum_i lambda_i * sf_i(x) = 1 - alpha`, the
/// single-loss approximation of a sum of independent cells.
pub(crate) fn single_loss_guess(alpha: f64, cells: &[CompoundCell]) -> f64 {
    let target = 1.0 - alpha;
    let tail = |x: f64| -> f64 {
        cells
            .iter()
            .map(|c| c.lambda() * c.severity.sf_unchecked(x))
            .sum::<f64>()
    };
    let total: f64 = cells.iter().map(|c| c.lambda()).sum();
    let sigma_min = cells
        .iter()
        .map(|c| c.severity.sigma())
        .fold(f64::INFINITY, f64::min);
    if total <= target {
        return sigma_min;
    }
    // tail is decreasing from `total` to 0: bisect in log space.
    let (mut lo, mut hi) = (sigma_min * 1e-12, sigma_min);
    while tail(hi) > target && hi < 1e300 {
        lo = hi;
        hi *= 16.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// `VaR_alpha` of the sum of independent `cells`, i.e. `inf{x : F(x) >= alpha}`.
pub fn var(alpha: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<VarEstimate, EngineError> {
    check_alpha(alpha)?;
    check_cells(cells)?;
    cfg.validate()?;
    if alpha <= zero_atom(cells) {
        return Ok(VarEstimate {
            value: 0.0,
            ci_halfwidth: 0.0,
            engine: cfg.kind,
            diagnostics: Diagnostics {
                zero_atom: true,
                ..Diagnostics::default()
            },
        });
    }
    match cfg.kind {
        EngineKind::CfInversion => inversion::var_inversion(alpha, cells, cfg),
        EngineKind::Panjer => panjer::var_panjer(alpha, cells, cfg),
        EngineKind::MonteCarlo => montecarlo::var_monte_carlo(alpha, cells, cfg),
    }
}
