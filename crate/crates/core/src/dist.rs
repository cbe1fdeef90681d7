//! Generalized Pareto severities, Poisson frequencies and compound cells.
//!
//! Only the heavy-tailed branch of the GPD (shape `xi > 0`) is supported. The
//! survival function has tail index `1/xi`:
//!
//! ```text
//! P(X > x) = (1 + xi * x / sigma)^(-1/xi),   x >= 0
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the distribution layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("argument {name} = {value} outside domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("mean is infinite for shape xi = {xi} (requires xi < 1)")]
    InfiniteMean { xi: f64 },
}

fn check_positive(name: &'static str, value: f64) -> Result<(), DistError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DistError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn check_loss(x: f64) -> Result<(), DistError> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(DistError::Domain {
            name: "x",
            value: x,
            reason: "loss amount must be >= 0",
        })
    }
}

/// Heavy-tailed generalized Pareto severity `GPD(xi, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdSeverity {
    xi: f64,
    sigma: f64,
}

impl GpdSeverity {
    /// Rejects `xi <= 0` (exponential and bounded-support branches are not
    /// regularly varying) and `sigma <= 0`.
    pub fn new(xi: f64, sigma: f64) -> Result<Self, DistError> {
        check_positive("xi", xi)?;
        check_positive("sigma", sigma)?;
        Ok(Self { xi, sigma })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Tail index `1/xi` of the survival function.
    pub fn tail_index(&self) -> f64 {
        1.0 / self.xi
    }

    /// `sigma / (1 - xi)`, finite only for `xi < 1`.
    pub fn mean(&self) -> Result<f64, DistError> {
        if self.xi < 1.0 {
            Ok(self.sigma / (1.0 - self.xi))
        } else {
            Err(DistError::InfiniteMean { xi: self.xi })
        }
    }

    /// Survival function evaluated without domain checks, in log space.
    #[inline]
    pub(crate) fn sf_unchecked(&self, x: f64) -> f64 {
        (-(self.xi * x / self.sigma).ln_1p() / self.xi).exp()
    }

    #[inline]
    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        let log_base = (self.xi * x / self.sigma).ln_1p();
        (-(1.0 / self.xi + 1.0) * log_base).exp() / self.sigma
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        // (sigma/xi) * ((1-p)^(-xi) - 1), written with expm1 for small p.
        self.sigma / self.xi * (-self.xi * (-p).ln_1p()).exp_m1()
    }

    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        check_loss(x)?;
        Ok(-(-(self.xi * x / self.sigma).ln_1p() / self.xi).exp_m1())
    }

    /// `P(X > x)`, computed directly rather than as `1 - cdf`.
    pub fn sf(&self, x: f64) -> Result<f64, DistError> {
        check_loss(x)?;
        Ok(self.sf_unchecked(x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64, DistError> {
        check_loss(x)?;
        Ok(self.pdf_unchecked(x))
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..1.0).contains(&p) {
            return Err(DistError::Domain {
                name: "p",
                value: p,
                reason: "probability must lie in [0, 1)",
            });
        }
        Ok(self.quantile_unchecked(p))
    }

    /// `E[min(X, a)] = integral of sf over [0, a]`.
    pub fn limited_expected_value(&self, a: f64) -> Result<f64, DistError> {
        check_loss(a)?;
        let log_base = (self.xi * a / self.sigma).ln_1p();
        if (self.xi - 1.0).abs() < 1e-12 {
            return Ok(self.sigma * log_base);
        }
        // sigma/(1-xi) * (1 - (1 + xi a/sigma)^(1 - 1/xi))
        let expo = (1.0 - 1.0 / self.xi) * log_base;
        Ok(-self.sigma / (1.0 - self.xi) * expo.exp_m1())
    }
}

pub fn gpd_cdf(x: f64, d: &GpdSeverity) -> Result<f64, DistError> {
    d.cdf(x)
}

pub fn gpd_sf(x: f64, d: &GpdSeverity) -> Result<f64, DistError> {
    d.sf(x)
}

pub fn gpd_pdf(x: f64, d: &GpdSeverity) -> Result<f64, DistError> {
    d.pdf(x)
}

pub fn gpd_quantile(p: f64, d: &GpdSeverity) -> Result<f64, DistError> {
    d.quantile(p)
}

/// Poisson event-count distribution with intensity `lambda > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonFrequency {
    lambda: f64,
}

impl PoissonFrequency {
    pub fn new(lambda: f64) -> Result<Self, DistError> {
        check_positive("lambda", lambda)?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `P(N = 0)`.
    pub fn zero_mass(&self) -> f64 {
        (-self.lambda).exp()
    }
}

/// One loss cell of the loss distribution approach: a Poisson number of
/// i.i.d. GPD severities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundCell {
    pub frequency: PoissonFrequency,
    pub severity: GpdSeverity,
}

impl CompoundCell {
    pub fn new(frequency: PoissonFrequency, severity: GpdSeverity) -> Self {
        Self {
            frequency,
            severity,
        }
    }

    /// Convenience constructor from raw `(lambda, xi, sigma)`.
    pub fn from_params(lambda: f64, xi: f64, sigma: f64) -> Result<Self, DistError> {
        Ok(Self::new(
            PoissonFrequency::new(lambda)?,
            GpdSeverity::new(xi, sigma)?,
        ))
    }

    pub fn lambda(&self) -> f64 {
        self.frequency.lambda()
    }

    /// The compound sum inherits the severity's tail index.
    pub fn tail_index(&self) -> f64 {
        self.severity.tail_index()
    }

    pub fn expected_loss(&self) -> Result<f64, DistError> {
        expected_loss(self)
    }

    /// Same cell with the severity scale multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, DistError> {
        Ok(Self::new(
            self.frequency,
            GpdSeverity::new(self.severity.xi(), self.severity.sigma() * factor)?,
        ))
    }
}

/// `lambda * sigma / (1 - xi)`; errors for infinite-mean severities.
pub fn expected_loss(cell: &CompoundCell) -> Result<f64, DistError> {
    Ok(cell.lambda() * cell.severity.mean()?)
}
