//! Reference scenarios: a prior cell `L = (10, 2, 1e4)` at `alpha = 0.999`
//! with families of added cells.

use serde::{Deserialize, Serialize};

use crate::dependence::RiskPair;
use crate::dist::{CompoundCell, DistError};
use crate::engine::EngineConfig;
use crate::sensitivity::{analyze, sweep_alpha, SensitivityError, SensitivityReport};

pub const PRIOR_LAMBDA: f64 = 10.0;
pub const PRIOR_XI: f64 = 2.0;
pub const PRIOR_SIGMA: f64 = 1e4;
pub const ALPHA: f64 = 0.999;

pub const FIGURE1_ALPHAS: [f64; 7] = [0.99, 0.995, 0.999, 0.9995, 0.9999, 0.99995, 0.99999];
pub const FIGURE1_XIS: [f64; 2] = [0.8, 1.8];

/// Intensity of the added cell in the light-tail table. The two readings
/// of that table differ only here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table1Variant {
    /// `lambda_S = 10`, the same as the prior cell.
    AsStated,
    /// `lambda_S = 100`.
    AsPublished,
}

impl Table1Variant {
    pub fn lambda_s(self) -> f64 {
        match self {
            Self::AsStated => 10.0,
            Self::AsPublished => 100.0,
        }
    }
}

/// Added cell of one table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub lambda_s: f64,
    pub xi_s: f64,
    pub sigma_s: f64,
}

impl Scenario {
    pub fn pair(&self) -> Result<RiskPair, DistError> {
        Ok(RiskPair::independent(
            prior_cell()?,
            CompoundCell::from_params(self.lambda_s, self.xi_s, self.sigma_s)?,
        ))
    }
}

pub fn prior_cell() -> Result<CompoundCell, DistError> {
    CompoundCell::from_params(PRIOR_LAMBDA, PRIOR_XI, PRIOR_SIGMA)
}

/// Finite-mean added losses, `xi_S` from 0.1 to 0.5.
pub fn table1(variant: Table1Variant) -> Vec<Scenario> {
    [0.1, 0.2, 0.3, 0.4, 0.5]
        .iter()
        .map(|&xi_s| Scenario {
            lambda_s: variant.lambda_s(),
            xi_s,
            sigma_s: 1e4,
        })
        .collect()
}

/// Added losses with a heavier tail than the mean allows, lighter than the prior.
pub fn table2() -> Vec<Scenario> {
    [0.8, 1.0, 1.2, 1.5, 1.8]
        .iter()
        .map(|&xi_s| Scenario {
            lambda_s: 10.0,
            xi_s,
            sigma_s: 1e4,
        })
        .collect()
}

/// Equal tail indices, varying scale.
pub fn table3() -> Vec<Scenario> {
    [100.0, 1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|&sigma_s| Scenario {
            lambda_s: 10.0,
            xi_s: 2.0,
            sigma_s,
        })
        .collect()
}

/// Added losses heavier than the prior.
pub fn table4() -> Vec<Scenario> {
    [2.5, 3.0, 3.5, 4.0, 4.5]
        .iter()
        .map(|&xi_s| Scenario {
            lambda_s: 10.0,
            xi_s,
            sigma_s: 100.0,
        })
        .collect()
}

pub fn figure1() -> Vec<Scenario> {
    FIGURE1_XIS
        .iter()
        .map(|&xi_s| Scenario {
            lambda_s: 10.0,
            xi_s,
            sigma_s: 1e4,
        })
        .collect()
}

/// Row of a table: the scenario and its report at [`ALPHA`].
pub type Row = (Scenario, Result<SensitivityReport, SensitivityError>);

pub fn run_table(rows: &[Scenario], cfg: &EngineConfig) -> Result<Vec<Row>, DistError> {
    rows.iter()
        .map(|s| Ok((*s, analyze(&s.pair()?, ALPHA, cfg))))
        .collect()
}

/// Reports of one scenario over a level grid.
pub type Sweep = (Scenario, Vec<Result<SensitivityReport, SensitivityError>>);

/// Each scenario of [`figure1`] swept over [`FIGURE1_ALPHAS`].
pub fn run_figure1(cfg: &EngineConfig) -> Result<Vec<Sweep>, SensitivityError> {
    figure1()
        .into_iter()
        .map(|s| {
            let pair = s.pair().map_err(|e| SensitivityError::Asymptotics(e.into()))?;
            Ok((s, sweep_alpha(&pair, &FIGURE1_ALPHAS, cfg)?))
        })
        .collect()
}
