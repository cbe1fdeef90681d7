//! VaR sensitivity of heavy-tailed compound Poisson loss models.

pub mod asymptotics;
pub mod dependence;
pub mod dist;
pub mod engine;
pub mod experiments;
pub mod sensitivity;

pub use asymptotics::{
    approx_delta_var, classify_regime, k_constant, regime_of, single_loss_var, AggregateCase, ApproxInputs,
    AsymptoticsError, KConstant, Regime, RegimeKind, DEFAULT_EQ_TOL,
};
pub use dependence::{
    component_var, conditional_expectation_at, marginal_vs_component, Bandwidth, ComponentVarEstimate,
    ComponentVarReport, Conditioning, Dependence, DependenceError, GSpec, MarginalRow, RiskPair,
};
pub use dist::{
    expected_loss, gpd_cdf, gpd_pdf, gpd_quantile, gpd_sf, CompoundCell, DistError, GpdSeverity, PoissonFrequency,
};
pub use engine::{var, Diagnostics, EngineConfig, EngineError, EngineKind, VarEstimate};
pub use sensitivity::{analyze, analyze_cells, sweep_alpha, Comparison, SensitivityError, SensitivityReport};
