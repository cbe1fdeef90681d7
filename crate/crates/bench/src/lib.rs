//! Fixtures shared by the criterion benches in `benches/`.

use tailsens_core::{CompoundCell, RiskPair};

/// The heavy prior cell `(10, 2, 1e4)`.
pub fn prior() -> CompoundCell {
    CompoundCell::from_params(10.0, 2.0, 1e4).expect("valid cell")
}

/// Small cell on which every engine is cheap.
pub fn small() -> CompoundCell {
    CompoundCell::from_params(2.0, 0.5, 1.0).expect("valid cell")
}

pub fn pair_with(xi_s: f64, sigma_s: f64) -> RiskPair {
    RiskPair::independent(prior(), CompoundCell::from_params(10.0, xi_s, sigma_s).expect("valid cell"))
}
