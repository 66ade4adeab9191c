//! Tick statistics: counting rates, waiting times, precision and Allan variance.

mod allan;
mod fcs;
pub(crate) mod quadrature;
mod waiting;

pub use allan::{allan_variance_formula, allan_variance_trajectory, AllanEstimate, ALLAN_BATCHES};
pub use fcs::{
    cross_validate_rates, fcs_rates, relative_difference, AsymptoticRates, RateMethod, CHI_STEPS, CONSISTENCY_TOL,
};
pub use waiting::{
    binned_waiting_time, check_precision_identity, waiting_time, PrecisionReport, WaitingTimeDistribution,
    DARK_MASS_TOL, GRID_TAIL, NU_MU_TOL, R_RATIO_TOL, SIGMA_RATIO_TOL,
};
