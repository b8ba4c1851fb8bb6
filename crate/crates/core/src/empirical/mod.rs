//! Distribution models, empirical distribution functions and their smoothed
//! and weighted variants.

mod edf;
mod model;
mod tails;

pub use edf::{
    background_grid, bandwidth_admissible, bandwidth_schedule_admissible, heat_scale, read_sample,
    weighted_empirical_process, BandwidthCheck, EmpiricalCdf, SmoothedCdf, BANDWIDTH_THRESHOLD,
};
pub use model::{DistributionModel, TailFamily};
pub use tails::{
    gamma_spot_check, hill_estimate, lipschitz_check, GammaCheck, LipschitzCheck, LipschitzStatus, CALIBRATION_DRAWS, HILL_FRACTION,
};
