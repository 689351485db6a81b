//! Finite-sample checks of the asymptotic claims: distance to the normal
//! limit, concentration, sandwich calibration, credible sets and coverage.

pub mod coverage;
pub mod credible;
pub mod normality;
pub mod sandwich;

pub use coverage::{coverage_experiment, wilson_interval, CoverageMode, CoverageReport, CoverageSettings};
pub use credible::{credible_set, CredibleSet};
pub use normality::{concentration_mass, moment_gap_to_normal, tv_to_normal_limit, MassSource};
pub use sandwich::{affine_calibrate, sandwich_covariance, SandwichEstimate};
