//! Posterior draws by adaptive random-walk Metropolis and exact grid
//! quadrature for `D ≤ 2`.

pub mod ess;
pub mod grid;
pub mod rwm;

pub use ess::{effective_sample_size, EssReport};
pub use grid::{grid_density, GridDensity};
pub use rwm::{rwm_sample, rwm_sample_with, DrawMatrix, RwmSettings};
