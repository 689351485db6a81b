//! Generalized posteriors `π_n(θ) ∝ exp(−n f_n(θ)) π(θ)`: Laplace
//! approximation, sampling, Bernstein–von Mises diagnostics, and a zoo of
//! generalized likelihoods.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod io;
pub mod laplace;
pub mod linalg;
pub mod model;
pub mod models;
pub mod numerics;
pub mod posterior;
pub mod prior;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Real;

pub use domain::{DomainBox, ParamVector};
pub use laplace::{laplace_log_normalizer, LaplaceResult};
pub use linalg::{Cholesky, Matrix};
pub use model::{validate_model, FnModel, ObjectiveModel, Tempered, ValidationReport};
pub use numerics::{bvm_audit, find_minimizer, AuditReport, FitResult};
pub use posterior::GeneralizedPosterior;
pub use prior::{Prior, PriorKind};
pub use sampler::{grid_density, rwm_sample, DrawMatrix, GridDensity};

pub type Mat = linalg::Matrix<f64>;
pub type Param = domain::ParamVector<f64>;
pub type Domain = domain::DomainBox<f64>;
pub type Fit = numerics::FitResult<f64>;
pub type Laplace = laplace::LaplaceResult<f64>;
pub type Posterior = posterior::GeneralizedPosterior<f64>;
pub type PriorF64 = prior::Prior<f64>;
pub type Audit = numerics::AuditReport<f64>;
pub type Draws = sampler::DrawMatrix<f64>;
pub type Grid = sampler::GridDensity<f64>;
