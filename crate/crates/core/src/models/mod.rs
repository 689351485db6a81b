//! The model zoo.

pub mod cox;
pub mod expfam;
pub mod glm;
pub mod linear;
pub mod median;
pub mod pseudolik;
pub mod quadratic;

pub use cox::{cox_partial_model, CoxModel, SurvivalDataset};
pub use expfam::{ExpFam1P, IidExpFamModel, LogPartition};
pub use glm::{build_glm, GlmDataset, GlmModel};
pub use linear::LinearPredictorObjective;
pub use median::{median_location_model, sample_median, MedianLocationModel, SymmetricCdf};
pub use pseudolik::{
    boltzmann_pseudolik, boltzmann_pseudolik_weighted, conditional_probability, gmrf_pseudolik, gmrf_pseudolik_with,
    ising_pseudolik, BinarySite, FieldSample, GmrfFeatures, ThetaPacking, TorusLattice,
};
pub use quadratic::QuadraticModel;
