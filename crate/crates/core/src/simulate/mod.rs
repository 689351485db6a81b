//! Data generators for every experiment. Each generator reads from a caller
//! supplied stream, and [`GeneratorSpec::generate`] derives that stream from a
//! seed, so outputs are bit-reproducible from `(spec, seed)`.

pub mod boltzmann;
pub mod field;
pub mod glm;
pub mod location;
pub mod survival;

use serde::{Deserialize, Serialize};

pub use boltzmann::{gen_boltzmann_exact, BoltzmannTable};
pub use field::{gen_gmrf, gen_ising_gibbs, GmrfSampler};
pub use glm::{draw_covariates, gen_expfam, gen_glm, CovariateSpec, GlmKind};
pub use location::{gen_location, Noise};
pub use survival::{gen_cox, Baseline, Censoring};

use crate::error::Result;
use crate::models::{ExpFam1P, FieldSample, GlmDataset, GmrfFeatures, SurvivalDataset, TorusLattice};
use crate::rng::{stream_rng, StreamRng};
use crate::Real;

fn default_sigma() -> f64 {
    1.0
}

fn default_burn() -> usize {
    field::DEFAULT_BURN_SWEEPS
}

/// A fully specified generator; the seed is supplied separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    ExpFam {
        family: ExpFam1P<f64>,
        theta: f64,
        n: usize,
    },
    Glm {
        glm: GlmKind,
        theta: Vec<f64>,
        n: usize,
        covariates: CovariateSpec,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Ising {
        m: usize,
        #[serde(rename = "L")]
        side: usize,
        theta: [f64; 2],
        sweeps: usize,
        #[serde(default = "default_burn")]
        burn_sweeps: usize,
    },
    Gmrf {
        m: usize,
        #[serde(rename = "L")]
        side: usize,
        features: GmrfFeatures,
        theta: Vec<f64>,
        gamma: f64,
    },
    Boltzmann {
        d: usize,
        theta: Vec<f64>,
        n: usize,
    },
    Cox {
        n: usize,
        theta: Vec<f64>,
        baseline: Baseline,
        censoring: Censoring,
        covariates: CovariateSpec,
    },
    Location {
        n: usize,
        theta0: f64,
        noise: Noise,
    },
}

#[derive(Clone, Debug)]
pub enum SimulatedData<T: Real> {
    /// i.i.d. responses or location samples.
    Scalars(Vec<T>),
    Glm(GlmDataset<T>),
    Field(FieldSample<T>),
    Boltzmann(Vec<Vec<T>>),
    Survival(SurvivalDataset<T>),
}

impl GeneratorSpec {
    pub fn generate<T: Real>(&self, seed: u64) -> Result<SimulatedData<T>> {
        self.generate_with(&mut stream_rng(seed, 0))
    }

    pub fn generate_with<T: Real>(&self, rng: &mut StreamRng) -> Result<SimulatedData<T>> {
        Ok(match self {
            Self::ExpFam { family, theta, n } => SimulatedData::Scalars(gen_expfam(*family, *theta, *n, rng)?),
            Self::Glm {
                glm,
                theta,
                n,
                covariates,
                sigma,
            } => SimulatedData::Glm(gen_glm(*glm, theta, *n, covariates, *sigma, rng)?),
            Self::Ising {
                m,
                side,
                theta,
                sweeps,
                burn_sweeps,
            } => SimulatedData::Field(gen_ising_gibbs(
                &TorusLattice::new(*m, *side)?,
                *theta,
                *sweeps,
                *burn_sweeps,
                rng,
            )?),
            Self::Gmrf {
                m,
                side,
                features,
                theta,
                gamma,
            } => {
                let theta: Vec<T> = theta.iter().map(|&v| T::lit(v)).collect();
                SimulatedData::Field(gen_gmrf(
                    &TorusLattice::new(*m, *side)?,
                    *features,
                    &theta,
                    T::lit(*gamma),
                    rng,
                )?)
            }
            Self::Boltzmann { d, theta, n } => {
                let theta: Vec<T> = theta.iter().map(|&v| T::lit(v)).collect();
                SimulatedData::Boltzmann(gen_boltzmann_exact(*d, &theta, *n, rng)?.1)
            }
            Self::Cox {
                n,
                theta,
                baseline,
                censoring,
                covariates,
            } => SimulatedData::Survival(gen_cox(*n, theta, *baseline, *censoring, covariates, rng)?),
            Self::Location { n, theta0, noise } => SimulatedData::Scalars(gen_location(*n, *theta0, *noise, rng)?),
        })
    }
}
