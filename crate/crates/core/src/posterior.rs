use std::sync::Arc;

use crate::error::{theta_f64, Error, Result};
use crate::model::ObjectiveModel;
use crate::prior::Prior;
use crate::Real;

/// The generalized posterior `π_n(θ) ∝ exp(-n f_n(θ)) π(θ)`.
#[derive(Clone)]
pub struct GeneralizedPosterior<T: Real> {
    pub model: Arc<dyn ObjectiveModel<T>>,
    pub prior: Prior<T>,
    pub n: usize,
}

impl<T: Real> std::fmt::Debug for GeneralizedPosterior<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralizedPosterior")
            .field("model", &self.model.name())
            .field("prior", &self.prior)
            .field("n", &self.n)
            .finish()
    }
}

impl<T: Real> GeneralizedPosterior<T> {
    pub fn new(model: Arc<dyn ObjectiveModel<T>>, prior: Prior<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size n must be at least 1".into()));
        }
        if model.dim() != prior.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: prior.dim(),
            });
        }
        Ok(Self { model, prior, n })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn n_real(&self) -> T {
        T::from_count(self.n)
    }

    /// `-n f_n(θ) + log π(θ)`; `-inf` off the prior support or the model domain.
    pub fn unnormalized_log_posterior(&self, theta: &[T]) -> Result<T> {
        unnormalized_log_posterior(self, theta)
    }
}

pub fn unnormalized_log_posterior<T: Real>(gp: &GeneralizedPosterior<T>, theta: &[T]) -> Result<T> {
    if theta.len() != gp.dim() {
        return Err(Error::DimensionMismatch {
            expected: gp.dim(),
            got: theta.len(),
        });
    }
    let lp = gp.prior.log_density(theta);
    if lp.is_nan() {
        return Err(Error::Evaluation {
            theta: theta_f64(theta),
        });
    }
    if lp == T::neg_infinity() || !gp.model.domain().contains(theta) {
        return Ok(T::neg_infinity());
    }
    let f = gp.model.value(theta);
    if f.is_nan() {
        return Err(Error::Evaluation {
            theta: theta_f64(theta),
        });
    }
    Ok(-gp.n_real() * f + lp)
}
