//! Covariates and GLM / i.i.d. exponential-family responses.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::models::{ExpFam1P, GlmDataset};
use crate::scalar::sigmoid;
use crate::Real;

/// Above this linear predictor Poisson means overflow in practice.
pub const POISSON_ETA_LIMIT: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CovariateSpec {
    IidGaussian { scale: f64 },
    Rademacher,
    BoundedUniform { a: f64, b: f64 },
}

impl CovariateSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::IidGaussian { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::InvalidArgument("covariate scale must be positive".into()))
            }
            Self::BoundedUniform { a, b } if !(a < b && a.is_finite() && b.is_finite()) => {
                Err(Error::InvalidArgument("bounded-uniform covariates need a < b".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::IidGaussian { .. })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::IidGaussian { scale } => scale * rng.sample::<f64, _>(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::BoundedUniform { a, b } => rng.random_range(a..b),
        }
    }
}

/// `n × d` matrix of i.i.d. covariates, filled row by row.
pub fn draw_covariates<T: Real, R: Rng + ?Sized>(
    spec: &CovariateSpec,
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<Matrix<T>> {
    spec.validate()?;
    let data = (0..n * d).map(|_| T::lit(spec.draw(rng))).collect();
    Matrix::from_row_major(n, d, data)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmKind {
    Linear,
    Logistic,
    Poisson,
}

/// One response from `family` at linear predictor `eta`; Gaussian responses
/// have mean `eta`.
pub fn draw_response<R: Rng + ?Sized>(family: ExpFam1P<f64>, eta: f64, rng: &mut R) -> Result<f64> {
    Ok(match family {
        ExpFam1P::Gaussian { sigma2 } => eta + sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal),
        ExpFam1P::BernoulliLogit => f64::from(u8::from(rng.random::<f64>() < sigmoid(eta))),
        ExpFam1P::PlusMinusBinary => {
            if rng.random::<f64>() < sigmoid(2.0 * eta) {
                1.0
            } else {
                -1.0
            }
        }
        ExpFam1P::Poisson => {
            if eta > POISSON_ETA_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "Poisson mean exp({eta:.3}) overflows; use bounded covariates or a smaller theta"
                )));
            }
            Poisson::new(eta.exp())
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        }
    })
}

/// `n` i.i.d. draws from a one-parameter family at natural parameter `theta`.
pub fn gen_expfam<T: Real, R: Rng + ?Sized>(
    family: ExpFam1P<f64>,
    theta: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    (0..n).map(|_| draw_response(family, theta, rng).map(T::lit)).collect()
}

/// Covariates from `covariates`, responses with mean `link⁻¹(θᵀx)`. Linear
/// responses are `N(θᵀx, σ²)`.
pub fn gen_glm<T: Real, R: Rng + ?Sized>(
    kind: GlmKind,
    theta_true: &[f64],
    n: usize,
    covariates: &CovariateSpec,
    sigma: f64,
    rng: &mut R,
) -> Result<GlmDataset<T>> {
    let d = theta_true.len();
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("GLM needs n >= 1 and D >= 1".into()));
    }
    covariates.validate()?;
    let family = match kind {
        GlmKind::Linear => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidArgument("linear GLM needs sigma > 0".into()));
            }
            ExpFam1P::Gaussian { sigma2: sigma * sigma }
        }
        GlmKind::Logistic => ExpFam1P::BernoulliLogit,
        GlmKind::Poisson => ExpFam1P::Poisson,
    };
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = covariates.draw(rng);
        }
        let eta = dot(&row, theta_true);
        y.push(T::lit(draw_response(family, eta, rng)?));
        x.extend(row.iter().map(|&v| T::lit(v)));
    }
    Ok(GlmDataset {
        x: Matrix::from_row_major(n, d, x)?,
        y,
        family: match family {
            ExpFam1P::Gaussian { sigma2 } => ExpFam1P::Gaussian { sigma2: T::lit(sigma2) },
            ExpFam1P::BernoulliLogit => ExpFam1P::BernoulliLogit,
            ExpFam1P::Poisson => ExpFam1P::Poisson,
            ExpFam1P::PlusMinusBinary => ExpFam1P::PlusMinusBinary,
        },
    })
}
