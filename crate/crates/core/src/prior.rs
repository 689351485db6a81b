use std::sync::Arc;

use serde::Serialize;

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::model::ScalarFn;
use crate::scalar::softplus;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    UniformOnBox,
    Gaussian,
    /// Independent logistic coordinates: the image of a uniform prior on a
    /// probability under the logit map.
    Logistic,
    Custom,
}

#[derive(Clone)]
enum Density<T: Real> {
    Uniform {
        support: DomainBox<T>,
        log_volume: T,
    },
    Gaussian {
        mean: Vec<T>,
        chol: Cholesky<T>,
        log_norm: T,
    },
    Logistic {
        location: Vec<T>,
        scale: T,
    },
    Custom {
        log_density: ScalarFn<T>,
    },
}

/// Prior density `π` on `R^D`. Log densities may be `-inf` off the support.
#[derive(Clone)]
pub struct Prior<T: Real> {
    dim: usize,
    density: Density<T>,
}

impl<T: Real> std::fmt::Debug for Prior<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Prior")
            .field("dim", &self.dim)
            .field("kind", &self.kind())
            .finish()
    }
}

impl<T: Real> Prior<T> {
    /// Uniform density on a bounded box.
    pub fn uniform(support: DomainBox<T>) -> Result<Self> {
        if !support.is_bounded() {
            return Err(Error::UnboundedBox("uniform prior needs a bounded support".into()));
        }
        Ok(Self {
            dim: support.dim(),
            density: Density::Uniform {
                log_volume: support.volume().ln(),
                support,
            },
        })
    }

    pub fn gaussian(mean: Vec<T>, covariance: &Matrix<T>) -> Result<Self> {
        if covariance.rows() != mean.len() || !covariance.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: covariance.rows(),
            });
        }
        let chol = covariance.cholesky()?;
        let d = T::from_count(mean.len());
        let log_norm = -T::lit(0.5) * (d * (T::lit(2.0) * T::PI()).ln() + chol.log_det());
        Ok(Self {
            dim: mean.len(),
            density: Density::Gaussian { mean, chol, log_norm },
        })
    }

    /// Isotropic `N(mean, sd² I)`.
    pub fn gaussian_iso(mean: Vec<T>, sd: T) -> Result<Self> {
        let d = mean.len();
        Self::gaussian(mean, &Matrix::identity(d).scale(sd * sd))
    }

    pub fn logistic(location: Vec<T>, scale: T) -> Result<Self> {
        if !(scale > T::zero()) {
            return Err(Error::InvalidArgument("logistic prior scale must be positive".into()));
        }
        Ok(Self {
            dim: location.len(),
            density: Density::Logistic { location, scale },
        })
    }

    /// Caller-supplied log density; the caller certifies normalization.
    pub fn custom(dim: usize, log_density: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            dim,
            density: Density::Custom {
                log_density: Arc::new(log_density),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PriorKind {
        match self.density {
            Density::Uniform { .. } => PriorKind::UniformOnBox,
            Density::Gaussian { .. } => PriorKind::Gaussian,
            Density::Logistic { .. } => PriorKind::Logistic,
            Density::Custom { .. } => PriorKind::Custom,
        }
    }

    /// Support as a box (all of `R^D` except for the uniform prior).
    pub fn support(&self) -> DomainBox<T> {
        match &self.density {
            Density::Uniform { support, .. } => support.clone(),
            _ => DomainBox::unbounded(self.dim),
        }
    }

    pub fn log_density(&self, theta: &[T]) -> T {
        match &self.density {
            Density::Uniform { support, log_volume } => {
                if support.contains(theta) {
                    -*log_volume
                } else {
                    T::neg_infinity()
                }
            }
            Density::Gaussian { mean, chol, log_norm } => {
                let d = crate::linalg::sub(theta, mean);
                *log_norm - T::lit(0.5) * chol.inv_quad(&d)
            }
            Density::Logistic { location, scale } => theta
                .iter()
                .zip(location)
                .map(|(&t, &l)| {
                    let u = (t - l) / *scale;
                    -softplus(u) - softplus(-u) - scale.ln()
                })
                .sum(),
            Density::Custom { log_density } => log_density(theta),
        }
    }

    /// The same prior shifted by `shift`.
    pub fn translated(&self, shift: &[T]) -> Self {
        let density = match &self.density {
            Density::Uniform { support, log_volume } => Density::Uniform {
                support: support.translate(shift),
                log_volume: *log_volume,
            },
            Density::Gaussian { mean, chol, log_norm } => Density::Gaussian {
                mean: mean.iter().zip(shift).map(|(&m, &s)| m + s).collect(),
                chol: chol.clone(),
                log_norm: *log_norm,
            },
            Density::Logistic { location, scale } => Density::Logistic {
                location: location.iter().zip(shift).map(|(&m, &s)| m + s).collect(),
                scale: *scale,
            },
            Density::Custom { log_density } => {
                let f = log_density.clone();
                let shift = shift.to_vec();
                Density::Custom {
                    log_density: Arc::new(move |t: &[T]| {
                        let back: Vec<T> = t.iter().zip(&shift).map(|(&a, &s)| a - s).collect();
                        f(&back)
                    }),
                }
            }
        };
        Self { dim: self.dim, density }
    }
}
