//! Location-family samples, possibly heavy-tailed or contaminated.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Noise {
    Gaussian {
        sigma: f64,
    },
    Cauchy {
        gamma: f64,
    },
    /// Standard normal noise; with probability `eps` the draw is scaled by
    /// `outlier_scale`.
    Mixture {
        eps: f64,
        outlier_scale: f64,
    },
}

impl Noise {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Gaussian { sigma } => sigma > 0.0,
            Self::Cauchy { gamma } => gamma > 0.0,
            Self::Mixture { eps, outlier_scale } => (0.0..=1.0).contains(&eps) && outlier_scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid noise parameters {self:?}")))
        }
    }
}

/// `θ₀ + ε_i` for i.i.d. noise `ε_i`. The mixture only consumes a uniform
/// when `eps > 0`, so `eps = 0` reproduces the unit Gaussian stream exactly.
pub fn gen_location<T: Real, R: Rng + ?Sized>(n: usize, theta0: f64, noise: Noise, rng: &mut R) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    noise.validate()?;
    let draw = |rng: &mut R| -> f64 {
        match noise {
            Noise::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            Noise::Cauchy { gamma } => Cauchy::new(0.0, gamma).expect("validated").sample(rng),
            Noise::Mixture { eps, outlier_scale } => {
                let outlier = eps > 0.0 && rng.random::<f64>() < eps;
                let z: f64 = rng.sample(StandardNormal);
                if outlier {
                    outlier_scale * z
                } else {
                    z
                }
            }
        }
    };
    Ok((0..n).map(|_| T::lit(theta0 + draw(rng))).collect())
}
