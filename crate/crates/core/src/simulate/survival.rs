//! Proportional-hazards survival data with independent censoring.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::models::SurvivalDataset;
use crate::simulate::glm::CovariateSpec;
use crate::Real;

/// Baseline cumulative hazard `Λ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Baseline {
    /// `Λ₀(t) = c t`.
    Exponential { c: f64 },
    /// `Λ₀(t) = (t/λ)^k`.
    Weibull { k: f64, lambda: f64 },
}

impl Baseline {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Exponential { c } => c > 0.0 && c.is_finite(),
            Self::Weibull { k, lambda } => k > 0.0 && lambda > 0.0 && k.is_finite() && lambda.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "baseline hazard parameters must be positive".into(),
            ))
        }
    }

    pub fn inverse_cumulative(&self, h: f64) -> f64 {
        match *self {
            Self::Exponential { c } => h / c,
            Self::Weibull { k, lambda } => lambda * h.powf(1.0 / k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Censoring {
    /// Rate 0 disables censoring.
    Exponential {
        rate: f64,
    },
    Uniform {
        c: f64,
    },
}

impl Censoring {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            Self::Exponential { rate: 0.0 } => Ok(f64::INFINITY),
            Self::Exponential { rate } if rate > 0.0 => Ok(-(1.0 - rng.random::<f64>()).ln() / rate),
            Self::Uniform { c } if c > 0.0 => Ok(rng.random_range(0.0..c)),
            _ => Err(Error::InvalidArgument("censoring parameters must be positive".into())),
        }
    }
}

/// Event times `T = Λ₀⁻¹(−log U · e^{−θᵀx})`, censoring times `C`
/// independent of `T`, observed `(min(T, C), 1(T ≤ C))`.
pub fn gen_cox<T: Real, R: Rng + ?Sized>(
    n: usize,
    theta_true: &[f64],
    baseline: Baseline,
    censoring: Censoring,
    covariates: &CovariateSpec,
    rng: &mut R,
) -> Result<SurvivalDataset<T>> {
    let d = theta_true.len();
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("Cox data need n >= 1 and D >= 1".into()));
    }
    if !covariates.is_bounded() {
        return Err(Error::InvalidArgument("Cox covariates must be bounded".into()));
    }
    covariates.validate()?;
    baseline.validate()?;
    let mut x = Vec::with_capacity(n * d);
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = covariates.draw(rng);
        }
        let e = -(1.0 - rng.random::<f64>()).ln();
        let t = baseline.inverse_cumulative(e * (-dot(&row, theta_true)).exp());
        let c = censoring.draw(rng)?;
        times.push(T::lit(t.min(c)));
        events.push(t <= c);
        x.extend(row.iter().map(|&v| T::lit(v)));
    }
    SurvivalDataset::new(times, events, Matrix::from_row_major(n, d, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    const UNIT: CovariateSpec = CovariateSpec::BoundedUniform { a: -1.0, b: 1.0 };

    #[test]
    fn null_exponential_mean() {
        let (n, c) = (20_000, 2.0);
        let data: SurvivalDataset<f64> = gen_cox(
            n,
            &[0.0],
            Baseline::Exponential { c },
            Censoring::Exponential { rate: 0.0 },
            &UNIT,
            &mut stream_rng(1, 0),
        )
        .unwrap();
        assert_eq!(data.event_count(), n);
        let mean = data.times.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0 / c).abs() < 3.0 / (c * (n as f64).sqrt()));
    }

    #[test]
    fn censoring_and_weibull() {
        let data: SurvivalDataset<f64> = gen_cox(
            2000,
            &[1.0, -0.5],
            Baseline::Weibull { k: 1.5, lambda: 2.0 },
            Censoring::Uniform { c: 1.0 },
            &UNIT,
            &mut stream_rng(2, 0),
        )
        .unwrap();
        assert!(data.event_count() < 2000);
        assert!(data.times.iter().all(|&t| t < 1.0));
        assert!(gen_cox::<f64, _>(
            10,
            &[1.0],
            Baseline::Exponential { c: 1.0 },
            Censoring::Exponential { rate: 0.0 },
            &CovariateSpec::IidGaussian { scale: 1.0 },
            &mut stream_rng(0, 0),
        )
        .is_err());
    }

    #[test]
    fn weibull_inverse() {
        let b = Baseline::Weibull { k: 2.0, lambda: 3.0 };
        let t = b.inverse_cumulative(0.25);
        assert!(((t / 3.0f64).powi(2) - 0.25).abs() < 1e-15);
    }
}
