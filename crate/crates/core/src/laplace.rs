//! Laplace approximation of the normalizer `z_n` and the local normal
//! approximation `N(θ_n, (n H_n)⁻¹)` of the generalized posterior.

use serde::{Deserialize, Serialize};

use crate::domain::ParamVector;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numerics::FitResult;
use crate::posterior::GeneralizedPosterior;
use crate::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct LaplaceResult<T: Real> {
    pub log_zhat: T,
    pub mean: ParamVector<T>,
    /// `(n H_n)⁻¹`.
    pub covariance: Matrix<T>,
    pub log_det_h: T,
}

/// `log ẑ_n = -n f_n(θ_n) + log π(θ_n) + (D/2) log(2π/n) - ½ log det H_n`.
///
/// The prior is evaluated at `θ_n` in place of the unknown `θ_0`.
pub fn laplace_log_normalizer<T: Real>(gp: &GeneralizedPosterior<T>, fit: &FitResult<T>) -> Result<LaplaceResult<T>> {
    if !fit.converged {
        return Err(Error::NotConverged {
            grad_norm: fit.grad_norm.as_f64(),
            iterations: fit.iterations,
        });
    }
    if fit.theta_n.dim() != gp.dim() {
        return Err(Error::DimensionMismatch {
            expected: gp.dim(),
            got: fit.theta_n.dim(),
        });
    }
    let chol = fit.hessian_at_min.cholesky().map_err(|_| Error::LaplaceUndefined)?;
    let log_det_h = chol.log_det();
    let n = gp.n_real();
    let d = T::from_count(gp.dim());
    let half = T::lit(0.5);
    let log_prior = gp.prior.log_density(&fit.theta_n);
    if !log_prior.is_finite() {
        return Err(Error::InvalidArgument(
            "prior density vanishes at the optimum; Laplace approximation undefined".into(),
        ));
    }
    let log_zhat = -n * fit.f_min + log_prior + half * d * (T::lit(2.0) * T::PI() / n).ln() - half * log_det_h;
    let covariance = chol.inverse().scale(T::one() / n);
    Ok(LaplaceResult {
        log_zhat,
        mean: fit.theta_n.clone(),
        covariance,
        log_det_h,
    })
}

/// Multivariate normal density of `N(lr.mean, lr.covariance)` at `theta`.
pub fn laplace_normal_density<T: Real>(lr: &LaplaceResult<T>, theta: &[T]) -> Result<T> {
    Ok(normal_log_density(&lr.mean, &lr.covariance, theta)?.exp())
}

pub fn normal_log_density<T: Real>(mean: &[T], covariance: &Matrix<T>, x: &[T]) -> Result<T> {
    if x.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            got: x.len(),
        });
    }
    let chol = covariance.cholesky()?;
    let d = T::from_count(mean.len());
    let diff = crate::linalg::sub(x, mean);
    let half = T::lit(0.5);
    Ok(-half * (d * (T::lit(2.0) * T::PI()).ln() + chol.log_det() + chol.inv_quad(&diff)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuadraticModel;
    use crate::numerics::find_minimizer;
    use crate::prior::Prior;
    use std::sync::Arc;

    fn gaussian_family(n: usize) -> (GeneralizedPosterior<f64>, FitResult<f64>) {
        let model = Arc::new(QuadraticModel::isotropic(vec![0.0f64], 1.0).unwrap());
        let gp = GeneralizedPosterior::new(model.clone(), Prior::gaussian_iso(vec![0.0], 1.0).unwrap(), n).unwrap();
        let fit = find_minimizer(&*model, &[0.3], 1e-12, 10).unwrap();
        (gp, fit)
    }

    #[test]
    fn gaussian_family_n4() {
        let (gp, fit) = gaussian_family(4);
        let lr = laplace_log_normalizer(&gp, &fit).unwrap();
        assert!((lr.log_zhat + std::f64::consts::LN_2).abs() < 1e-6);
        let exact = -0.5 * 5f64.ln();
        assert!((exact + 0.804719).abs() < 1e-6);
        assert!(((exact - lr.log_zhat).exp() - 0.894427).abs() < 1e-6);
        assert!((lr.covariance[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gaussian_family_n100() {
        let (gp, fit) = gaussian_family(100);
        let lr = laplace_log_normalizer(&gp, &fit).unwrap();
        let ratio = (-0.5 * 101f64.ln() - lr.log_zhat).exp();
        assert!((ratio - 0.995037).abs() < 1e-6);
    }

    #[test]
    fn identity_hessian_unit_prior() {
        let model = Arc::new(QuadraticModel::isotropic(vec![0.0f64, 0.0], 1.0).unwrap());
        // π ≡ 1 at the optimum
        let gp = GeneralizedPosterior::new(model.clone(), Prior::custom(2, |_t: &[f64]| 0.0), 1).unwrap();
        let fit = find_minimizer(&*model, &[0.0, 0.0], 1e-12, 10).unwrap();
        let lr = laplace_log_normalizer(&gp, &fit).unwrap();
        assert!((lr.log_zhat - 1.837877).abs() < 1e-6);
    }

    #[test]
    fn indefinite_hessian_is_rejected() {
        let (gp, mut fit) = gaussian_family(4);
        fit.hessian_at_min = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!(matches!(
            laplace_log_normalizer(&gp, &fit),
            Err(Error::LaplaceUndefined)
        ));
    }

    #[test]
    fn normal_density_values() {
        let lr = LaplaceResult {
            log_zhat: 0.0,
            mean: ParamVector::new(vec![0.0]).unwrap(),
            covariance: Matrix::identity(1),
            log_det_h: 0.0,
        };
        assert!((laplace_normal_density(&lr, &[1.0]).unwrap() - 0.241971f64).abs() < 1e-6);

        let cov = Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.5]]).unwrap();
        let lr = LaplaceResult {
            log_zhat: 0.0,
            mean: ParamVector::new(vec![1.0, -1.0]).unwrap(),
            covariance: cov.clone(),
            log_det_h: 0.0,
        };
        let at_mode = laplace_normal_density(&lr, &[1.0, -1.0]).unwrap();
        let det: f64 = 2.0 * 0.5 - 0.09;
        assert!((at_mode - 1.0 / (2.0 * std::f64::consts::PI * det.sqrt())).abs() < 1e-12);
        let a = laplace_normal_density(&lr, &[1.7, -0.2]).unwrap();
        let b = laplace_normal_density(&lr, &[0.3, -1.8]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
