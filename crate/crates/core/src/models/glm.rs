//! Generalized linear models with a one-parameter natural exponential family:
//! `f_n(θ) = (1/n) Σ κ(θᵀX_i) − θᵀ S_n`, `S_n = (1/n) Σ s(Y_i) X_i`.

use serde::{Deserialize, Serialize};

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ObjectiveModel;
use crate::models::expfam::ExpFam1P;
use crate::models::linear::LinearPredictorObjective;
use crate::Real;

/// Smallest singular value of `X / √n` below which the design is degenerate.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct GlmDataset<T: Real> {
    /// `n × D` covariates.
    pub x: Matrix<T>,
    pub y: Vec<T>,
    pub family: ExpFam1P<T>,
}

impl<T: Real> GlmDataset<T> {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }
}

/// Smallest singular value of `X / √n` via the Gram matrix.
pub fn min_scaled_singular_value<T: Real>(x: &Matrix<T>) -> T {
    let n = T::from_count(x.rows().max(1));
    let gram = x.transpose().matmul(x).scale(T::one() / n);
    gram.min_eigenvalue().max(T::zero()).sqrt()
}

pub struct GlmModel<T: Real> {
    inner: LinearPredictorObjective<T>,
}

impl<T: Real> GlmModel<T> {
    pub fn family(&self) -> ExpFam1P<T> {
        self.inner.family()
    }

    pub fn design(&self) -> &Matrix<T> {
        self.inner.design()
    }

    /// `(1/n) Σ κ'(θᵀx_i) x_i − S_n`; zero at `θ_n` (moment matching).
    pub fn moment_residual(&self, theta: &[T]) -> Vec<T> {
        self.inner.gradient(theta)
    }
}

/// Builds the GLM objective after checking responses and identifiability.
pub fn build_glm<T: Real>(data: &GlmDataset<T>) -> Result<GlmModel<T>> {
    let n = data.n();
    if n == 0 {
        return Err(Error::Data("GLM dataset is empty".into()));
    }
    if data.x.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: data.x.rows(),
        });
    }
    if !data.x.is_finite() {
        return Err(Error::Data("covariates contain NaN or infinity".into()));
    }
    for &y in &data.y {
        data.family.validate_response(y)?;
    }
    if !(min_scaled_singular_value(&data.x) > T::lit(RANK_THRESHOLD)) {
        return Err(Error::RankDeficient);
    }
    let stats = data.y.iter().map(|&y| data.family.sufficient_statistic(y)).collect();
    Ok(GlmModel {
        inner: LinearPredictorObjective::new(
            data.x.clone(),
            stats,
            data.family,
            format!("glm({})", data.family.name()),
        ),
    })
}

impl<T: Real> ObjectiveModel<T> for GlmModel<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, theta: &[T]) -> T {
        self.inner.value(theta)
    }
    fn gradient(&self, theta: &[T]) -> Vec<T> {
        self.inner.gradient(theta)
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        self.inner.hessian(theta)
    }
    fn third_derivative_bound(&self, region: &DomainBox<T>) -> Option<T> {
        self.inner.third_derivative_bound(region)
    }
    fn is_convex(&self) -> bool {
        true
    }
    fn component_count(&self) -> Option<usize> {
        self.inner.component_count()
    }
    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        self.inner.component_gradient(i, theta)
    }
    fn name(&self) -> String {
        self.inner.name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{find_minimizer, third_derivative_bound_probe};

    fn intercept_only(y: Vec<f64>, family: ExpFam1P<f64>) -> GlmDataset<f64> {
        GlmDataset {
            x: Matrix::from_row_major(y.len(), 1, vec![1.0; y.len()]).unwrap(),
            y,
            family,
        }
    }

    #[test]
    fn linear_gaussian_matches_normal_equations() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.5],
            vec![1.0, -1.2],
            vec![1.0, 2.0],
            vec![1.0, 0.1],
            vec![1.0, -0.7],
        ])
        .unwrap();
        let y: Vec<f64> = vec![1.0, -0.5, 3.2, 0.9, 0.1];
        let data = GlmDataset {
            x: x.clone(),
            y: y.clone(),
            family: ExpFam1P::Gaussian { sigma2: 1.0 },
        };
        let m = build_glm(&data).unwrap();
        let fit = find_minimizer(&m, &[0.0, 0.0], 1e-12, 20).unwrap();
        let xtx = x.transpose().matmul(&x);
        let xty = x.transpose().matvec(&y);
        let ols = xtx.cholesky().unwrap().solve(&xty);
        assert!((fit.theta_n[0] - ols[0]).abs() < 1e-10);
        assert!((fit.theta_n[1] - ols[1]).abs() < 1e-10);
    }

    #[test]
    fn logistic_intercept_reduces_to_bernoulli() {
        let m = build_glm(&intercept_only(vec![1.0, 0.0, 0.0, 0.0], ExpFam1P::BernoulliLogit)).unwrap();
        let fit = find_minimizer(&m, &[0.0], 1e-12, 50).unwrap();
        assert!((fit.theta_n[0] + 1.098612).abs() < 1e-6);
        assert!(m.moment_residual(&fit.theta_n)[0].abs() < 1e-12);
    }

    #[test]
    fn poisson_intercept_value_at_zero() {
        let m = build_glm(&intercept_only(vec![3.0, 2.0, 4.0], ExpFam1P::Poisson)).unwrap();
        assert!((m.value(&[0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0]]).unwrap();
        let data = GlmDataset {
            x,
            y: vec![0.0, 1.0, 1.0],
            family: ExpFam1P::BernoulliLogit,
        };
        assert!(matches!(build_glm(&data), Err(Error::RankDeficient)));
    }

    #[test]
    fn third_bounds_follow_kappa() {
        let data = GlmDataset {
            x: Matrix::from_row_major(4, 1, vec![1.0, -1.0, 1.0, -1.0]).unwrap(),
            y: vec![1.0, 0.0, 0.0, 1.0],
            family: ExpFam1P::BernoulliLogit,
        };
        let m = build_glm(&data).unwrap();
        let region = DomainBox::cube(1, -2.0, 2.0).unwrap();
        let b = third_derivative_bound_probe(&m, &region, 32, 1e-3, 0).unwrap();
        assert!(b.value <= 3.0);
        assert!(b.analytic.unwrap() <= 3.0);
        assert!(b.probed <= b.analytic.unwrap() + 1e-9);

        let lin = GlmDataset {
            x: Matrix::from_row_major(3, 1, vec![1.0, 2.0, -1.0]).unwrap(),
            y: vec![0.3, 1.0, -2.0],
            family: ExpFam1P::Gaussian { sigma2: 1.0 },
        };
        let m = build_glm(&lin).unwrap();
        let b = third_derivative_bound_probe(&m, &region, 16, 1e-3, 0).unwrap();
        assert_eq!(b.value, 0.0);
    }
}
