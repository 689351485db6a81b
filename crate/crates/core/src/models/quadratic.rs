//! `f(θ) = ½(θ − m)ᵀH(θ − m) + c`, the model whose posterior is exactly Gaussian
//! under a flat prior. Used as a reference in tests and calibration checks.

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::{dot, sub, Matrix};
use crate::model::ObjectiveModel;
use crate::Real;

#[derive(Clone, Debug)]
pub struct QuadraticModel<T: Real> {
    hessian: Matrix<T>,
    center: Vec<T>,
    offset: T,
}

impl<T: Real> QuadraticModel<T> {
    pub fn new(hessian: Matrix<T>, center: Vec<T>) -> Result<Self> {
        if !hessian.is_square() || hessian.rows() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: hessian.rows(),
            });
        }
        if center.is_empty() || !hessian.is_finite() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "quadratic model needs finite, non-empty inputs".into(),
            ));
        }
        let mut hessian = hessian;
        hessian.symmetrize();
        Ok(Self {
            hessian,
            center,
            offset: T::zero(),
        })
    }

    /// `H = h·I`.
    pub fn isotropic(center: Vec<T>, h: T) -> Result<Self> {
        let d = center.len();
        Self::new(Matrix::identity(d).scale(h), center)
    }

    pub fn with_offset(mut self, offset: T) -> Self {
        self.offset = offset;
        self
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn curvature(&self) -> &Matrix<T> {
        &self.hessian
    }
}

impl<T: Real> ObjectiveModel<T> for QuadraticModel<T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, theta: &[T]) -> T {
        let r = sub(theta, &self.center);
        T::lit(0.5) * dot(&r, &self.hessian.matvec(&r)) + self.offset
    }

    fn gradient(&self, theta: &[T]) -> Vec<T> {
        self.hessian.matvec(&sub(theta, &self.center))
    }

    fn hessian(&self, _theta: &[T]) -> Matrix<T> {
        self.hessian.clone()
    }

    fn third_derivative_bound(&self, _region: &DomainBox<T>) -> Option<T> {
        Some(T::zero())
    }

    fn is_convex(&self) -> bool {
        self.hessian.min_eigenvalue() >= T::zero()
    }

    fn name(&self) -> String {
        "quadratic".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn derivatives_match_differences() {
        let h = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let m = QuadraticModel::new(h, vec![1.0, -1.0]).unwrap().with_offset(3.0);
        assert_eq!(m.value(&[1.0, -1.0]), 3.0);
        let report = validate_model(&m, &[vec![0.0, 0.0], vec![2.0, 1.5]], 1e-5);
        assert!(report.passed());
        assert!(m.is_convex());
    }

    #[test]
    fn rejects_mismatched_shapes() {
        assert!(QuadraticModel::new(Matrix::identity(2), vec![0.0]).is_err());
        assert!(!QuadraticModel::isotropic(vec![0.0], -1.0).unwrap().is_convex());
    }
}
