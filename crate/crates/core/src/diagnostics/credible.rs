//! Ellipsoidal credible sets from posterior draws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mean_and_covariance, Cholesky, Matrix};
use crate::sampler::DrawMatrix;
use crate::Real;

pub const MIN_SET_DRAWS: usize = 1000;

/// `{θ : (θ − c)ᵀ shape⁻¹ (θ − c) ≤ radius²}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct CredibleSet<T: Real> {
    pub center: Vec<T>,
    pub shape: Matrix<T>,
    pub radius2: T,
    pub nominal_mass: T,
}

impl<T: Real> CredibleSet<T> {
    pub fn new(center: Vec<T>, shape: Matrix<T>, radius2: T, nominal_mass: T) -> Result<Self> {
        if shape.rows() != center.len() || !shape.is_square() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: shape.rows(),
            });
        }
        shape.cholesky()?;
        Ok(Self {
            center,
            shape,
            radius2,
            nominal_mass,
        })
    }

    pub fn mahalanobis2(&self, theta: &[T]) -> Result<T> {
        let chol = self.shape.cholesky()?;
        Ok(mahalanobis2(&chol, &self.center, theta))
    }

    pub fn contains(&self, theta: &[T]) -> Result<bool> {
        Ok(self.mahalanobis2(theta)? <= self.radius2)
    }

    /// Half-length of the set along coordinate `j`: `√(radius² · shape_jj)`.
    pub fn half_width(&self, j: usize) -> T {
        (self.radius2 * self.shape[(j, j)]).sqrt()
    }
}

fn mahalanobis2<T: Real>(chol: &Cholesky<T>, center: &[T], theta: &[T]) -> T {
    let r: Vec<T> = theta.iter().zip(center).map(|(&a, &b)| a - b).collect();
    chol.inv_quad(&r)
}

/// Ellipsoid centered at the draw mean with the draw covariance as shape;
/// `radius²` is the `⌈ρS⌉`-th smallest Mahalanobis distance among the draws.
pub fn credible_set<T: Real>(draws: &DrawMatrix<T>, rho: T) -> Result<CredibleSet<T>> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::InvalidArgument("credible mass must lie in (0, 1)".into()));
    }
    let s = draws.len();
    if s < MIN_SET_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "credible sets need at least {MIN_SET_DRAWS} draws"
        )));
    }
    let (center, shape) = mean_and_covariance(&draws.draws);
    let chol = shape.cholesky()?;
    let mut d2: Vec<T> = (0..s).map(|i| mahalanobis2(&chol, &center, draws.row(i))).collect();
    let rank = (rho * T::from_count(s)).ceil().to_usize().unwrap_or(s).clamp(1, s);
    let (_, kth, _) = d2.select_nth_unstable_by(rank - 1, |a, b| a.partial_cmp(b).unwrap());
    let radius2 = *kth;
    Ok(CredibleSet {
        center,
        shape,
        radius2,
        nominal_mass: rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normal_draws(s: usize, d: usize, seed: u64) -> DrawMatrix<f64> {
        let mut rng = stream_rng(seed, 0);
        let v: Vec<f64> = (0..s * d).map(|_| rng.sample(StandardNormal)).collect();
        DrawMatrix::from_draws(Matrix::from_row_major(s, d, v).unwrap(), seed).unwrap()
    }

    fn empirical_mass(set: &CredibleSet<f64>, dm: &DrawMatrix<f64>) -> f64 {
        (0..dm.len()).filter(|&s| set.contains(dm.row(s)).unwrap()).count() as f64 / dm.len() as f64
    }

    #[test]
    fn chi_square_radius() {
        let dm = normal_draws(20_000, 2, 1);
        let set = credible_set(&dm, 0.9).unwrap();
        assert!((set.radius2 / 4.60517 - 1.0).abs() < 0.05, "{}", set.radius2);
        assert!((empirical_mass(&set, &dm) - 0.9).abs() <= 0.01);
    }

    #[test]
    fn one_dimensional_half_width() {
        let dm = normal_draws(50_000, 1, 2);
        let set = credible_set(&dm, 0.9).unwrap();
        let sd = set.shape[(0, 0)].sqrt();
        assert!((set.half_width(0) / sd - 1.644854).abs() < 0.03);
    }

    #[test]
    fn nested_levels() {
        let dm = normal_draws(5_000, 2, 3);
        let inner = credible_set(&dm, 0.5).unwrap();
        let outer = credible_set(&dm, 0.9).unwrap();
        assert!(inner.radius2 <= outer.radius2);
        assert_eq!(inner.center, outer.center);
    }

    #[test]
    fn rejects_bad_inputs() {
        let dm = normal_draws(500, 2, 4);
        assert!(credible_set(&dm, 0.9).is_err());
        let dm = normal_draws(2000, 2, 4);
        assert!(credible_set(&dm, 1.0).is_err());
        let flat = DrawMatrix::from_draws(Matrix::from_rows(&vec![vec![1.0, 1.0]; 2000]).unwrap(), 0).unwrap();
        assert!(credible_set(&flat, 0.9).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn affine_equivariance(
            b in prop::array::uniform2(-5.0f64..5.0),
            m in prop::array::uniform4(-2.0f64..2.0),
            seed in 0u64..1000,
        ) {
            let mmat = Matrix::from_rows(&[vec![m[0], m[1]], vec![m[2], m[3]]]).unwrap();
            let det = m[0] * m[3] - m[1] * m[2];
            prop_assume!(det.abs() > 0.1);
            let dm = normal_draws(1500, 2, seed);
            let mut mapped = dm.clone();
            for s in 0..dm.len() {
                let y = mmat.matvec(dm.row(s));
                mapped.draws.row_mut(s).copy_from_slice(&[y[0] + b[0], y[1] + b[1]]);
            }
            let a = credible_set(&dm, 0.8).unwrap();
            let c = credible_set(&mapped, 0.8).unwrap();
            let expected_center = mmat.matvec(&a.center);
            for j in 0..2 {
                prop_assert!((c.center[j] - expected_center[j] - b[j]).abs() < 1e-9);
            }
            let shape = mmat.matmul(&a.shape).matmul(&mmat.transpose());
            prop_assert!(c.shape.sub(&shape).max_abs() < 1e-8 * (1.0 + shape.max_abs()));
            prop_assert!((c.radius2 - a.radius2).abs() < 1e-8 * a.radius2);
        }
    }
}
