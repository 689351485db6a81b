//! Sandwich covariance `Â⁻¹ĴÂ⁻¹/n` and the affine recalibration of draws
//! towards it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mean_and_covariance, Matrix};
use crate::model::ObjectiveModel;
use crate::numerics::FitResult;
use crate::sampler::DrawMatrix;
use crate::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct SandwichEstimate<T: Real> {
    /// `f_n''(θ_n)`.
    pub a_hat: Matrix<T>,
    /// Centered outer-product of component gradients, divided by `k`.
    pub j_hat: Matrix<T>,
    pub sandwich_cov: Matrix<T>,
    pub component_count: usize,
}

/// Component gradients `ĝ_i = ∇c_i(θ_n)` of a model with
/// `n f_n = Σ_{i=1}^{k} c_i`, here with `n = k`.
///
/// For dependent-data pseudolikelihoods (Ising, GMRF) the sites are treated
/// as independent components, which ignores cross-site correlation in `Ĵ`.
pub fn sandwich_covariance<T: Real, M: ObjectiveModel<T> + ?Sized>(
    model: &M,
    fit: &FitResult<T>,
) -> Result<SandwichEstimate<T>> {
    if !fit.converged {
        return Err(Error::NotConverged {
            grad_norm: fit.grad_norm.as_f64(),
            iterations: fit.iterations,
        });
    }
    let d = model.dim();
    let grads = model
        .component_gradients(&fit.theta_n)
        .ok_or_else(|| Error::InvalidArgument(format!("model {} exposes no components", model.name())))?;
    let k = grads.len();
    if k <= d {
        return Err(Error::InsufficientComponents { k, dim: d });
    }
    let kt = T::from_count(k);
    let mut mean = vec![T::zero(); d];
    let mut scale = T::zero();
    for g in &grads {
        for (m, &v) in mean.iter_mut().zip(g) {
            *m += v;
            scale = scale.max(v.abs());
        }
    }
    for m in &mut mean {
        *m /= kt;
    }
    let mut j_hat = Matrix::zeros(d, d);
    let mut r = vec![T::zero(); d];
    for g in &grads {
        for j in 0..d {
            r[j] = g[j] - mean[j];
        }
        j_hat.add_outer(&r, &r, T::one() / kt);
    }
    j_hat.symmetrize();
    j_hat.cholesky().map_err(|_| Error::NotPositiveDefinite)?;
    if j_hat.min_eigenvalue() <= T::epsilon().sqrt() * scale * scale {
        return Err(Error::NotPositiveDefinite);
    }
    let a_hat = fit.hessian_at_min.clone();
    let a_inv = a_hat.inverse_spd().map_err(|_| Error::NotPositiveDefinite)?;
    let mut sandwich_cov = a_inv.matmul(&j_hat).matmul(&a_inv).scale(T::one() / kt);
    sandwich_cov.symmetrize();
    Ok(SandwichEstimate {
        a_hat,
        j_hat,
        sandwich_cov,
        component_count: k,
    })
}

/// Maps each draw by `θ ↦ θ_n + C(θ − θ_n)` with `C = Σ_target^{1/2} Σ_post^{−1/2}`
/// so that the calibrated draws have covariance `Σ_target`.
pub fn affine_calibrate<T: Real>(draws: &DrawMatrix<T>, theta_n: &[T], target: &Matrix<T>) -> Result<DrawMatrix<T>> {
    let d = draws.dim();
    if draws.is_empty() {
        return Err(Error::InvalidArgument("no draws to calibrate".into()));
    }
    if theta_n.len() != d || target.rows() != d || !target.is_square() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.rows(),
        });
    }
    target.cholesky()?;
    let (_, post) = mean_and_covariance(&draws.draws);
    let c = target.sqrt_psd().matmul(&post.inv_sqrt_spd()?);
    let mut out = draws.clone();
    let mut r = vec![T::zero(); d];
    for s in 0..out.len() {
        let row = out.draws.row_mut(s);
        for j in 0..d {
            r[j] = row[j] - theta_n[j];
        }
        let mapped = c.matvec(&r);
        for j in 0..d {
            row[j] = theta_n[j] + mapped[j];
        }
    }
    Ok(out)
}
