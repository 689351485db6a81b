//! Numerical audit of the local regularity conditions behind asymptotic
//! normality: positive curvature at the optimum, convexity, bounded third
//! derivatives on a neighborhood, and a near-zero gradient.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::model::ObjectiveModel;
use crate::numerics::fd::{self, THIRD_STEP};
use crate::numerics::optimize::FitResult;
use crate::Real;

/// Smallest eigenvalue threshold for "positive definite".
pub const PD_THRESHOLD: f64 = 1e-8;
/// Probed minimum eigenvalue at or above this is "consistent with convex".
pub const CONVEXITY_THRESHOLD: f64 = -1e-8;

/// Minimum over quasi-random points in `region` of the smallest Hessian
/// eigenvalue. Evidence, not proof, of convexity.
pub fn convexity_probe<T: Real, M: ObjectiveModel<T> + ?Sized>(
    model: &M,
    region: &DomainBox<T>,
    n_probe: usize,
    seed: u64,
) -> Result<T> {
    let points = region.quasi_random_points(n_probe.max(1), seed)?;
    let domain = model.domain();
    Ok(points
        .par_iter()
        .filter(|p| domain.contains(p))
        .map(|p| model.hessian(p).min_eigenvalue())
        .reduce(|| T::infinity(), T::min))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThirdBound<T: Real> {
    /// `min(analytic, probed)` when an analytic bound exists, else `probed`.
    pub value: T,
    pub probed: T,
    pub analytic: Option<T>,
    /// True when the value is backed by the model's closed-form bound.
    pub authoritative: bool,
}

/// Max over probes of the Frobenius norm of the finite-difference third
/// derivative tensor (central differences of the analytic Hessian, step `h`).
pub fn third_derivative_bound_probe<T: Real, M: ObjectiveModel<T> + ?Sized>(
    model: &M,
    region: &DomainBox<T>,
    n_probe: usize,
    h: T,
    seed: u64,
) -> Result<ThirdBound<T>> {
    if !region.is_bounded() {
        return Err(Error::UnboundedBox(
            "third-derivative bound needs a bounded neighborhood".into(),
        ));
    }
    let inner = region
        .shrink(h)
        .map_err(|_| Error::InvalidArgument("region too small for the third-derivative stencil".into()))?;
    let points = inner.quasi_random_points(n_probe.max(1), seed)?;
    let hess = |t: &[T]| model.hessian(t);
    let probed = points
        .par_iter()
        .map(|p| fd::tensor_frobenius(&fd::third_tensor_from_hessian(&hess, p, h)))
        .reduce(|| T::zero(), T::max);
    let analytic = model.third_derivative_bound(region);
    Ok(match analytic {
        Some(a) => ThirdBound {
            value: a.min(probed),
            probed,
            analytic: Some(a),
            authoritative: true,
        },
        None => ThirdBound {
            value: probed,
            probed,
            analytic: None,
            authoritative: false,
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditVerdicts {
    pub hessian_positive_definite: bool,
    pub consistent_with_convex: bool,
    pub third_derivative_bounded: bool,
    pub critical_point: bool,
}

impl AuditVerdicts {
    pub fn all_pass(&self) -> bool {
        self.hessian_positive_definite
            && self.consistent_with_convex
            && self.third_derivative_bounded
            && self.critical_point
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport<T: Real> {
    /// Smallest eigenvalue of `H_n = f_n''(θ_n)`, the finite-sample stand-in
    /// for `f''(θ_0)`.
    pub min_eigenvalue_h0: T,
    pub convexity_min_eig_over_probes: T,
    pub third_bound_estimate: T,
    pub third_bound_authoritative: bool,
    pub grad_residual_at_thetan: T,
    pub verdicts: AuditVerdicts,
}

#[derive(Clone, Copy, Debug)]
pub struct AuditSettings<T> {
    pub n_probe: usize,
    pub seed: u64,
    pub third_step: T,
    /// Gradient norm at `θ_n` accepted as a critical point.
    pub grad_tol: T,
}

impl<T: Real> Default for AuditSettings<T> {
    fn default() -> Self {
        Self {
            n_probe: 64,
            seed: 0,
            third_step: T::lit(THIRD_STEP),
            grad_tol: T::lit(1e-6),
        }
    }
}

/// Audits a converged fit on the neighborhood `region` (the `E` of the
/// conditions). Refuses non-converged fits.
pub fn bvm_audit<T: Real, M: ObjectiveModel<T> + ?Sized>(
    model: &M,
    fit: &FitResult<T>,
    region: &DomainBox<T>,
) -> Result<AuditReport<T>> {
    bvm_audit_with(model, fit, region, &AuditSettings::default())
}

pub fn bvm_audit_with<T: Real, M: ObjectiveModel<T> + ?Sized>(
    model: &M,
    fit: &FitResult<T>,
    region: &DomainBox<T>,
    settings: &AuditSettings<T>,
) -> Result<AuditReport<T>> {
    if !fit.converged {
        return Err(Error::NotConverged {
            grad_norm: fit.grad_norm.as_f64(),
            iterations: fit.iterations,
        });
    }
    let min_eig = fit.hessian_at_min.min_eigenvalue();
    let convex_eig = convexity_probe(model, region, settings.n_probe, settings.seed)?;
    let third = third_derivative_bound_probe(model, region, settings.n_probe, settings.third_step, settings.seed)?;
    let grad = crate::linalg::norm2(&model.gradient(&fit.theta_n));
    let verdicts = AuditVerdicts {
        hessian_positive_definite: min_eig > T::lit(PD_THRESHOLD),
        consistent_with_convex: convex_eig >= T::lit(CONVEXITY_THRESHOLD),
        third_derivative_bounded: third.value.is_finite(),
        critical_point: grad <= settings.grad_tol,
    };
    Ok(AuditReport {
        min_eigenvalue_h0: min_eig,
        convexity_min_eig_over_probes: convex_eig,
        third_bound_estimate: third.value,
        third_bound_authoritative: third.authoritative,
        grad_residual_at_thetan: grad,
        verdicts,
    })
}
