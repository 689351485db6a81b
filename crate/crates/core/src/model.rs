//! The objective contract `f_n` every posterior is built from.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::DomainBox;
use crate::linalg::{norm_inf, Matrix};
use crate::numerics::fd;
use crate::Real;

/// A twice-differentiable objective `f_n : Θ -> R` with analytic derivatives.
///
/// The generalized posterior is `π_n(θ) ∝ exp(-n f_n(θ)) π(θ)`. Implementations
/// are immutable and must be safe to evaluate from many threads.
pub trait ObjectiveModel<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// Parameter space Θ. Defaults to all of `R^D`.
    fn domain(&self) -> DomainBox<T> {
        DomainBox::unbounded(self.dim())
    }

    fn value(&self, theta: &[T]) -> T;

    fn gradient(&self, theta: &[T]) -> Vec<T>;

    /// Symmetric Hessian.
    fn hessian(&self, theta: &[T]) -> Matrix<T>;

    /// Certified upper bound on the Frobenius norm of `f_n'''` over `region`,
    /// when one is known in closed form.
    fn third_derivative_bound(&self, _region: &DomainBox<T>) -> Option<T> {
        None
    }

    /// Claim that `f_n` is convex on its domain.
    fn is_convex(&self) -> bool {
        false
    }

    /// Number `k` of components in the decomposition `n f_n = Σ_i c_i`.
    fn component_count(&self) -> Option<usize> {
        None
    }

    /// Gradient of component `c_i` at `theta`.
    fn component_gradient(&self, _i: usize, _theta: &[T]) -> Option<Vec<T>> {
        None
    }

    /// All component gradients at once; override when a shared pass is cheaper.
    fn component_gradients(&self, theta: &[T]) -> Option<Vec<Vec<T>>> {
        let k = self.component_count()?;
        (0..k).map(|i| self.component_gradient(i, theta)).collect()
    }

    fn name(&self) -> String {
        "objective".into()
    }
}

impl<T: Real, M: ObjectiveModel<T> + ?Sized> ObjectiveModel<T> for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> DomainBox<T> {
        (**self).domain()
    }
    fn value(&self, theta: &[T]) -> T {
        (**self).value(theta)
    }
    fn gradient(&self, theta: &[T]) -> Vec<T> {
        (**self).gradient(theta)
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        (**self).hessian(theta)
    }
    fn third_derivative_bound(&self, region: &DomainBox<T>) -> Option<T> {
        (**self).third_derivative_bound(region)
    }
    fn is_convex(&self) -> bool {
        (**self).is_convex()
    }
    fn component_count(&self) -> Option<usize> {
        (**self).component_count()
    }
    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        (**self).component_gradient(i, theta)
    }
    fn component_gradients(&self, theta: &[T]) -> Option<Vec<Vec<T>>> {
        (**self).component_gradients(theta)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

pub type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type VectorFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type MatrixFn<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;
pub type ComponentFn<T> = Arc<dyn Fn(usize, &[T]) -> Vec<T> + Send + Sync>;

/// Objective assembled from closures. Handy for ad-hoc and test objectives.
#[derive(Clone)]
pub struct FnModel<T: Real> {
    dim: usize,
    domain: DomainBox<T>,
    value: ScalarFn<T>,
    gradient: VectorFn<T>,
    hessian: MatrixFn<T>,
    third_bound: Option<T>,
    convex: bool,
    components: Option<(usize, ComponentFn<T>)>,
    name: String,
}

impl<T: Real> FnModel<T> {
    pub fn new(
        dim: usize,
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        gradient: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        hessian: impl Fn(&[T]) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            domain: DomainBox::unbounded(dim),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
            third_bound: None,
            convex: false,
            components: None,
            name: "fn-model".into(),
        }
    }

    pub fn with_domain(mut self, domain: DomainBox<T>) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_convex(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    /// Global bound on `‖f'''‖_F`, valid for every region.
    pub fn with_third_bound(mut self, bound: T) -> Self {
        self.third_bound = Some(bound);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Declares `n f_n = Σ_{i<k} c_i` with component gradients `∇c_i`.
    pub fn with_components(
        mut self,
        k: usize,
        gradient: impl Fn(usize, &[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        self.components = Some((k, Arc::new(gradient)));
        self
    }
}

impl<T: Real> ObjectiveModel<T> for FnModel<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> DomainBox<T> {
        self.domain.clone()
    }
    fn value(&self, theta: &[T]) -> T {
        (self.value)(theta)
    }
    fn gradient(&self, theta: &[T]) -> Vec<T> {
        (self.gradient)(theta)
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        (self.hessian)(theta)
    }
    fn third_derivative_bound(&self, _region: &DomainBox<T>) -> Option<T> {
        self.third_bound
    }
    fn is_convex(&self) -> bool {
        self.convex
    }
    fn component_count(&self) -> Option<usize> {
        self.components.as_ref().map(|(k, _)| *k)
    }
    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        match &self.components {
            Some((k, g)) if i < *k => Some(g(i, theta)),
            _ => None,
        }
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `w · f_n` for a fixed positive weight `w` (a power or tempered posterior).
pub struct Tempered<T: Real, M> {
    inner: M,
    weight: T,
}

impl<T: Real, M: ObjectiveModel<T>> Tempered<T, M> {
    pub fn new(inner: M, weight: T) -> crate::Result<Self> {
        if !(weight > T::zero()) || !weight.is_finite() {
            return Err(crate::Error::InvalidArgument(format!(
                "tempering weight must be positive, got {weight}"
            )));
        }
        Ok(Self { inner, weight })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<T: Real, M: ObjectiveModel<T>> ObjectiveModel<T> for Tempered<T, M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> DomainBox<T> {
        self.inner.domain()
    }
    fn value(&self, theta: &[T]) -> T {
        self.weight * self.inner.value(theta)
    }
    fn gradient(&self, theta: &[T]) -> Vec<T> {
        self.inner
            .gradient(theta)
            .into_iter()
            .map(|g| g * self.weight)
            .collect()
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        self.inner.hessian(theta).scale(self.weight)
    }
    fn third_derivative_bound(&self, region: &DomainBox<T>) -> Option<T> {
        self.inner.third_derivative_bound(region).map(|b| b * self.weight)
    }
    fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }
    fn component_count(&self) -> Option<usize> {
        self.inner.component_count()
    }
    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        self.inner
            .component_gradient(i, theta)
            .map(|g| g.into_iter().map(|v| v * self.weight).collect())
    }
    fn component_gradients(&self, theta: &[T]) -> Option<Vec<Vec<T>>> {
        self.inner.component_gradients(theta).map(|gs| {
            gs.into_iter()
                .map(|g| g.into_iter().map(|v| v * self.weight).collect())
                .collect()
        })
    }
    fn name(&self) -> String {
        format!("tempered({}, {})", self.inner.name(), self.weight)
    }
}

/// Pass/fail thresholds for derivative validation.
pub const GRADIENT_REL_TOL: f64 = 1e-5;
pub const HESSIAN_REL_TOL: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct ProbeCheck {
    pub theta: Vec<f64>,
    pub gradient_rel_error: f64,
    pub hessian_rel_error: f64,
    pub hessian_asymmetry: f64,
    pub gradient_ok: bool,
    pub hessian_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ProbeCheck>,
    pub skipped: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.gradient_ok && c.hessian_ok)
    }

    pub fn max_gradient_error(&self) -> f64 {
        self.checks.iter().map(|c| c.gradient_rel_error).fold(0.0, f64::max)
    }

    pub fn max_hessian_error(&self) -> f64 {
        self.checks.iter().map(|c| c.hessian_rel_error).fold(0.0, f64::max)
    }
}

/// Cross-checks analytic gradient and Hessian against central differences.
///
/// `h` is the relative gradient step (`h · max(1, |θ_j|)`); the Hessian stencil
/// uses `10 h`. Errors are `‖analytic − fd‖_∞ / max(1, ‖fd‖_∞)`. Probes outside
/// the model domain are skipped with a warning.
pub fn validate_model<T: Real, M: ObjectiveModel<T> + ?Sized>(model: &M, probes: &[Vec<T>], h: T) -> ValidationReport {
    let domain = model.domain();
    let f = |t: &[T]| model.value(t);
    let mut checks = Vec::with_capacity(probes.len());
    let mut skipped = 0;
    for theta in probes {
        if !domain.contains(theta) {
            log::warn!("validate_model: probe {:?} outside the model domain, skipped", theta);
            skipped += 1;
            continue;
        }
        let gsteps = fd::relative_steps(theta, h);
        let hsteps = fd::relative_steps(theta, h * T::lit(10.0));
        let (g_fd, h_fd) = match (
            fd::central_gradient_steps(&f, theta, &gsteps, Some(&domain)),
            fd::central_hessian_steps(&f, theta, &hsteps, Some(&domain)),
        ) {
            (Ok(g), Ok(hm)) => (g, hm),
            _ => {
                log::warn!("validate_model: stencil around {:?} leaves the domain, skipped", theta);
                skipped += 1;
                continue;
            }
        };
        let g = model.gradient(theta);
        let hm = model.hessian(theta);
        let g_err = (norm_inf(&crate::linalg::sub(&g, &g_fd)) / T::one().max(norm_inf(&g_fd))).as_f64();
        let h_err = (hm.sub(&h_fd).max_abs() / T::one().max(h_fd.max_abs())).as_f64();
        let g_err = if g_err.is_nan() { f64::INFINITY } else { g_err };
        let h_err = if h_err.is_nan() { f64::INFINITY } else { h_err };
        checks.push(ProbeCheck {
            theta: crate::error::theta_f64(theta),
            gradient_rel_error: g_err,
            hessian_rel_error: h_err,
            hessian_asymmetry: hm.max_asymmetry().as_f64(),
            gradient_ok: g_err < GRADIENT_REL_TOL,
            hessian_ok: h_err < HESSIAN_REL_TOL,
        });
    }
    ValidationReport { checks, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> FnModel<f64> {
        let h = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let h1 = h.clone();
        let h2 = h.clone();
        FnModel::new(
            2,
            move |t: &[f64]| 0.5 * crate::linalg::dot(t, &h1.matvec(t)),
            move |t: &[f64]| h2.matvec(t),
            move |_t: &[f64]| h.clone(),
        )
    }

    #[test]
    fn quadratic_hessian_error_is_rounding() {
        let probes = vec![vec![0.3, -1.2], vec![2.0, 5.0], vec![-7.0, 0.1]];
        let rep = validate_model(&quadratic(), &probes, 1e-5);
        assert!(rep.passed());
        assert!(rep.max_hessian_error() < 1e-6, "{}", rep.max_hessian_error());
    }

    #[test]
    fn negated_gradient_fails_everywhere() {
        let q = quadratic();
        let q2 = q.clone();
        let q3 = q.clone();
        let wrong = FnModel::new(
            2,
            move |t: &[f64]| q.value(t),
            move |t: &[f64]| q2.gradient(t).into_iter().map(|g| -g).collect(),
            move |t: &[f64]| q3.hessian(t),
        );
        let probes = vec![vec![0.3, -1.2], vec![2.0, 5.0], vec![-7.0, 0.1]];
        let rep = validate_model(&wrong, &probes, 1e-5);
        assert_eq!(rep.checks.len(), 3);
        assert!(rep.checks.iter().all(|c| !c.gradient_ok));
    }

    #[test]
    fn probes_outside_domain_are_skipped() {
        let m = quadratic().with_domain(DomainBox::cube(2, -1.0, 1.0).unwrap());
        let rep = validate_model(&m, &[vec![0.0, 0.0], vec![5.0, 0.0]], 1e-5);
        assert_eq!(rep.skipped, 1);
        assert_eq!(rep.checks.len(), 1);
    }

    #[test]
    fn tempered_scales_everything() {
        let t = Tempered::new(quadratic(), 2.0).unwrap();
        let theta = [0.5, -0.25];
        assert!((t.value(&theta) - 2.0 * quadratic().value(&theta)).abs() < 1e-15);
        assert_eq!(t.hessian(&theta)[(0, 1)], 2.0);
        assert!(Tempered::new(quadratic(), 0.0).is_err());
    }
}
