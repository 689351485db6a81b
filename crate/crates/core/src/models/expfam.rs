//! One-parameter natural exponential families `q(y|η) = exp(η s(y) − κ(η))`
//! and the i.i.d. objective `f_n(θ) = κ(θ) − θᵀ S_n`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::ObjectiveModel;
use crate::scalar::{sigmoid, softplus};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ExpFam1P<T> {
    /// Known variance: `κ(η) = η²/(2σ²)`, `s(y) = y/σ²`.
    Gaussian { sigma2: T },
    /// `κ(η) = log(1 + e^η)`, `y ∈ {0, 1}`.
    BernoulliLogit,
    /// `κ(η) = e^η`, `y ∈ {0, 1, 2, ...}`.
    Poisson,
    /// `κ(η) = log(e^η + e^{−η})`, `y ∈ {−1, +1}`.
    PlusMinusBinary,
}

impl<T: Real> ExpFam1P<T> {
    pub fn gaussian(sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) {
            return Err(Error::InvalidArgument("gaussian family needs sigma2 > 0".into()));
        }
        Ok(Self::Gaussian { sigma2 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::BernoulliLogit => "bernoulli-logit",
            Self::Poisson => "poisson",
            Self::PlusMinusBinary => "plusminus-binary",
        }
    }

    pub fn kappa(&self, eta: T) -> T {
        match *self {
            Self::Gaussian { sigma2 } => eta * eta / (T::lit(2.0) * sigma2),
            Self::BernoulliLogit => softplus(eta),
            Self::Poisson => eta.exp(),
            Self::PlusMinusBinary => eta.abs() + (T::lit(-2.0) * eta.abs()).exp().ln_1p(),
        }
    }

    pub fn kappa1(&self, eta: T) -> T {
        match *self {
            Self::Gaussian { sigma2 } => eta / sigma2,
            Self::BernoulliLogit => sigmoid(eta),
            Self::Poisson => eta.exp(),
            Self::PlusMinusBinary => eta.tanh(),
        }
    }

    pub fn kappa2(&self, eta: T) -> T {
        match *self {
            Self::Gaussian { sigma2 } => T::one() / sigma2,
            Self::BernoulliLogit => {
                let p = sigmoid(eta);
                p * (T::one() - p)
            }
            Self::Poisson => eta.exp(),
            Self::PlusMinusBinary => {
                let t = eta.tanh();
                T::one() - t * t
            }
        }
    }

    pub fn kappa3(&self, eta: T) -> T {
        match *self {
            Self::Gaussian { .. } => T::zero(),
            Self::BernoulliLogit => {
                let p = sigmoid(eta);
                p * (T::one() - p) * (T::one() - T::lit(2.0) * p)
            }
            Self::Poisson => eta.exp(),
            Self::PlusMinusBinary => {
                let t = eta.tanh();
                T::lit(-2.0) * t * (T::one() - t * t)
            }
        }
    }

    /// `sup |κ'''(η)|` over all η, when finite.
    pub fn kappa3_sup(&self) -> Option<T> {
        match self {
            Self::Gaussian { .. } => Some(T::zero()),
            // attained at σ(η) = (3 ± √3)/6
            Self::BernoulliLogit => Some(T::one() / (T::lit(6.0) * T::lit(3.0).sqrt())),
            Self::Poisson => None,
            // attained at tanh(η) = 1/√3
            Self::PlusMinusBinary => Some(T::lit(4.0) / (T::lit(3.0) * T::lit(3.0).sqrt())),
        }
    }

    /// `sup |κ'''(η)|` over `η ∈ [lo, hi]`; may be `+inf`.
    pub fn kappa3_sup_on(&self, lo: T, hi: T) -> T {
        match self {
            Self::Poisson => hi.exp(),
            _ => {
                let _ = lo;
                self.kappa3_sup().unwrap_or(T::infinity())
            }
        }
    }

    pub fn sufficient_statistic(&self, y: T) -> T {
        match *self {
            Self::Gaussian { sigma2 } => y / sigma2,
            _ => y,
        }
    }

    /// Response support check.
    pub fn validate_response(&self, y: T) -> Result<()> {
        let ok = match self {
            Self::Gaussian { .. } => y.is_finite(),
            Self::BernoulliLogit => y == T::zero() || y == T::one(),
            Self::Poisson => y >= T::zero() && y.fract() == T::zero() && y.is_finite(),
            Self::PlusMinusBinary => y == T::one() || y == -T::one(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Data(format!("response {y} outside the {} support", self.name())))
        }
    }

    /// Mean `κ'(η)` of `s(Y)`; for sampling responses in natural units.
    pub fn mean_response(&self, eta: T) -> T {
        match *self {
            Self::Gaussian { .. } => eta,
            _ => self.kappa1(eta),
        }
    }
}

/// A multi-parameter log-partition function with analytic derivatives.
pub trait LogPartition<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[T]) -> T;
    fn gradient(&self, theta: &[T]) -> Vec<T>;
    fn hessian(&self, theta: &[T]) -> Matrix<T>;
    /// Bound on `‖κ'''‖_F` over `region`, when known.
    fn third_bound(&self, _region: &DomainBox<T>) -> Option<T> {
        None
    }
    fn name(&self) -> String {
        "kappa".into()
    }
}

impl<T: Real> LogPartition<T> for ExpFam1P<T> {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, theta: &[T]) -> T {
        self.kappa(theta[0])
    }
    fn gradient(&self, theta: &[T]) -> Vec<T> {
        vec![self.kappa1(theta[0])]
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        Matrix::from_diagonal(&[self.kappa2(theta[0])])
    }
    fn third_bound(&self, region: &DomainBox<T>) -> Option<T> {
        let s = self.kappa3_sup_on(region.lower()[0], region.upper()[0]);
        s.is_finite().then_some(s)
    }
    fn name(&self) -> String {
        self.name().into()
    }
}

/// `f_n(θ) = κ(θ) − θᵀ S_n`, the i.i.d. negative log-likelihood in natural
/// form (base-measure terms dropped).
#[derive(Clone)]
pub struct IidExpFamModel<T: Real> {
    kappa: Arc<dyn LogPartition<T>>,
    s_n: Vec<T>,
    n: usize,
    stats: Option<Vec<Vec<T>>>,
}

impl<T: Real> IidExpFamModel<T> {
    /// From raw observations of a one-parameter family.
    pub fn from_observations(family: ExpFam1P<T>, ys: &[T]) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::Data("i.i.d. model needs at least one observation".into()));
        }
        for &y in ys {
            family.validate_response(y)?;
        }
        let stats = ys.iter().map(|&y| vec![family.sufficient_statistic(y)]).collect();
        Self::from_statistics(Arc::new(family), stats)
    }

    /// From per-observation sufficient statistics `s(y_i)`.
    pub fn from_statistics(kappa: Arc<dyn LogPartition<T>>, stats: Vec<Vec<T>>) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::Data("i.i.d. model needs at least one observation".into()));
        }
        let d = kappa.dim();
        let mut s_n = vec![T::zero(); d];
        for s in &stats {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("non-finite sufficient statistic".into()));
            }
            for (a, &b) in s_n.iter_mut().zip(s) {
                *a += b;
            }
        }
        let n = stats.len();
        s_n.iter_mut().for_each(|v| *v /= T::from_count(n));
        Ok(Self {
            kappa,
            s_n,
            n,
            stats: Some(stats),
        })
    }

    /// From the average statistic alone; no per-observation components.
    pub fn from_summary(kappa: Arc<dyn LogPartition<T>>, s_n: Vec<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Data("i.i.d. model needs at least one observation".into()));
        }
        if s_n.len() != kappa.dim() {
            return Err(Error::DimensionMismatch {
                expected: kappa.dim(),
                got: s_n.len(),
            });
        }
        Ok(Self {
            kappa,
            s_n,
            n,
            stats: None,
        })
    }

    pub fn average_statistic(&self) -> &[T] {
        &self.s_n
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }
}

impl<T: Real> ObjectiveModel<T> for IidExpFamModel<T> {
    fn dim(&self) -> usize {
        self.kappa.dim()
    }
    fn value(&self, theta: &[T]) -> T {
        self.kappa.value(theta) - dot(theta, &self.s_n)
    }
    fn gradient(&self, theta: &[T]) -> Vec<T> {
        crate::linalg::sub(&self.kappa.gradient(theta), &self.s_n)
    }
    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        self.kappa.hessian(theta)
    }
    fn third_derivative_bound(&self, region: &DomainBox<T>) -> Option<T> {
        self.kappa.third_bound(region)
    }
    fn is_convex(&self) -> bool {
        true
    }
    fn component_count(&self) -> Option<usize> {
        self.stats.as_ref().map(Vec::len)
    }
    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        let s = self.stats.as_ref()?.get(i)?;
        Some(crate::linalg::sub(&self.kappa.gradient(theta), s))
    }
    fn name(&self) -> String {
        format!("iid-expfam({})", self.kappa.name())
    }
}
