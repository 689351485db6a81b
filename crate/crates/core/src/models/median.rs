//! Median-based location objective `f_n(θ) = −½[ℓ(m_n − θ) + ℓ(θ − m_n)]`
//! with `ℓ = log G` for a symmetric CDF `G` and `m_n` the sample median.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ObjectiveModel;
use crate::scalar::{sigmoid, softplus};
use crate::Real;

/// Symmetric CDFs with log-concave `G`, supplied with analytic derivatives of
/// `log G` up to third order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetricCdf {
    Logistic,
    Gaussian,
}

/// Below this argument `log Φ` and the Mills ratio use their asymptotic series.
const GAUSS_TAIL: f64 = -30.0;

impl SymmetricCdf {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Logistic => "logistic",
            Self::Gaussian => "gaussian",
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Logistic => sigmoid(x),
            Self::Gaussian => 0.5 * libm::erfc(-x * FRAC_1_SQRT_2),
        }
    }

    /// `(log G(x), (log G)′, (log G)″, (log G)‴)`.
    pub fn log_derivatives(&self, x: f64) -> [f64; 4] {
        match self {
            Self::Logistic => {
                let g = sigmoid(x);
                let q = sigmoid(-x);
                let v = g * q;
                [-softplus(-x), q, -v, -v * (q - g)]
            }
            Self::Gaussian => {
                let (l0, lam) = if x < GAUSS_TAIL {
                    // Mills ratio R(t) = Φ(−t)/φ(t) ~ (1/t) Σ (−1)^k (2k−1)!! / t^{2k}.
                    let t = -x;
                    let u = 1.0 / (t * t);
                    let series = 1.0 + u * (-1.0 + u * (3.0 + u * (-15.0 + u * (105.0 + u * (-945.0 + u * 10395.0)))));
                    let r = series / t;
                    let log_phi = -0.5 * x * x - 0.5 * (2.0 * PI).ln();
                    (log_phi + r.ln(), 1.0 / r)
                } else {
                    let cdf = self.cdf(x);
                    let log_phi = -0.5 * x * x - 0.5 * (2.0 * PI).ln();
                    (cdf.ln(), (log_phi - cdf.ln()).exp())
                };
                let l2 = -lam * (x + lam);
                let l3 = -l2 * (x + lam) - lam * (1.0 + l2);
                [l0, lam, l2, l3]
            }
        }
    }

    /// `sup_x |(log G)‴(x)|` when known in closed form.
    pub fn third_sup(&self) -> Option<f64> {
        match self {
            // g(1−g)|1−2g| peaks at g = ½ ± 1/(2√3).
            Self::Logistic => Some(1.0 / (6.0 * 3f64.sqrt())),
            Self::Gaussian => None,
        }
    }

    /// Checks symmetry, log-concavity and the analytic derivatives against
    /// central differences on a symmetric grid.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str, x: f64| {
            Err(Error::InvalidArgument(format!(
                "{} CDF fails {what} at x = {x}",
                self.name()
            )))
        };
        let h = 1e-4;
        for k in -80..=80 {
            let x = 0.1 * k as f64;
            if (self.cdf(-x) - (1.0 - self.cdf(x))).abs() > 1e-12 {
                return fail("G(-x) = 1 - G(x)", x);
            }
            let [_, l1, l2, l3] = self.log_derivatives(x);
            if l2 > 0.0 {
                return fail("log-concavity", x);
            }
            let at = |y: f64| self.log_derivatives(y);
            let checks = [
                (l1, (at(x + h)[0] - at(x - h)[0]) / (2.0 * h)),
                (l2, (at(x + h)[1] - at(x - h)[1]) / (2.0 * h)),
                (l3, (at(x + h)[2] - at(x - h)[2]) / (2.0 * h)),
            ];
            for (analytic, fd) in checks {
                if (analytic - fd).abs() > 1e-6 * (1.0 + fd.abs()) {
                    return fail("the derivative check", x);
                }
            }
        }
        if !(self.log_derivatives(0.0)[2] < 0.0) {
            return fail("strict log-concavity", 0.0);
        }
        Ok(())
    }
}

/// Sample median; the midpoint of the two middle order statistics for even `n`.
pub fn sample_median<T: Real>(data: &[T]) -> Result<T> {
    if data.is_empty() {
        return Err(Error::Data("median of an empty sample".into()));
    }
    if data.iter().any(|v| v.is_nan()) {
        return Err(Error::Data("sample contains NaN".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        T::lit(0.5) * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

pub struct MedianLocationModel<T: Real> {
    median: T,
    cdf: SymmetricCdf,
    n: usize,
}

impl<T: Real> MedianLocationModel<T> {
    pub fn median(&self) -> T {
        self.median
    }

    pub fn cdf(&self) -> SymmetricCdf {
        self.cdf
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Derivatives of `f` with respect to `θ` at offset `d = θ − m_n`.
    fn derivatives(&self, theta: T) -> [f64; 4] {
        let d = (theta - self.median).as_f64();
        let a = self.cdf.log_derivatives(-d);
        let b = self.cdf.log_derivatives(d);
        [
            -0.5 * (a[0] + b[0]),
            -0.5 * (-a[1] + b[1]),
            -0.5 * (a[2] + b[2]),
            -0.5 * (-a[3] + b[3]),
        ]
    }
}

pub fn median_location_model<T: Real>(data: &[T], cdf: SymmetricCdf) -> Result<MedianLocationModel<T>> {
    cdf.validate()?;
    Ok(MedianLocationModel {
        median: sample_median(data)?,
        cdf,
        n: data.len(),
    })
}

impl<T: Real> ObjectiveModel<T> for MedianLocationModel<T> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, theta: &[T]) -> T {
        T::lit(self.derivatives(theta[0])[0])
    }

    fn gradient(&self, theta: &[T]) -> Vec<T> {
        vec![T::lit(self.derivatives(theta[0])[1])]
    }

    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        Matrix::from_diagonal(&[T::lit(self.derivatives(theta[0])[2])])
    }

    fn third_derivative_bound(&self, _region: &DomainBox<T>) -> Option<T> {
        self.cdf.third_sup().map(T::lit)
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        format!("median-location({})", self.cdf.name())
    }
}
