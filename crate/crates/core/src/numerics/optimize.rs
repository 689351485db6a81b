//! Damped Newton minimization of `f_n`.

use serde::{Deserialize, Serialize};

use crate::domain::ParamVector;
use crate::error::{theta_f64, Error, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::model::ObjectiveModel;
use crate::Real;

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
/// Iterates with `‖θ‖` beyond this are declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;
/// A stationary point also needs a Newton step below this (relative to
/// `max(1, ‖θ‖)`); rejects points where the gradient has merely decayed
/// along a receding direction, as on separable logistic data.
const NEWTON_STEP_REL_TOL: f64 = 1e-3;
const MIN_STEP: f64 = 1e-20;
/// Relative size of `f` below which a predicted decrease is treated as
/// rounding noise; the line search then judges steps by the gradient norm.
const VALUE_NOISE_REL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct FitResult<T: Real> {
    pub theta_n: ParamVector<T>,
    pub f_min: T,
    pub hessian_at_min: Matrix<T>,
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at every accepted iterate, starting with `θ_init`.
    pub trace: Vec<T>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NewtonSettings<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for NewtonSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iter: 200,
        }
    }
}

fn checked_value<T: Real, M: ObjectiveModel<T> + ?Sized>(m: &M, theta: &[T]) -> Result<T> {
    let v = m.value(theta);
    if v.is_nan() {
        return Err(Error::Evaluation {
            theta: theta_f64(theta),
        });
    }
    Ok(v)
}

/// Newton iteration with backtracking (Armijo `1e-4`, halving). Falls back to
/// steepest descent when the Hessian is not positive definite, and shrinks any
/// step that would leave the open domain. Once the predicted decrease falls
/// below the rounding noise of `f`, steps are judged by the gradient norm, so
/// the trace may then rise by rounding-level amounts.
///
/// Hitting `max_iter` or diverging yields `converged = false`, not an error.
pub fn find_minimizer<T: Real, M: ObjectiveModel<T> + ?Sized>(
    model: &M,
    theta_init: &[T],
    tol: T,
    max_iter: usize,
) -> Result<FitResult<T>> {
    let dim = model.dim();
    if theta_init.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: theta_init.len(),
        });
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let domain = model.domain();
    if !domain.contains(theta_init) {
        return Err(Error::InvalidArgument("initial point outside the model domain".into()));
    }

    let mut theta = theta_init.to_vec();
    let mut f = checked_value(model, &theta)?;
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = model.gradient(&theta);
    if grad.iter().any(|g| g.is_nan()) {
        return Err(Error::Evaluation {
            theta: theta_f64(&theta),
        });
    }

    while iterations < max_iter {
        let hess = model.hessian(&theta);
        if !hess.is_finite() {
            return Err(Error::Evaluation {
                theta: theta_f64(&theta),
            });
        }
        let chol = hess.cholesky().ok();
        let newton = chol
            .as_ref()
            .map(|c| c.solve(&grad).into_iter().map(|v| -v).collect::<Vec<T>>());

        let gnorm = norm2(&grad);
        let theta_scale = T::one().max(norm2(&theta));
        if gnorm <= tol {
            let small_step = newton
                .as_ref()
                .is_some_and(|d| norm2(d) <= T::lit(NEWTON_STEP_REL_TOL) * theta_scale);
            if small_step {
                converged = true;
                break;
            }
        }

        let mut direction = newton.unwrap_or_else(|| grad.iter().map(|&g| -g).collect());
        let mut slope = dot(&grad, &direction);
        if !(slope < T::zero()) {
            direction = grad.iter().map(|&g| -g).collect();
            slope = -gnorm * gnorm;
        }
        if slope == T::zero() {
            break;
        }

        let noise = T::lit(VALUE_NOISE_REL) * T::one().max(f.abs());
        let in_noise = -slope <= noise;
        let mut t = T::one();
        let mut accepted = None;
        while t > T::lit(MIN_STEP) {
            let cand: Vec<T> = theta.iter().zip(&direction).map(|(&x, &d)| x + t * d).collect();
            if domain.contains(&cand) {
                let fc = checked_value(model, &cand)?;
                if in_noise && fc <= f + noise {
                    let gc = model.gradient(&cand);
                    if norm2(&gc) < gnorm {
                        accepted = Some((cand, fc, Some(gc)));
                        break;
                    }
                } else if fc <= f + T::lit(ARMIJO) * t * slope {
                    accepted = Some((cand, fc, None));
                    break;
                }
                // Near the optimum the Armijo decrease drops below rounding;
                // accept a non-increasing step that shrinks the gradient.
                if fc <= f {
                    let gc = model.gradient(&cand);
                    if norm2(&gc) < gnorm {
                        accepted = Some((cand, fc, Some(gc)));
                        break;
                    }
                }
            }
            t *= T::lit(0.5);
        }

        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        theta = cand;
        f = fc;
        trace.push(f);
        grad = gc.unwrap_or_else(|| model.gradient(&theta));
        if grad.iter().any(|g| g.is_nan()) {
            return Err(Error::Evaluation {
                theta: theta_f64(&theta),
            });
        }
        iterations += 1;
        if norm2(&theta) > T::lit(DIVERGENCE_NORM) {
            log::warn!("find_minimizer: iterates diverging (‖θ‖ > {DIVERGENCE_NORM:e})");
            break;
        }
    }

    if !converged && iterations >= max_iter {
        // The loop may have exited on the iteration cap right after landing on
        // a stationary point; re-test it.
        let gnorm = norm2(&grad);
        if gnorm <= tol {
            if let Ok(c) = model.hessian(&theta).cholesky() {
                let step = norm2(&c.solve(&grad));
                converged = step <= T::lit(NEWTON_STEP_REL_TOL) * T::one().max(norm2(&theta));
            }
        }
    }

    let mut hessian_at_min = model.hessian(&theta);
    hessian_at_min.symmetrize();
    Ok(FitResult {
        theta_n: ParamVector::new(theta)?,
        f_min: f,
        hessian_at_min,
        grad_norm: norm2(&grad),
        iterations,
        converged,
        trace,
    })
}
