//! Central finite-difference stencils.

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Real;

/// Default relative steps at double precision.
pub const GRADIENT_STEP: f64 = 1e-5;
pub const HESSIAN_STEP: f64 = 1e-4;
pub const THIRD_STEP: f64 = 1e-3;

/// Per-coordinate steps `h · max(1, |θ_j|)`.
pub fn relative_steps<T: Real>(theta: &[T], h: T) -> Vec<T> {
    theta.iter().map(|t| h * T::one().max(t.abs())).collect()
}

fn shifted<T: Real>(theta: &[T], moves: &[(usize, T)]) -> Vec<T> {
    let mut p = theta.to_vec();
    for &(j, d) in moves {
        p[j] += d;
    }
    p
}

fn check_inside<T: Real>(domain: Option<&DomainBox<T>>, point: &[T], coordinate: usize) -> Result<()> {
    match domain {
        Some(d) if !d.contains(point) => Err(Error::DomainViolation { coordinate }),
        _ => Ok(()),
    }
}

/// `(f(θ + h e_j) − f(θ − h e_j)) / 2h` for every coordinate with a common step.
pub fn central_gradient<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    theta: &[T],
    h: T,
    domain: Option<&DomainBox<T>>,
) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    central_gradient_steps(f, theta, &vec![h; theta.len()], domain)
}

pub fn central_gradient_steps<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    theta: &[T],
    steps: &[T],
    domain: Option<&DomainBox<T>>,
) -> Result<Vec<T>> {
    let two = T::lit(2.0);
    (0..theta.len())
        .map(|j| {
            let h = steps[j];
            let plus = shifted(theta, &[(j, h)]);
            let minus = shifted(theta, &[(j, -h)]);
            check_inside(domain, &plus, j)?;
            check_inside(domain, &minus, j)?;
            Ok((f(&plus) - f(&minus)) / (two * h))
        })
        .collect()
}

/// Second-order central Hessian stencil, symmetrized.
pub fn central_hessian<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    theta: &[T],
    h: T,
    domain: Option<&DomainBox<T>>,
) -> Result<Matrix<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    central_hessian_steps(f, theta, &vec![h; theta.len()], domain)
}

pub fn central_hessian_steps<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    theta: &[T],
    steps: &[T],
    domain: Option<&DomainBox<T>>,
) -> Result<Matrix<T>> {
    let d = theta.len();
    let mut hess = Matrix::zeros(d, d);
    let f0 = f(theta);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    for i in 0..d {
        let hi = steps[i];
        let p = shifted(theta, &[(i, hi)]);
        let m = shifted(theta, &[(i, -hi)]);
        check_inside(domain, &p, i)?;
        check_inside(domain, &m, i)?;
        hess[(i, i)] = (f(&p) - two * f0 + f(&m)) / (hi * hi);
        for j in (i + 1)..d {
            let hj = steps[j];
            let pp = shifted(theta, &[(i, hi), (j, hj)]);
            let pm = shifted(theta, &[(i, hi), (j, -hj)]);
            let mp = shifted(theta, &[(i, -hi), (j, hj)]);
            let mm = shifted(theta, &[(i, -hi), (j, -hj)]);
            for q in [&pp, &pm, &mp, &mm] {
                check_inside(domain, q, j)?;
            }
            let v = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (four * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess.symmetrize();
    Ok(hess)
}

/// Third-derivative tensor `T[j][k][l]` by central differences of an
/// analytic Hessian along each coordinate `l`.
pub fn third_tensor_from_hessian<T: Real, H: Fn(&[T]) -> Matrix<T>>(hessian: &H, theta: &[T], h: T) -> Vec<Matrix<T>> {
    let two = T::lit(2.0);
    (0..theta.len())
        .map(|l| {
            let hp = hessian(&shifted(theta, &[(l, h)]));
            let hm = hessian(&shifted(theta, &[(l, -h)]));
            hp.sub(&hm).scale(T::one() / (two * h))
        })
        .collect()
}

pub fn tensor_frobenius<T: Real>(slices: &[Matrix<T>]) -> T {
    slices
        .iter()
        .map(|m| {
            let n = m.frobenius_norm();
            n * n
        })
        .sum::<T>()
        .sqrt()
}
