//! Distance of the rescaled posterior `x = √n(θ − θ_n)` from its normal limit
//! `N(0, H₀⁻¹)`, and posterior concentration around a point.

use crate::error::{Error, Result};
use crate::laplace::normal_log_density;
use crate::linalg::{mean_and_covariance, norm2, Matrix};
use crate::sampler::{DrawMatrix, GridDensity};
use crate::Real;

/// The grid must hold at least this much of the limiting normal's mass.
pub const MIN_NORMAL_COVERAGE: f64 = 0.9999;
pub const MIN_MOMENT_DRAWS: usize = 1000;

/// Total variation between the grid posterior and `N(0, H₀⁻¹)` in rescaled
/// coordinates. Normal mass falling outside the grid counts fully towards the
/// distance.
pub fn tv_to_normal_limit<T: Real>(grid: &GridDensity<T>, theta_n: &[T], n: usize, h0: &Matrix<T>) -> Result<T> {
    let d = grid.dim();
    if theta_n.len() != d || h0.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta_n.len(),
        });
    }
    let cov = h0.inverse_spd()?;
    let zero = vec![T::zero(); d];
    let sqrt_n = T::from_count(n).sqrt();
    let vol_x = grid.cell_volume() * sqrt_n.powi(d as i32);
    let mut normal_mass = T::zero();
    let mut diff = T::zero();
    for c in 0..grid.cell_count() {
        let x: Vec<T> = grid
            .center(c)
            .iter()
            .zip(theta_n)
            .map(|(&t, &m)| sqrt_n * (t - m))
            .collect();
        let q = normal_log_density(&zero, &cov, &x)?.exp() * vol_x;
        normal_mass += q;
        diff += (grid.masses[c] - q).abs();
    }
    if normal_mass.as_f64() < MIN_NORMAL_COVERAGE {
        return Err(Error::GridTooSmall {
            covered: normal_mass.as_f64(),
        });
    }
    let uncovered = (T::one() - normal_mass).max(T::zero());
    let tv = T::lit(0.5) * (diff + uncovered);
    Ok(tv.max(T::zero()).min(T::one()))
}

/// `(‖mean(x)‖, ‖cov(x) − H₀⁻¹‖_F)` for `x = √n(θ − θ_n)`; the surrogate for
/// total variation when `D > 2`.
pub fn moment_gap_to_normal<T: Real>(draws: &DrawMatrix<T>, theta_n: &[T], n: usize, h0: &Matrix<T>) -> Result<(T, T)> {
    if draws.len() < MIN_MOMENT_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "moment gaps need at least {MIN_MOMENT_DRAWS} draws"
        )));
    }
    let d = draws.dim();
    if theta_n.len() != d || h0.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta_n.len(),
        });
    }
    let sqrt_n = T::from_count(n).sqrt();
    let mut x = draws.draws.clone();
    for s in 0..x.rows() {
        for (v, &m) in x.row_mut(s).iter_mut().zip(theta_n) {
            *v = sqrt_n * (*v - m);
        }
    }
    let (mean, cov) = mean_and_covariance(&x);
    let target = h0.inverse_spd()?;
    Ok((norm2(&mean), cov.sub(&target).frobenius_norm()))
}

pub enum MassSource<'a, T: Real> {
    Draws(&'a DrawMatrix<T>),
    Grid(&'a GridDensity<T>),
}

/// Posterior mass of the Euclidean ball `B_ε(θ₀)`.
///
/// Grid cells cut by the sphere contribute their overlap fraction: exact in
/// one dimension, by 16×16 supersampling in two.
pub fn concentration_mass<T: Real>(source: MassSource<'_, T>, theta0: &[T], eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("ball radius must be positive".into()));
    }
    match source {
        MassSource::Draws(dm) => {
            if theta0.len() != dm.dim() {
                return Err(Error::DimensionMismatch {
                    expected: dm.dim(),
                    got: theta0.len(),
                });
            }
            let inside = (0..dm.len()).filter(|&s| distance(dm.row(s), theta0) <= eps).count();
            Ok(T::from_count(inside) / T::from_count(dm.len()))
        }
        MassSource::Grid(g) => {
            if theta0.len() != g.dim() {
                return Err(Error::DimensionMismatch {
                    expected: g.dim(),
                    got: theta0.len(),
                });
            }
            let widths: Vec<T> = (0..g.dim())
                .map(|k| (g.domain.upper()[k] - g.domain.lower()[k]) / T::from_count(g.resolution[k]))
                .collect();
            let mut mass = T::zero();
            for c in 0..g.cell_count() {
                let center = g.center(c);
                mass += g.masses[c] * ball_fraction(&center, &widths, theta0, eps);
            }
            Ok(mass.min(T::one()))
        }
    }
}

fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

fn ball_fraction<T: Real>(center: &[T], widths: &[T], theta0: &[T], eps: T) -> T {
    let half = T::lit(0.5);
    let (mut near, mut far) = (T::zero(), T::zero());
    for k in 0..center.len() {
        let off = (center[k] - theta0[k]).abs();
        let n = (off - half * widths[k]).max(T::zero());
        let f = off + half * widths[k];
        near += n * n;
        far += f * f;
    }
    if far.sqrt() <= eps {
        return T::one();
    }
    if near.sqrt() > eps {
        return T::zero();
    }
    if center.len() == 1 {
        let lo = center[0] - half * widths[0];
        let hi = center[0] + half * widths[0];
        let a = lo.max(theta0[0] - eps);
        let b = hi.min(theta0[0] + eps);
        return ((b - a) / widths[0]).max(T::zero());
    }
    const SUB: usize = 16;
    let mut inside = 0usize;
    let total = SUB.pow(center.len() as u32);
    let mut point = vec![T::zero(); center.len()];
    for idx in 0..total {
        let mut rest = idx;
        for k in 0..center.len() {
            let i = rest % SUB;
            rest /= SUB;
            let u = (T::from_count(i) + half) / T::from_count(SUB) - half;
            point[k] = center[k] + u * widths[k];
        }
        if distance(&point, theta0) <= eps {
            inside += 1;
        }
    }
    T::from_count(inside) / T::from_count(total)
}
