use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// A finite parameter vector `θ ∈ R^D`, `D >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector<T>(Vec<T>);

impl<T: Real> ParamVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("parameter vector must have D >= 1".into()));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "parameter coordinate {j} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Deref for ParamVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Axis-aligned open box `{θ : lower < θ < upper}`; infinite bounds allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> DomainBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("domain box must have D >= 1".into()));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || !(l < u) {
                return Err(Error::InvalidArgument(format!(
                    "domain box coordinate {j}: lower {l} is not below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// All of `R^dim`.
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![T::neg_infinity(); dim],
            upper: vec![T::infinity(); dim],
        }
    }

    /// The cube `[center - r, center + r]` on every axis.
    pub fn around(center: &[T], radius: T) -> Result<Self> {
        Self::new(
            center.iter().map(|&c| c - radius).collect(),
            center.iter().map(|&c| c + radius).collect(),
        )
    }

    pub fn cube(dim: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Strict membership in the open box.
    pub fn contains(&self, theta: &[T]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&t, (&l, &u))| t > l && t < u)
    }

    pub fn widths(&self) -> Vec<T> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| u - l).collect()
    }

    pub fn volume(&self) -> T {
        self.widths().into_iter().fold(T::one(), |a, w| a * w)
    }

    /// Intersection with another box of the same dimension.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.lower.iter().zip(&other.lower).map(|(&a, &b)| a.max(b)).collect(),
            self.upper.iter().zip(&other.upper).map(|(&a, &b)| a.min(b)).collect(),
        )
    }

    /// Box shrunk by `margin` on every side (bounded coordinates only).
    pub fn shrink(&self, margin: T) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|&l| l + margin).collect(),
            self.upper.iter().map(|&u| u - margin).collect(),
        )
    }

    pub fn translate(&self, shift: &[T]) -> Self {
        Self {
            lower: self.lower.iter().zip(shift).map(|(&l, &s)| l + s).collect(),
            upper: self.upper.iter().zip(shift).map(|(&u, &s)| u + s).collect(),
        }
    }

    /// Low-discrepancy points inside a bounded box: a Halton sequence with a
    /// seed-dependent Cranley–Patterson rotation.
    pub fn quasi_random_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<T>>> {
        if !self.is_bounded() {
            return Err(Error::UnboundedBox("quasi-random probes need finite bounds".into()));
        }
        let d = self.dim();
        let shifts: Vec<f64> = {
            use rand::Rng;
            let mut rng = crate::rng::stream_rng(seed, 0x4841_4C54);
            (0..d).map(|_| rng.random::<f64>()).collect()
        };
        let widths = self.widths();
        Ok((0..count)
            .map(|k| {
                (0..d)
                    .map(|j| {
                        let mut u = radical_inverse(k as u64 + 1, PRIMES[j % PRIMES.len()]) + shifts[j];
                        if u >= 1.0 {
                            u -= 1.0;
                        }
                        // keep strictly inside the open box
                        let u = u.clamp(1e-9, 1.0 - 1e-9);
                        self.lower[j] + widths[j] * T::lit(u)
                    })
                    .collect()
            })
            .collect())
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += f * (k % base) as f64;
        k /= base;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_vector_rejects_nonfinite() {
        assert!(ParamVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(ParamVector::<f64>::new(vec![]).is_err());
        assert_eq!(ParamVector::new(vec![1.0_f64, 2.0]).unwrap().dim(), 2);
    }

    #[test]
    fn box_membership_is_open() {
        let b = DomainBox::new(vec![0.0_f64], vec![1.0]).unwrap();
        assert!(b.contains(&[0.5]));
        assert!(!b.contains(&[0.0]));
        assert!(!b.contains(&[1.0]));
        assert!(DomainBox::new(vec![1.0_f64], vec![1.0]).is_err());
        assert!(DomainBox::<f64>::unbounded(3).contains(&[1e300, -1e300, 0.0]));
    }

    #[test]
    fn halton_points_stay_inside() {
        let b = DomainBox::new(vec![-1.0_f64, 2.0], vec![1.0, 3.0]).unwrap();
        let pts = b.quasi_random_points(200, 3).unwrap();
        assert!(pts.iter().all(|p| b.contains(p)));
        assert_eq!(pts, b.quasi_random_points(200, 3).unwrap());
        assert!(DomainBox::<f64>::unbounded(1).quasi_random_points(1, 0).is_err());
    }
}
