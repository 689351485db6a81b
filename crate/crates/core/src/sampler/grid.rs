//! Midpoint-rule representation of the posterior on a box, for `D ≤ 2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::posterior::GeneralizedPosterior;
use crate::scalar::log_sum_exp;
use crate::Real;

pub const MIN_RESOLUTION: usize = 32;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct GridDensity<T: Real> {
    pub domain: DomainBox<T>,
    /// Cells per axis.
    pub resolution: Vec<usize>,
    /// Unnormalized log posterior at each cell midpoint, axis 0 fastest.
    pub log_density: Vec<T>,
    /// Normalized cell masses.
    pub masses: Vec<T>,
    /// `log ∫ exp(−n f_n) π` by the midpoint rule.
    pub log_z_grid: T,
}

pub fn grid_density<T: Real>(
    gp: &GeneralizedPosterior<T>,
    domain: &DomainBox<T>,
    resolution: usize,
) -> Result<GridDensity<T>> {
    let d = gp.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if domain.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: domain.dim(),
        });
    }
    if !domain.is_bounded() {
        return Err(Error::UnboundedBox("grid box must be bounded".into()));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least {MIN_RESOLUTION}"
        )));
    }
    let res = vec![resolution; d];
    let cells = resolution.pow(d as u32);
    let log_density = (0..cells)
        .into_par_iter()
        .map(|c| gp.unnormalized_log_posterior(&cell_center(domain, &res, c)))
        .collect::<Result<Vec<T>>>()?;
    let lse = log_sum_exp(&log_density);
    if !lse.is_finite() {
        return Err(Error::InvalidArgument(
            "posterior has no finite mass on the grid box".into(),
        ));
    }
    let masses = log_density.iter().map(|&l| (l - lse).exp()).collect();
    let log_z_grid = lse + cell_volume(domain, &res).ln();
    Ok(GridDensity {
        domain: domain.clone(),
        resolution: res,
        log_density,
        masses,
        log_z_grid,
    })
}

fn cell_center<T: Real>(domain: &DomainBox<T>, res: &[usize], mut c: usize) -> Vec<T> {
    let mut x = Vec::with_capacity(res.len());
    for (k, &r) in res.iter().enumerate() {
        let i = c % r;
        c /= r;
        let w = (domain.upper()[k] - domain.lower()[k]) / T::from_count(r);
        x.push(domain.lower()[k] + (T::from_count(i) + T::lit(0.5)) * w);
    }
    x
}

fn cell_volume<T: Real>(domain: &DomainBox<T>, res: &[usize]) -> T {
    res.iter()
        .enumerate()
        .map(|(k, &r)| (domain.upper()[k] - domain.lower()[k]) / T::from_count(r))
        .fold(T::one(), |a, b| a * b)
}

impl<T: Real> GridDensity<T> {
    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn cell_count(&self) -> usize {
        self.masses.len()
    }

    pub fn center(&self, cell: usize) -> Vec<T> {
        cell_center(&self.domain, &self.resolution, cell)
    }

    pub fn cell_volume(&self) -> T {
        cell_volume(&self.domain, &self.resolution)
    }

    /// Normalized density at the midpoint of `cell`.
    pub fn density(&self, cell: usize) -> T {
        self.masses[cell] / self.cell_volume()
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim()];
        for (c, &p) in self.masses.iter().enumerate() {
            for (mk, xk) in m.iter_mut().zip(self.center(c)) {
                *mk += p * xk;
            }
        }
        m
    }

    pub fn covariance(&self) -> Matrix<T> {
        let mean = self.mean();
        let mut cov = Matrix::zeros(self.dim(), self.dim());
        for (c, &p) in self.masses.iter().enumerate() {
            let r: Vec<T> = self.center(c).iter().zip(&mean).map(|(x, m)| *x - *m).collect();
            cov.add_outer(&r, &r, p);
        }
        cov
    }

    /// Grid mass of cells whose midpoint satisfies `pred`.
    pub fn mass_where(&self, pred: impl Fn(&[T]) -> bool) -> T {
        self.masses
            .iter()
            .enumerate()
            .filter(|(c, _)| pred(&self.center(*c)))
            .map(|(_, &p)| p)
            .sum()
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        Ok(())
    }

    /// Posterior CDF for `D = 1`, linear within cells.
    pub fn cdf(&self, x: T) -> Result<T> {
        self.require_1d()?;
        let lo = self.domain.lower()[0];
        let w = (self.domain.upper()[0] - lo) / T::from_count(self.resolution[0]);
        let pos = (x - lo) / w;
        if pos <= T::zero() {
            return Ok(T::zero());
        }
        let full = pos.floor().to_usize().unwrap_or(usize::MAX).min(self.masses.len());
        let mut acc: T = self.masses[..full].iter().copied().sum();
        if full < self.masses.len() {
            acc += self.masses[full] * (pos - T::from_count(full));
        }
        Ok(acc.min(T::one()))
    }

    /// Inverse of [`GridDensity::cdf`] for `D = 1`.
    pub fn quantile(&self, p: T) -> Result<T> {
        self.require_1d()?;
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidArgument("quantile level must lie in [0, 1]".into()));
        }
        let lo = self.domain.lower()[0];
        let w = (self.domain.upper()[0] - lo) / T::from_count(self.resolution[0]);
        let mut acc = T::zero();
        for (i, &m) in self.masses.iter().enumerate() {
            if acc + m >= p && m > T::zero() {
                return Ok(lo + (T::from_count(i) + (p - acc) / m) * w);
            }
            acc += m;
        }
        Ok(self.domain.upper()[0])
    }
}
