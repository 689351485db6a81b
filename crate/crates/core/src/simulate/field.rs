//! Random fields on a torus: Gibbs-sampled Ising spins and exact Gaussian
//! Markov random fields.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::models::{conditional_probability, BinarySite, FieldSample, GmrfFeatures, TorusLattice};
use crate::Real;

pub const MIN_BURN_SWEEPS: usize = 50;
pub const DEFAULT_BURN_SWEEPS: usize = 500;
/// Couplings at or above this magnitude on a square lattice are close to the
/// critical point, where Gibbs mixing collapses.
pub const ISING_COUPLING_WARNING: f64 = 0.4;
pub const MAX_GMRF_SITES: usize = 4096;

/// Systematic-scan Gibbs sampler for the Ising field with conditionals
/// `P(y_i = +1 | y_{−i}) = σ(2(θ₁ + θ₂ Σ_{j~i} y_j))`, started from i.i.d.
/// uniform spins. Runs `sweeps` full scans and returns the final field; the
/// first `burn_sweeps` are the nominal burn-in and only the final state is
/// kept, so the output is approximately stationary.
pub fn gen_ising_gibbs<T: Real, R: Rng + ?Sized>(
    lattice: &TorusLattice,
    theta_true: [f64; 2],
    sweeps: usize,
    burn_sweeps: usize,
    rng: &mut R,
) -> Result<FieldSample<T>> {
    if burn_sweeps < MIN_BURN_SWEEPS || sweeps <= burn_sweeps {
        return Err(Error::InvalidArgument(format!(
            "Gibbs needs sweeps > burn_sweeps >= {MIN_BURN_SWEEPS}"
        )));
    }
    if lattice.m == 2 && theta_true[1].abs() >= ISING_COUPLING_WARNING {
        log::warn!(
            "Ising coupling {} is near or above the critical value; Gibbs output may be far from stationary",
            theta_true[1]
        );
    }
    let theta = [T::lit(theta_true[0]), T::lit(theta_true[1])];
    let values = (0..lattice.sites())
        .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
        .collect();
    let mut field = FieldSample::new(lattice.clone(), values)?;
    for _ in 0..sweeps {
        for site in 0..lattice.sites() {
            let p = conditional_probability(&theta, BinarySite::Ising { field: &field, site });
            field.values[site] = if T::lit(rng.random::<f64>()) < p {
                T::one()
            } else {
                -T::one()
            };
        }
    }
    Ok(field)
}

/// Exact sampler for the GMRF whose conditionals are
/// `N(θᵀφ_i(y), γ⁻¹)`, i.e. joint precision `Q = γ(I − B)`.
#[derive(Clone, Debug)]
pub struct GmrfSampler<T: Real> {
    lattice: TorusLattice,
    precision: Matrix<T>,
    chol: Cholesky<T>,
}

impl<T: Real> GmrfSampler<T> {
    /// Builds `Q` and factors it. `θ` is laid out as in the pseudolikelihood
    /// features; per-neighbor coefficients must agree on opposite directions
    /// for `B` to be symmetric.
    pub fn new(lattice: &TorusLattice, features: GmrfFeatures, theta: &[T], gamma: T) -> Result<Self> {
        let n = lattice.sites();
        if n > MAX_GMRF_SITES {
            return Err(Error::InvalidArgument(format!(
                "exact GMRF sampling supports at most {MAX_GMRF_SITES} sites, got {n}"
            )));
        }
        if !(gamma > T::zero()) {
            return Err(Error::InvalidArgument("GMRF precision must be positive".into()));
        }
        let m = lattice.m;
        if theta.len() != features.dim(m) {
            return Err(Error::DimensionMismatch {
                expected: features.dim(m),
                got: theta.len(),
            });
        }
        let coefficient = |direction: usize| match features {
            GmrfFeatures::Isotropic => theta[0],
            GmrfFeatures::Axial => theta[direction / 2],
            GmrfFeatures::PerNeighbor => theta[direction],
        };
        if features == GmrfFeatures::PerNeighbor {
            for k in 0..m {
                if theta[2 * k] != theta[2 * k + 1] {
                    return Err(Error::InvalidArgument(format!(
                        "GMRF coefficients along axis {k} differ between directions; B must be symmetric"
                    )));
                }
            }
        }
        let mut q = Matrix::identity(n);
        for i in 0..n {
            for (dir, j) in lattice.neighbors(i).into_iter().enumerate() {
                q[(i, j)] -= coefficient(dir);
            }
        }
        let q = q.scale(gamma);
        let chol = q.cholesky().map_err(|_| Error::InvalidJoint)?;
        Ok(Self {
            lattice: lattice.clone(),
            precision: q,
            chol,
        })
    }

    pub fn precision(&self) -> &Matrix<T> {
        &self.precision
    }

    /// `Q⁻¹`.
    pub fn covariance(&self) -> Matrix<T> {
        self.chol.inverse()
    }

    /// `y = L⁻ᵀ z` with `Q = L Lᵀ`, so `Cov(y) = Q⁻¹`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FieldSample<T>> {
        let z: Vec<T> = (0..self.lattice.sites())
            .map(|_| T::lit(rng.sample(StandardNormal)))
            .collect();
        FieldSample::new(self.lattice.clone(), self.chol.solve_upper(&z))
    }
}

pub fn gen_gmrf<T: Real, R: Rng + ?Sized>(
    lattice: &TorusLattice,
    features: GmrfFeatures,
    theta_true: &[T],
    gamma: T,
    rng: &mut R,
) -> Result<FieldSample<T>> {
    GmrfSampler::new(lattice, features, theta_true, gamma)?.sample(rng)
}
