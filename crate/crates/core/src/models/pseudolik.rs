//! Pseudolikelihood objectives for Markov random fields: the Gaussian MRF,
//! the Ising model on a torus, and the fully visible Boltzmann machine.
//!
//! Each full conditional is a one-parameter exponential family in
//! `η = θᵀφ_i(y)` with `φ_i` independent of `y_i`, so every objective is a
//! [`LinearPredictorObjective`] over per-site feature rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::models::expfam::ExpFam1P;
use crate::models::linear::LinearPredictorObjective;
use crate::scalar::sigmoid;
use crate::Real;

/// `Z_L^m` with periodic boundaries. Site `i` has coordinates
/// `c_k = (i / L^k) mod L`, axis 0 varying fastest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusLattice {
    pub m: usize,
    #[serde(rename = "L")]
    pub side: usize,
}

impl TorusLattice {
    pub fn new(m: usize, side: usize) -> Result<Self> {
        if m == 0 || side < 2 {
            return Err(Error::InvalidArgument(format!(
                "torus needs m >= 1 and L >= 2 (got m = {m}, L = {side})"
            )));
        }
        side.checked_pow(m as u32)
            .ok_or_else(|| Error::InvalidArgument("lattice too large".into()))?;
        Ok(Self { m, side })
    }

    pub fn sites(&self) -> usize {
        self.side.pow(self.m as u32)
    }

    pub fn coords(&self, i: usize) -> Vec<usize> {
        let mut rest = i;
        (0..self.m)
            .map(|_| {
                let c = rest % self.side;
                rest /= self.side;
                c
            })
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.side + c)
    }

    /// The `2m` neighbors of site `i`, ordered `(+e_0, −e_0, +e_1, −e_1, ...)`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.m);
        let mut stride = 1;
        for _ in 0..self.m {
            let c = (i / stride) % self.side;
            let up = (c + 1) % self.side;
            let down = (c + self.side - 1) % self.side;
            out.push(i - c * stride + up * stride);
            out.push(i - c * stride + down * stride);
            stride *= self.side;
        }
        out
    }
}

/// Values of a random field on the sites of a torus.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct FieldSample<T: Real> {
    pub lattice: TorusLattice,
    pub values: Vec<T>,
}

impl<T: Real> FieldSample<T> {
    pub fn new(lattice: TorusLattice, values: Vec<T>) -> Result<Self> {
        if values.len() != lattice.sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.sites(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("field contains non-finite values".into()));
        }
        Ok(Self { lattice, values })
    }

    pub fn is_spin_field(&self) -> bool {
        self.values.iter().all(|&v| v == T::one() || v == -T::one())
    }

    pub fn neighbor_sum(&self, i: usize) -> T {
        self.lattice.neighbors(i).into_iter().map(|j| self.values[j]).sum()
    }
}

/// How GMRF neighbor values are grouped into features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GmrfFeatures {
    /// `D = 1`: sum of all `2m` neighbors.
    Isotropic,
    /// `D = m`: per-axis sums of the two neighbors along each axis.
    Axial,
    /// `D = 2m`: one coordinate per neighbor direction.
    PerNeighbor,
}

impl GmrfFeatures {
    pub fn dim(&self, m: usize) -> usize {
        match self {
            Self::Isotropic => 1,
            Self::Axial => m,
            Self::PerNeighbor => 2 * m,
        }
    }

    fn row<T: Real>(&self, field: &FieldSample<T>, i: usize) -> Vec<T> {
        let nb = field.lattice.neighbors(i);
        match self {
            Self::Isotropic => vec![nb.iter().map(|&j| field.values[j]).sum()],
            Self::Axial => nb
                .chunks(2)
                .map(|pair| field.values[pair[0]] + field.values[pair[1]])
                .collect(),
            Self::PerNeighbor => nb.iter().map(|&j| field.values[j]).collect(),
        }
    }
}

/// Gaussian MRF pseudolikelihood with conditional `N(θᵀφ_i(y), γ⁻¹)`:
/// `f_n = (1/n) Σ [½γ(θᵀx_i)² − γ(θᵀx_i) y_i]`.
///
/// `isotropic = true` uses a single summed-neighbor feature, otherwise one
/// coordinate per neighbor.
pub fn gmrf_pseudolik<T: Real>(
    field: &FieldSample<T>,
    precision: T,
    isotropic: bool,
) -> Result<LinearPredictorObjective<T>> {
    let features = if isotropic {
        GmrfFeatures::Isotropic
    } else {
        GmrfFeatures::PerNeighbor
    };
    gmrf_pseudolik_with(field, precision, features)
}

pub fn gmrf_pseudolik_with<T: Real>(
    field: &FieldSample<T>,
    precision: T,
    features: GmrfFeatures,
) -> Result<LinearPredictorObjective<T>> {
    if !(precision > T::zero()) {
        return Err(Error::InvalidArgument("GMRF precision must be positive".into()));
    }
    let family = ExpFam1P::Gaussian {
        sigma2: T::one() / precision,
    };
    let n = field.lattice.sites();
    let d = features.dim(field.lattice.m);
    let mut design = Vec::with_capacity(n * d);
    for i in 0..n {
        design.extend(features.row(field, i));
    }
    let stats = field.values.iter().map(|&y| family.sufficient_statistic(y)).collect();
    Ok(LinearPredictorObjective::new(
        Matrix::from_row_major(n, d, design)?,
        stats,
        family,
        format!("gmrf-pseudolik({features:?})"),
    ))
}

/// Ising feature row `X_i = (1, Σ_{j∈N_i} y_j)`.
pub fn ising_features<T: Real>(field: &FieldSample<T>, i: usize) -> [T; 2] {
    [T::one(), field.neighbor_sum(i)]
}

/// Ising pseudolikelihood, `θ = (θ_1, θ_2)` for (field, coupling).
pub fn ising_pseudolik<T: Real>(field: &FieldSample<T>) -> Result<LinearPredictorObjective<T>> {
    if !field.is_spin_field() {
        return Err(Error::Data("Ising field values must be -1 or +1".into()));
    }
    let n = field.lattice.sites();
    let mut design = Vec::with_capacity(2 * n);
    for i in 0..n {
        design.extend(ising_features(field, i));
    }
    Ok(LinearPredictorObjective::new(
        Matrix::from_row_major(n, 2, design)?,
        field.values.clone(),
        ExpFam1P::PlusMinusBinary,
        "ising-pseudolik",
    ))
}

/// Packing `θ = (b_1..b_d, A_12, A_13, .., A_1d, A_23, ..)` with `A` strictly
/// upper triangular, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaPacking {
    pub d: usize,
}

impl ThetaPacking {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("Boltzmann machine needs d >= 2".into()));
        }
        Ok(Self { d })
    }

    pub fn dim(&self) -> usize {
        self.d + self.d * (self.d - 1) / 2
    }

    /// Position of `A_kl` (`k < l`) inside `θ`.
    pub fn pair_index(&self, k: usize, l: usize) -> usize {
        debug_assert!(k < l && l < self.d);
        self.d + k * (2 * self.d - k - 1) / 2 + (l - k - 1)
    }

    pub fn pack<T: Real>(&self, b: &[T], a: &Matrix<T>) -> Result<Vec<T>> {
        if b.len() != self.d || a.rows() != self.d || a.cols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: b.len(),
            });
        }
        let mut theta = b.to_vec();
        for k in 0..self.d {
            for l in (k + 1)..self.d {
                theta.push(a[(k, l)]);
            }
        }
        Ok(theta)
    }

    pub fn unpack<T: Real>(&self, theta: &[T]) -> Result<(Vec<T>, Matrix<T>)> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        let b = theta[..self.d].to_vec();
        let mut a = Matrix::zeros(self.d, self.d);
        for k in 0..self.d {
            for l in (k + 1)..self.d {
                a[(k, l)] = theta[self.pair_index(k, l)];
            }
        }
        Ok((b, a))
    }

    /// `φ_j(y) ∈ {−1, 0, 1}^D`, so that `θᵀφ_j(y) = b_j + Σ_{k≠j} A_{jk} y_k`
    /// (reading `A` symmetrically). Independent of `y_j`.
    pub fn features<T: Real>(&self, y: &[T], j: usize) -> Vec<T> {
        let mut phi = vec![T::zero(); self.dim()];
        phi[j] = T::one();
        for k in 0..self.d {
            if k < j {
                phi[self.pair_index(k, j)] = y[k];
            } else if k > j {
                phi[self.pair_index(j, k)] = y[k];
            }
        }
        phi
    }
}

/// Boltzmann machine pseudolikelihood over i.i.d. `±1` vectors of length `d`.
pub fn boltzmann_pseudolik<T: Real>(samples: &[Vec<T>]) -> Result<LinearPredictorObjective<T>> {
    boltzmann_objective(samples, None)
}

/// Same objective with fractional counts per configuration, e.g. an exact
/// probability table.
pub fn boltzmann_pseudolik_weighted<T: Real>(samples: &[Vec<T>], weights: &[T]) -> Result<LinearPredictorObjective<T>> {
    if weights.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
        return Err(Error::Data("Boltzmann weights must be finite and non-negative".into()));
    }
    boltzmann_objective(samples, Some(weights))
}

fn boltzmann_objective<T: Real>(samples: &[Vec<T>], weights: Option<&[T]>) -> Result<LinearPredictorObjective<T>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Data("Boltzmann pseudolikelihood needs at least one sample".into()))?;
    let packing = ThetaPacking::new(first.len())?;
    let d = packing.d;
    let dim = packing.dim();
    let mut design = Vec::with_capacity(samples.len() * d * dim);
    let mut stats = Vec::with_capacity(samples.len() * d);
    let mut groups = Vec::with_capacity(samples.len());
    for (i, y) in samples.iter().enumerate() {
        if y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: y.len(),
            });
        }
        if y.iter().any(|&v| v != T::one() && v != -T::one()) {
            return Err(Error::Data("Boltzmann sample values must be -1 or +1".into()));
        }
        for j in 0..d {
            design.extend(packing.features(y, j));
            stats.push(y[j]);
        }
        groups.push(i * d..(i + 1) * d);
    }
    let x = Matrix::from_row_major(samples.len() * d, dim, design)?;
    let obj = LinearPredictorObjective::new(x, stats, ExpFam1P::PlusMinusBinary, "boltzmann-pseudolik");
    Ok(match weights {
        None => obj.with_groups(groups, T::from_count(samples.len())),
        Some(w) => {
            let row_w = w.iter().flat_map(|&wi| std::iter::repeat_n(wi, d)).collect();
            obj.with_weights(row_w, w.iter().copied().sum())
        }
    })
}

/// `P(y = +1 | η) = e^η / (e^η + e^{−η})` for `±1` conditionals.
pub fn plus_one_probability<T: Real>(eta: T) -> T {
    sigmoid(T::lit(2.0) * eta)
}

/// Context for a single full conditional of a binary field.
pub enum BinarySite<'a, T: Real> {
    Ising {
        field: &'a FieldSample<T>,
        site: usize,
    },
    Boltzmann {
        packing: ThetaPacking,
        config: &'a [T],
        node: usize,
    },
}

/// `P(y_i = +1 | y_{−i})` under `θ`.
pub fn conditional_probability<T: Real>(theta: &[T], site: BinarySite<'_, T>) -> T {
    let eta = match site {
        BinarySite::Ising { field, site } => dot(theta, &ising_features(field, site)),
        BinarySite::Boltzmann { packing, config, node } => dot(theta, &packing.features(config, node)),
    };
    plus_one_probability(eta)
}
