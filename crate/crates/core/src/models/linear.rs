//! Objectives of the form `f(θ) = (1/N) Σ_r w_r [κ(θᵀx_r) − s_r θᵀx_r]`.
//!
//! GLMs, the Ising and GMRF pseudolikelihoods, and the Boltzmann machine
//! pseudolikelihood are all instances: they differ only in how the rows `x_r`
//! and responses `s_r` are built from the data.

use std::ops::Range;

use crate::domain::DomainBox;
use crate::linalg::{dot, Matrix};
use crate::model::ObjectiveModel;
use crate::models::expfam::ExpFam1P;
use crate::Real;

#[derive(Clone, Debug)]
pub struct LinearPredictorObjective<T: Real> {
    design: Matrix<T>,
    /// Sufficient statistic `s(y_r)` per row.
    stats: Vec<T>,
    /// Row weights; `None` means all ones.
    weights: Option<Vec<T>>,
    /// `N` in the `1/N` normalization.
    normalizer: T,
    /// Rows making up each component `c_g`; `None` means one row per component.
    groups: Option<Vec<Range<usize>>>,
    family: ExpFam1P<T>,
    name: String,
}

impl<T: Real> LinearPredictorObjective<T> {
    /// Unit weights, one component per row, `N` = number of rows.
    pub fn new(design: Matrix<T>, stats: Vec<T>, family: ExpFam1P<T>, name: impl Into<String>) -> Self {
        assert_eq!(design.rows(), stats.len(), "one statistic per design row");
        let normalizer = T::from_count(design.rows().max(1));
        Self {
            design,
            stats,
            weights: None,
            normalizer,
            groups: None,
            family,
            name: name.into(),
        }
    }

    pub fn with_weights(mut self, weights: Vec<T>, normalizer: T) -> Self {
        assert_eq!(weights.len(), self.design.rows());
        self.weights = Some(weights);
        self.normalizer = normalizer;
        self
    }

    pub fn with_groups(mut self, groups: Vec<Range<usize>>, normalizer: T) -> Self {
        self.groups = Some(groups);
        self.normalizer = normalizer;
        self
    }

    pub fn design(&self) -> &Matrix<T> {
        &self.design
    }

    pub fn stats(&self) -> &[T] {
        &self.stats
    }

    pub fn family(&self) -> ExpFam1P<T> {
        self.family
    }

    #[inline]
    fn weight(&self, r: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[r])
    }

    fn accumulate_gradient(&self, rows: Range<usize>, theta: &[T], out: &mut [T]) {
        for r in rows {
            let x = self.design.row(r);
            let eta = dot(theta, x);
            let c = self.weight(r) * (self.family.kappa1(eta) - self.stats[r]);
            for (o, &xj) in out.iter_mut().zip(x) {
                *o += c * xj;
            }
        }
    }

    /// Bound on `‖f'''‖_F` over `region`: each tensor entry is bounded by
    /// `(1/N) Σ_r w_r sup|κ'''(η_r)| |x_rj x_rk x_rl|` with `η_r` ranging over
    /// the image of the box.
    fn third_bound_on(&self, region: &DomainBox<T>) -> Option<T> {
        if self.family.kappa3_sup() == Some(T::zero()) {
            return Some(T::zero());
        }
        let d = self.design.cols();
        let mut entries = vec![T::zero(); d * d * d];
        for r in 0..self.design.rows() {
            let x = self.design.row(r);
            let (mut lo, mut hi) = (T::zero(), T::zero());
            for (j, &xj) in x.iter().enumerate() {
                if xj == T::zero() {
                    continue;
                }
                let a = region.lower()[j] * xj;
                let b = region.upper()[j] * xj;
                lo += a.min(b);
                hi += a.max(b);
            }
            let sup = self.family.kappa3_sup_on(lo, hi) * self.weight(r).abs();
            if !sup.is_finite() {
                return None;
            }
            for j in 0..d {
                for k in 0..d {
                    let xjk = (x[j] * x[k]).abs();
                    for l in 0..d {
                        entries[(j * d + k) * d + l] += sup * xjk * x[l].abs();
                    }
                }
            }
        }
        let norm = self.normalizer;
        Some(entries.iter().map(|&e| (e / norm) * (e / norm)).sum::<T>().sqrt())
    }
}

impl<T: Real> ObjectiveModel<T> for LinearPredictorObjective<T> {
    fn dim(&self) -> usize {
        self.design.cols()
    }

    fn value(&self, theta: &[T]) -> T {
        let total: T = (0..self.design.rows())
            .map(|r| {
                let eta = dot(theta, self.design.row(r));
                self.weight(r) * (self.family.kappa(eta) - self.stats[r] * eta)
            })
            .sum();
        total / self.normalizer
    }

    fn gradient(&self, theta: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.dim()];
        self.accumulate_gradient(0..self.design.rows(), theta, &mut g);
        g.iter_mut().for_each(|v| *v /= self.normalizer);
        g
    }

    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        let d = self.dim();
        let mut h = Matrix::zeros(d, d);
        for r in 0..self.design.rows() {
            let x = self.design.row(r);
            let c = self.weight(r) * self.family.kappa2(dot(theta, x));
            for j in 0..d {
                let cj = c * x[j];
                if cj == T::zero() {
                    continue;
                }
                for k in j..d {
                    h[(j, k)] += cj * x[k];
                }
            }
        }
        for j in 0..d {
            for k in j..d {
                let v = h[(j, k)] / self.normalizer;
                h[(j, k)] = v;
                h[(k, j)] = v;
            }
        }
        h
    }

    fn third_derivative_bound(&self, region: &DomainBox<T>) -> Option<T> {
        self.third_bound_on(region)
    }

    fn is_convex(&self) -> bool {
        self.weights.as_ref().is_none_or(|w| w.iter().all(|&v| v >= T::zero()))
    }

    fn component_count(&self) -> Option<usize> {
        if self.weights.is_some() {
            return None;
        }
        Some(self.groups.as_ref().map_or(self.design.rows(), Vec::len))
    }

    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        if self.weights.is_some() {
            return None;
        }
        let rows = match &self.groups {
            Some(g) => g.get(i)?.clone(),
            None if i < self.design.rows() => i..i + 1,
            None => return None,
        };
        let mut g = vec![T::zero(); self.dim()];
        self.accumulate_gradient(rows, theta, &mut g);
        Some(g)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}
