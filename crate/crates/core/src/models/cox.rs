//! Cox proportional hazards partial likelihood.
//!
//! `f_n(θ) = (1/n) Σ_i z_i H_{y_i}(θ) − θᵀ (1/n) Σ_i z_i x_i` with
//! `H_y(θ) = log((1/n) Σ_{j: y_j ≥ y} exp(θᵀx_j))`. Risk sets are swept once in
//! order of decreasing time with a running log-sum-exp shift, so each
//! evaluation costs `O(n log n + n D²)`.

use serde::{Deserialize, Serialize};

use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::ObjectiveModel;
use crate::models::glm::{min_scaled_singular_value, RANK_THRESHOLD};
use crate::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct SurvivalDataset<T: Real> {
    pub times: Vec<T>,
    pub events: Vec<bool>,
    /// `n × D` covariates.
    pub x: Matrix<T>,
}

impl<T: Real> SurvivalDataset<T> {
    pub fn new(times: Vec<T>, events: Vec<bool>, x: Matrix<T>) -> Result<Self> {
        let n = times.len();
        if events.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: events.len(),
            });
        }
        if x.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.rows(),
            });
        }
        if n == 0 || x.cols() == 0 {
            return Err(Error::Data("survival dataset is empty".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < T::zero()) {
            return Err(Error::Data("survival times must be finite and non-negative".into()));
        }
        if !x.is_finite() {
            return Err(Error::Data("covariates contain NaN or infinity".into()));
        }
        if !events.iter().any(|&z| z) {
            return Err(Error::Data("survival dataset has no observed events".into()));
        }
        Ok(Self { times, events, x })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn event_count(&self) -> usize {
        self.events.iter().filter(|&&z| z).count()
    }
}

/// Per-event risk-set moments at one `θ`.
struct RiskSets<T: Real> {
    /// `log Σ_{risk} exp(θᵀx_j)` per event (in `event_order`).
    log_s0: Vec<T>,
    /// Softmax-weighted covariate mean per event.
    mean: Vec<Vec<T>>,
    /// Weighted covariance per event, filled only when requested.
    cov: Vec<Matrix<T>>,
    /// Subject indices of events, ascending in time.
    event_order: Vec<usize>,
}

pub struct CoxModel<T: Real> {
    data: SurvivalDataset<T>,
    /// Subjects sorted by ascending time.
    order: Vec<usize>,
    /// Start of each block of tied times in `order`.
    blocks: Vec<std::ops::Range<usize>>,
    ranges: Vec<T>,
    name: String,
}

/// Builds the Cox objective. Tied event times are handled with the Breslow
/// convention and reported through `log::warn`.
pub fn cox_partial_model<T: Real>(data: SurvivalDataset<T>) -> Result<CoxModel<T>> {
    let n = data.n();
    let d = data.dim();
    let mut centered = data.x.clone();
    let means: Vec<T> = (0..d)
        .map(|j| data.x.column(j).into_iter().sum::<T>() / T::from_count(n))
        .collect();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&means) {
            *v -= *m;
        }
    }
    if !(min_scaled_singular_value(&centered) > T::lit(RANK_THRESHOLD)) {
        return Err(Error::RankDeficient);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.times[a].partial_cmp(&data.times[b]).unwrap());
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut tied_events = false;
    for k in 1..=n {
        if k == n || data.times[order[k]] != data.times[order[start]] {
            if order[start..k].iter().filter(|&&i| data.events[i]).count() > 1 {
                tied_events = true;
            }
            blocks.push(start..k);
            start = k;
        }
    }
    if tied_events {
        log::warn!("tied event times: using the Breslow convention");
    }

    let ranges = (0..d)
        .map(|j| {
            let col = data.x.column(j);
            let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
            let lo = col.iter().copied().fold(T::infinity(), T::min);
            hi - lo
        })
        .collect();
    Ok(CoxModel {
        data,
        order,
        blocks,
        ranges,
        name: "cox-partial".into(),
    })
}

impl<T: Real> CoxModel<T> {
    pub fn data(&self) -> &SurvivalDataset<T> {
        &self.data
    }

    fn etas(&self, theta: &[T]) -> Vec<T> {
        (0..self.data.n()).map(|i| dot(theta, self.data.x.row(i))).collect()
    }

    /// One sweep from the latest time backwards; subjects enter the risk set a
    /// whole tie block at a time before that block's events are scored.
    fn risk_sets(&self, eta: &[T], with_cov: bool) -> RiskSets<T> {
        let d = self.data.dim();
        let x = &self.data.x;
        let mut shift = T::neg_infinity();
        let mut s0 = T::zero();
        let mut s1 = vec![T::zero(); d];
        let mut s2 = Matrix::zeros(d, d);
        let k = self.data.event_count();
        let mut log_s0 = Vec::with_capacity(k);
        let mut mean = Vec::with_capacity(k);
        let mut cov = Vec::new();
        let mut event_order = Vec::with_capacity(k);

        for block in self.blocks.iter().rev() {
            for &i in &self.order[block.clone()] {
                if eta[i] > shift {
                    let r = (shift - eta[i]).exp();
                    s0 *= r;
                    s1.iter_mut().for_each(|v| *v *= r);
                    if with_cov {
                        s2 = s2.scale(r);
                    }
                    shift = eta[i];
                }
                let w = (eta[i] - shift).exp();
                s0 += w;
                for (acc, &xj) in s1.iter_mut().zip(x.row(i)) {
                    *acc += w * xj;
                }
                if with_cov {
                    s2.add_outer(x.row(i), x.row(i), w);
                }
            }
            for &i in self.order[block.clone()].iter().rev() {
                if !self.data.events[i] {
                    continue;
                }
                let xbar: Vec<T> = s1.iter().map(|&v| v / s0).collect();
                if with_cov {
                    let mut c = s2.scale(T::one() / s0);
                    c.add_outer(&xbar, &xbar, -T::one());
                    cov.push(c);
                }
                log_s0.push(shift + s0.ln());
                mean.push(xbar);
                event_order.push(i);
            }
        }
        log_s0.reverse();
        mean.reverse();
        cov.reverse();
        event_order.reverse();
        RiskSets {
            log_s0,
            mean,
            cov,
            event_order,
        }
    }

    /// Martingale-residual score contributions `W_i(θ)` per subject; they sum
    /// to `−n ∇f_n(θ)` and are asymptotically independent.
    fn score_components(&self, theta: &[T]) -> Vec<Vec<T>> {
        let n = self.data.n();
        let d = self.data.dim();
        let eta = self.etas(theta);
        let rs = self.risk_sets(&eta, false);
        let x = &self.data.x;

        // Cumulative sums over events with time ≤ t of exp(−log S0_j − M) and
        // the same weights times x̄_j, where M keeps the weights bounded.
        let big_m = rs.log_s0.iter().map(|&l| -l).fold(T::neg_infinity(), T::max);
        let mut out = vec![vec![T::zero(); d]; n];
        let mut acc_a = T::zero();
        let mut acc_b = vec![T::zero(); d];
        let mut e = 0;
        for block in &self.blocks {
            let block_time = self.data.times[self.order[block.start]];
            while e < rs.event_order.len() && self.data.times[rs.event_order[e]] <= block_time {
                let w = (-rs.log_s0[e] - big_m).exp();
                acc_a += w;
                for (b, &m) in acc_b.iter_mut().zip(&rs.mean[e]) {
                    *b += w * m;
                }
                e += 1;
            }
            for &i in &self.order[block.clone()] {
                let xi = x.row(i);
                let w = &mut out[i];
                if acc_a > T::zero() {
                    let factor = (eta[i] + big_m + acc_a.ln()).exp();
                    for j in 0..d {
                        w[j] -= factor * (xi[j] - acc_b[j] / acc_a);
                    }
                }
            }
        }
        for (e, &i) in rs.event_order.iter().enumerate() {
            let xi = x.row(i);
            for j in 0..d {
                out[i][j] += xi[j] - rs.mean[e][j];
            }
        }
        out
    }
}

impl<T: Real> ObjectiveModel<T> for CoxModel<T> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn value(&self, theta: &[T]) -> T {
        let n = T::from_count(self.data.n());
        let eta = self.etas(theta);
        let rs = self.risk_sets(&eta, false);
        let ln_n = n.ln();
        let mut total = T::zero();
        for (e, &i) in rs.event_order.iter().enumerate() {
            total += rs.log_s0[e] - ln_n - eta[i];
        }
        total / n
    }

    fn gradient(&self, theta: &[T]) -> Vec<T> {
        let n = T::from_count(self.data.n());
        let eta = self.etas(theta);
        let rs = self.risk_sets(&eta, false);
        let mut g = vec![T::zero(); self.dim()];
        for (e, &i) in rs.event_order.iter().enumerate() {
            for ((gj, &m), &xj) in g.iter_mut().zip(&rs.mean[e]).zip(self.data.x.row(i)) {
                *gj += m - xj;
            }
        }
        g.iter_mut().for_each(|v| *v /= n);
        g
    }

    fn hessian(&self, theta: &[T]) -> Matrix<T> {
        let n = T::from_count(self.data.n());
        let eta = self.etas(theta);
        let rs = self.risk_sets(&eta, true);
        let d = self.dim();
        let mut h = Matrix::zeros(d, d);
        for c in &rs.cov {
            h.add_scaled(c, T::one() / n);
        }
        h.symmetrize();
        h
    }

    /// Third cumulants of a distribution supported in a box with side lengths
    /// `r_j` are bounded entrywise by `r_j r_k r_l`, uniformly in `θ`.
    fn third_derivative_bound(&self, _region: &DomainBox<T>) -> Option<T> {
        let frac = T::from_count(self.data.event_count()) / T::from_count(self.data.n());
        let r2: T = self.ranges.iter().map(|&r| r * r).sum();
        Some(frac * r2 * r2.sqrt())
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn component_count(&self) -> Option<usize> {
        Some(self.data.n())
    }

    fn component_gradient(&self, i: usize, theta: &[T]) -> Option<Vec<T>> {
        if i >= self.data.n() {
            return None;
        }
        self.component_gradients(theta).map(|mut all| all.swap_remove(i))
    }

    fn component_gradients(&self, theta: &[T]) -> Option<Vec<Vec<T>>> {
        Some(
            self.score_components(theta)
                .into_iter()
                .map(|w| w.into_iter().map(|v| -v).collect())
                .collect(),
        )
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use rand::{Rng, SeedableRng};

    fn dataset(times: Vec<f64>, events: Vec<bool>, x: Vec<Vec<f64>>) -> SurvivalDataset<f64> {
        SurvivalDataset::new(times, events, Matrix::from_rows(&x).unwrap()).unwrap()
    }

    fn random_dataset(n: usize, d: usize, seed: u64) -> SurvivalDataset<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let times = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let events = (0..n).map(|_| rng.random_bool(0.7)).collect();
        let mut data = dataset(times, events, x);
        data.events[0] = true;
        data
    }

    /// Direct `O(n²)` evaluation of the definition.
    fn brute_value(data: &SurvivalDataset<f64>, theta: &[f64]) -> f64 {
        let n = data.n() as f64;
        let mut total = 0.0;
        for i in 0..data.n() {
            if !data.events[i] {
                continue;
            }
            let s: f64 = (0..data.n())
                .filter(|&j| data.times[j] >= data.times[i])
                .map(|j| dot(theta, data.x.row(j)).exp())
                .sum();
            total += (s / n).ln() - dot(theta, data.x.row(i));
        }
        total / n
    }

    #[test]
    fn three_subject_value_at_zero() {
        let data = dataset(
            vec![1.0, 2.0, 3.0],
            vec![true; 3],
            vec![vec![0.3], vec![-1.0], vec![2.0]],
        );
        let m = cox_partial_model(data).unwrap();
        let expected = ((2.0f64 / 3.0).ln() + (1.0f64 / 3.0).ln()) / 3.0;
        assert!((m.value(&[0.0]) - expected).abs() < 1e-15);
        assert!((m.value(&[0.0]) + 0.501359).abs() < 1e-6);
    }

    #[test]
    fn gradient_at_zero_uses_plain_means() {
        let x = vec![vec![1.0], vec![2.0], vec![4.0]];
        let data = dataset(vec![1.0, 2.0, 3.0], vec![true, false, true], x);
        let m = cox_partial_model(data).unwrap();
        let expected = ((7.0 / 3.0 - 1.0) + (4.0 - 4.0)) / 3.0;
        assert!((m.gradient(&[0.0])[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_evaluation() {
        let data = random_dataset(40, 2, 3);
        let m = cox_partial_model(data.clone()).unwrap();
        for theta in [[0.0, 0.0], [1.5, -0.7], [-3.0, 2.0], [40.0, -35.0]] {
            let a = m.value(&theta);
            let b = brute_value(&data, &theta);
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let m = cox_partial_model(random_dataset(60, 3, 7)).unwrap();
        let probes = vec![vec![0.0, 0.0, 0.0], vec![0.8, -0.4, 1.1], vec![-2.0, 1.0, 0.5]];
        let report = validate_model(&m, &probes, 1e-5);
        assert!(report.passed(), "{report:?}");
        for p in &probes {
            assert!(m.hessian(p).min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn ties_follow_breslow() {
        let data = dataset(
            vec![1.0, 1.0, 2.0, 3.0],
            vec![true, true, false, true],
            vec![vec![0.5], vec![-0.5], vec![1.0], vec![0.0]],
        );
        let m = cox_partial_model(data.clone()).unwrap();
        for theta in [[0.0], [0.7], [-1.3]] {
            assert!((m.value(&theta) - brute_value(&data, &theta)).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_invariance() {
        let data = random_dataset(30, 2, 11);
        let cubed = SurvivalDataset::new(
            data.times.iter().map(|t| t * t * t).collect(),
            data.events.clone(),
            data.x.clone(),
        )
        .unwrap();
        let a = cox_partial_model(data).unwrap();
        let b = cox_partial_model(cubed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let theta = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            assert!((a.value(&theta) - b.value(&theta)).abs() < 1e-12);
        }
    }

    #[test]
    fn score_components_sum_to_gradient() {
        let m = cox_partial_model(random_dataset(50, 2, 5)).unwrap();
        let theta = [0.4, -0.9];
        let comps = m.component_gradients(&theta).unwrap();
        let g = m.gradient(&theta);
        for j in 0..2 {
            let s: f64 = comps.iter().map(|c| c[j]).sum::<f64>() / 50.0;
            assert!((s - g[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn third_bound_dominates_probe() {
        let m = cox_partial_model(random_dataset(40, 1, 9)).unwrap();
        let region = DomainBox::cube(1, -2.0, 2.0).unwrap();
        let probe = crate::numerics::third_derivative_bound_probe(&m, &region, 32, 1e-3, 0).unwrap();
        assert!(probe.probed <= probe.analytic.unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        let x = Matrix::from_rows(&[vec![2.0], vec![2.0], vec![2.0]]).unwrap();
        let data = SurvivalDataset::new(vec![1.0, 2.0, 3.0], vec![true; 3], x).unwrap();
        assert!(matches!(cox_partial_model(data), Err(Error::RankDeficient)));
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(SurvivalDataset::new(vec![1.0, 2.0], vec![false, false], x.clone()).is_err());
        assert!(SurvivalDataset::new(vec![1.0, f64::NAN], vec![true, false], x).is_err());
    }
}
