//! Exact Boltzmann machine distributions by enumeration.

use rand::Rng;

use crate::error::{Error, Result};
use crate::models::ThetaPacking;
use crate::scalar::log_sum_exp;
use crate::Real;

pub const MAX_ENUMERATED_NODES: usize = 20;

/// The full distribution `p(y) ∝ exp(bᵀy + Σ_{k<l} A_kl y_k y_l)` over
/// `{−1, +1}^d`, with `θ` packed as in [`ThetaPacking`]. State `s` sets
/// `y_k = +1` exactly when bit `k` of `s` is set.
#[derive(Clone, Debug)]
pub struct BoltzmannTable<T: Real> {
    pub packing: ThetaPacking,
    pub probabilities: Vec<T>,
    cumulative: Vec<T>,
}

impl<T: Real> BoltzmannTable<T> {
    pub fn new(d: usize, theta: &[T]) -> Result<Self> {
        if d > MAX_ENUMERATED_NODES {
            return Err(Error::InvalidArgument(format!(
                "exact Boltzmann enumeration supports d <= {MAX_ENUMERATED_NODES}, got {d}"
            )));
        }
        let packing = ThetaPacking::new(d)?;
        let (b, a) = packing.unpack(theta)?;
        let log_w: Vec<T> = (0..1usize << d)
            .map(|s| {
                let y = state(d, s);
                let mut e = T::zero();
                for k in 0..d {
                    e += b[k] * y[k];
                    for l in (k + 1)..d {
                        e += a[(k, l)] * y[k] * y[l];
                    }
                }
                e
            })
            .collect();
        let log_z = log_sum_exp(&log_w);
        let probabilities: Vec<T> = log_w.iter().map(|&w| (w - log_z).exp()).collect();
        let mut acc = T::zero();
        let cumulative = probabilities
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            packing,
            probabilities,
            cumulative,
        })
    }

    pub fn d(&self) -> usize {
        self.packing.d
    }

    pub fn states(&self) -> Vec<Vec<T>> {
        (0..self.probabilities.len()).map(|s| state(self.d(), s)).collect()
    }

    pub fn state(&self, s: usize) -> Vec<T> {
        state(self.d(), s)
    }

    /// `E y_k`.
    pub fn mean(&self, k: usize) -> T {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(s, &p)| if s >> k & 1 == 1 { p } else { -p })
            .sum()
    }

    /// Inverse-CDF draw of a state index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = T::lit(rng.random::<f64>()) * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

fn state<T: Real>(d: usize, s: usize) -> Vec<T> {
    (0..d)
        .map(|k| if s >> k & 1 == 1 { T::one() } else { -T::one() })
        .collect()
}

/// `n` i.i.d. draws from the exact distribution, together with its table.
pub fn gen_boltzmann_exact<T: Real, R: Rng + ?Sized>(
    d: usize,
    theta_true: &[T],
    n: usize,
    rng: &mut R,
) -> Result<(BoltzmannTable<T>, Vec<Vec<T>>)> {
    let table = BoltzmannTable::new(d, theta_true)?;
    let samples = (0..n).map(|_| table.state(table.sample_index(rng))).collect();
    Ok((table, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn zero_parameters_are_uniform() {
        let t = BoltzmannTable::<f64>::new(2, &[0.0; 3]).unwrap();
        assert_eq!(t.probabilities, vec![0.25; 4]);
    }

    #[test]
    fn independent_spin_mean() {
        let h = 0.7;
        let t = BoltzmannTable::new(2, &[h, 0.0, 0.0]).unwrap();
        assert!((t.mean(0) - f64::tanh(h)).abs() < 1e-14);
        assert!(t.mean(1).abs() < 1e-14);
    }

    #[test]
    fn table_normalization_and_ratios() {
        let theta = [0.3, -0.2, 0.5, 0.4, -0.6, 0.1];
        let t = BoltzmannTable::new(3, &theta).unwrap();
        assert!((t.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // p(+,+,+)/p(−,−,−) = exp(2(b₁+b₂+b₃)).
        let ratio = t.probabilities[7] / t.probabilities[0];
        assert!((ratio.ln() - 2.0 * (0.3 - 0.2 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn sampling_and_limits() {
        let (t, s) = gen_boltzmann_exact(3, &[0.2, 0.0, -0.4, 0.3, 0.0, 0.0], 50_000, &mut stream_rng(1, 0)).unwrap();
        let emp = s.iter().map(|y| y[0]).sum::<f64>() / s.len() as f64;
        assert!((emp - t.mean(0)).abs() < 4.0 / (s.len() as f64).sqrt());
        assert!(BoltzmannTable::<f64>::new(21, &vec![0.0; 21 + 210]).is_err());
    }
}
