//! Effective sample size by Geyer's initial positive sequence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::DrawMatrix;
use crate::Real;

pub const MIN_DRAWS: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct EssReport {
    /// ESS per coordinate, in `(0, S]`.
    pub values: Vec<f64>,
    /// True where the raw estimate exceeded `S` (antithetic chains) and was capped.
    pub capped: Vec<bool>,
}

impl EssReport {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn effective_sample_size<T: Real>(draws: &DrawMatrix<T>) -> Result<EssReport> {
    let s = draws.len();
    if s < MIN_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "effective sample size needs at least {MIN_DRAWS} draws"
        )));
    }
    let mut values = Vec::with_capacity(draws.dim());
    let mut capped = Vec::with_capacity(draws.dim());
    for j in 0..draws.dim() {
        let x: Vec<f64> = draws.draws.column(j).iter().map(|v| v.as_f64()).collect();
        let (ess, cap) = ess_1d(&x);
        values.push(ess);
        capped.push(cap);
    }
    Ok(EssReport { values, capped })
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Returns `(ess, capped)` for one centered-on-the-fly series.
pub fn ess_1d(x: &[f64]) -> (f64, bool) {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let gamma0 = autocovariance(&c, 0);
    if gamma0 <= 0.0 {
        log::warn!("constant chain: effective sample size reported as 1");
        return (1.0, false);
    }
    // τ = −1 + 2 Σ_k Γ_k with Γ_k = ρ_{2k} + ρ_{2k+1}, truncated at the first
    // non-positive pair and forced to be non-increasing.
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocovariance(&c, 2 * k) + autocovariance(&c, 2 * k + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        k += 1;
    }
    let raw = if tau > 0.0 { n as f64 / tau } else { f64::INFINITY };
    if raw > n as f64 {
        (n as f64, true)
    } else {
        (raw, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn wrap(x: Vec<f64>) -> DrawMatrix<f64> {
        DrawMatrix::from_draws(Matrix::from_row_major(x.len(), 1, x).unwrap(), 0).unwrap()
    }

    #[test]
    fn iid_draws() {
        let mut rng = stream_rng(5, 0);
        let x: Vec<f64> = (0..20_000).map(|_| rng.sample(StandardNormal)).collect();
        let r = effective_sample_size(&wrap(x)).unwrap();
        let ratio = r.values[0] / 20_000.0;
        assert!((0.8..=1.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn ar1_chain() {
        let rho: f64 = 0.9;
        let mut rng = stream_rng(6, 0);
        let mut x = vec![0.0; 100_000];
        for t in 1..x.len() {
            let e: f64 = rng.sample(StandardNormal);
            x[t] = rho * x[t - 1] + (1.0 - rho * rho).sqrt() * e;
        }
        let r = effective_sample_size(&wrap(x)).unwrap();
        let ratio = r.values[0] / 100_000.0;
        let expected = (1.0 - rho) / (1.0 + rho);
        assert!(ratio > expected / 1.5 && ratio < expected * 1.5, "{ratio}");
    }

    #[test]
    fn alternating_chain_is_capped() {
        let x: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = effective_sample_size(&wrap(x)).unwrap();
        assert_eq!(r.values[0], 1000.0);
        assert!(r.capped[0]);
    }

    #[test]
    fn constant_chain() {
        let r = effective_sample_size(&wrap(vec![2.5; 500])).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert!(effective_sample_size(&wrap(vec![1.0; 50])).is_err());
    }
}
