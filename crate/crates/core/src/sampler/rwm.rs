//! Random-walk Metropolis with Robbins–Monro step-size adaptation during
//! burn-in. Adaptation is frozen afterwards so the retained chain is a
//! time-homogeneous Markov chain with the posterior as invariant law.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numerics::FitResult;
use crate::posterior::GeneralizedPosterior;
use crate::rng::stream_rng;
use crate::Real;

pub const TARGET_ACCEPTANCE: f64 = 0.30;

/// Posterior draws with the metadata needed to reproduce them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct DrawMatrix<T: Real> {
    /// `S × D`, one draw per row.
    pub draws: Matrix<T>,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    /// Acceptance rate over the retained (post burn-in) steps.
    pub acceptance_rate: f64,
    pub burn_in: usize,
    /// Proposal step multiplier reached at the end of burn-in.
    #[serde(default)]
    pub final_scale: f64,
}

impl<T: Real> DrawMatrix<T> {
    /// Wraps externally produced draws (e.g. exact samplers in tests).
    pub fn from_draws(draws: Matrix<T>, seed: u64) -> Result<Self> {
        if draws.rows() == 0 || draws.cols() == 0 {
            return Err(Error::InvalidArgument("draw matrix must be non-empty".into()));
        }
        Ok(Self {
            draws,
            seed,
            stream: 0,
            acceptance_rate: 1.0,
            burn_in: 0,
            final_scale: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.draws.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.draws.cols()
    }

    pub fn row(&self, s: usize) -> &[T] {
        self.draws.row(s)
    }
}

#[derive(Clone, Debug)]
pub struct RwmSettings<T: Real> {
    /// Total steps including burn-in.
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent stream under `seed`, e.g. the chain index.
    pub stream: u64,
    /// Lower Cholesky factor of the initial proposal covariance.
    pub proposal: Option<Matrix<T>>,
}

impl<T: Real> RwmSettings<T> {
    pub fn new(steps: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            steps,
            burn_in,
            seed,
            stream: 0,
            proposal: None,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_proposal(mut self, factor: Matrix<T>) -> Self {
        self.proposal = Some(factor);
        self
    }

    /// `2.38/√D` times the Cholesky factor of the Laplace covariance `(n H_n)⁻¹`.
    pub fn with_laplace_proposal(self, fit: &FitResult<T>, n: usize) -> Result<Self> {
        let d = fit.theta_n.dim();
        let cov = fit
            .hessian_at_min
            .scale(T::from_count(n))
            .inverse_spd()
            .map_err(|_| Error::LaplaceUndefined)?;
        let factor = cov.cholesky()?.factor().scale(T::lit(2.38) / T::from_count(d).sqrt());
        Ok(self.with_proposal(factor))
    }
}

/// Consecutive rejections from the start after which a chain is declared stuck.
pub fn stuck_threshold(dim: usize) -> usize {
    (10 * dim).max(50)
}

/// Single chain with the default `0.1·I` initial proposal.
pub fn rwm_sample<T: Real>(
    gp: &GeneralizedPosterior<T>,
    theta_init: &[T],
    steps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<DrawMatrix<T>> {
    rwm_sample_with(gp, theta_init, &RwmSettings::new(steps, burn_in, seed))
}

pub fn rwm_sample_with<T: Real>(
    gp: &GeneralizedPosterior<T>,
    theta_init: &[T],
    settings: &RwmSettings<T>,
) -> Result<DrawMatrix<T>> {
    let d = gp.dim();
    if theta_init.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta_init.len(),
        });
    }
    if settings.steps <= settings.burn_in {
        return Err(Error::InvalidArgument("steps must exceed burn_in".into()));
    }
    let factor = match &settings.proposal {
        Some(l) if l.rows() == d && l.cols() == d => l.clone(),
        Some(l) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: l.rows(),
            })
        }
        None => Matrix::identity(d).scale(T::lit(0.1)),
    };
    let mut current = theta_init.to_vec();
    let mut log_p = gp.unnormalized_log_posterior(&current)?;
    if log_p == T::neg_infinity() {
        return Err(Error::InvalidArgument(
            "initial point has zero posterior density".into(),
        ));
    }

    let mut rng = stream_rng(settings.seed, settings.stream);
    let kept = settings.steps - settings.burn_in;
    let mut out = Vec::with_capacity(kept * d);
    let mut log_scale = 0.0f64;
    let mut accepted_kept = 0usize;
    let mut ever_accepted = false;
    let stuck = stuck_threshold(d);
    let mut z = vec![0.0f64; d];
    let mut proposal = vec![T::zero(); d];

    for step in 0..settings.steps {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let scale = T::lit(log_scale.exp());
        for i in 0..d {
            let row = factor.row(i);
            let mut acc = T::zero();
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += row[j] * T::lit(*zj);
            }
            proposal[i] = current[i] + scale * acc;
        }
        let log_q = gp.unnormalized_log_posterior(&proposal)?;
        let u: f64 = rng.random();
        let log_alpha = (log_q - log_p).as_f64();
        let accept = log_q > T::neg_infinity() && (log_alpha >= 0.0 || u.ln() < log_alpha);
        if accept {
            current.copy_from_slice(&proposal);
            log_p = log_q;
            ever_accepted = true;
        } else if !ever_accepted && step + 1 >= stuck {
            return Err(Error::StuckChain);
        }

        if step < settings.burn_in {
            let alpha = if log_q == T::neg_infinity() {
                0.0
            } else {
                log_alpha.min(0.0).exp()
            };
            let gain = 1.0 / ((step + 1) as f64).powf(0.6);
            log_scale += gain * (alpha - TARGET_ACCEPTANCE);
        } else {
            if accept {
                accepted_kept += 1;
            }
            out.extend_from_slice(&current);
        }
    }

    Ok(DrawMatrix {
        draws: Matrix::from_row_major(kept, d, out)?,
        seed: settings.seed,
        stream: settings.stream,
        acceptance_rate: accepted_kept as f64 / kept as f64,
        burn_in: settings.burn_in,
        final_scale: log_scale.exp(),
    })
}
