//! Monte Carlo frequentist coverage of credible sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{affine_calibrate, credible_set, sandwich_covariance};
use crate::error::{Error, Result};
use crate::numerics::find_minimizer;
use crate::posterior::GeneralizedPosterior;
use crate::rng::{stream_rng, substream, StreamRng};
use crate::sampler::{rwm_sample_with, RwmSettings};
use crate::Real;

pub const MIN_REPLICATIONS: usize = 100;
/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z: f64 = 1.959964;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    Raw,
    AffineCalibrated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Replications that completed; failures are excluded from `coverage`.
    pub replications: usize,
    pub hits: usize,
    pub failed: usize,
    pub coverage: f64,
    pub wilson_interval: (f64, f64),
    pub mode: CoverageMode,
}

#[derive(Clone, Debug)]
pub struct CoverageSettings<T: Real> {
    pub reps: usize,
    pub rho: T,
    pub seed: u64,
    pub calibrate: bool,
    pub steps: usize,
    pub burn_in: usize,
    /// Optimizer start; zeros when `None`.
    pub theta_init: Option<Vec<T>>,
    pub newton_tol: T,
    pub newton_max_iter: usize,
}

impl<T: Real> CoverageSettings<T> {
    pub fn new(reps: usize, rho: T, seed: u64) -> Self {
        Self {
            reps,
            rho,
            seed,
            calibrate: false,
            steps: 12_000,
            burn_in: 2_000,
            theta_init: None,
            newton_tol: T::lit(1e-8),
            newton_max_iter: 200,
        }
    }

    pub fn calibrated(mut self, calibrate: bool) -> Self {
        self.calibrate = calibrate;
        self
    }

    pub fn with_chain(mut self, steps: usize, burn_in: usize) -> Self {
        self.steps = steps;
        self.burn_in = burn_in;
        self
    }

    pub fn with_init(mut self, theta_init: Vec<T>) -> Self {
        self.theta_init = Some(theta_init);
        self
    }
}

/// Wilson score interval for `hits / trials` at `z`.
pub fn wilson_interval(hits: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per replication: simulate data, build and fit the posterior, sample with a
/// Laplace-scaled random walk, optionally recalibrate to the sandwich
/// covariance, and test `θ₀ ∈ S_n`. Replication `r` draws data from stream
/// `(seed, [r, 0])` and runs its chain on `(seed, [r, 1])`, so results do not
/// depend on scheduling.
pub fn coverage_experiment<T, D, G, B>(
    generate: G,
    build: B,
    theta0: &[T],
    settings: &CoverageSettings<T>,
) -> Result<CoverageReport>
where
    T: Real,
    G: Fn(&mut StreamRng) -> Result<D> + Sync,
    B: Fn(&D) -> Result<GeneralizedPosterior<T>> + Sync,
{
    if settings.reps < MIN_REPLICATIONS {
        return Err(Error::InvalidArgument(format!(
            "coverage needs at least {MIN_REPLICATIONS} replications"
        )));
    }
    let outcomes: Vec<Option<bool>> = (0..settings.reps)
        .into_par_iter()
        .map(|r| match replicate(&generate, &build, theta0, settings, r as u64) {
            Ok(hit) => Some(hit),
            Err(e) => {
                log::warn!("coverage replication {r} failed: {e}");
                None
            }
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
    let replications = settings.reps - failed;
    let coverage = if replications > 0 {
        hits as f64 / replications as f64
    } else {
        f64::NAN
    };
    Ok(CoverageReport {
        replications,
        hits,
        failed,
        coverage,
        wilson_interval: wilson_interval(hits, replications, WILSON_Z),
        mode: if settings.calibrate {
            CoverageMode::AffineCalibrated
        } else {
            CoverageMode::Raw
        },
    })
}

fn replicate<T, D, G, B>(
    generate: &G,
    build: &B,
    theta0: &[T],
    settings: &CoverageSettings<T>,
    rep: u64,
) -> Result<bool>
where
    T: Real,
    G: Fn(&mut StreamRng) -> Result<D>,
    B: Fn(&D) -> Result<GeneralizedPosterior<T>>,
{
    let mut data_rng = stream_rng(settings.seed, substream(&[rep, 0]));
    let data = generate(&mut data_rng)?;
    let gp = build(&data)?;
    let init = settings.theta_init.clone().unwrap_or_else(|| vec![T::zero(); gp.dim()]);
    let fit = find_minimizer(gp.model.as_ref(), &init, settings.newton_tol, settings.newton_max_iter)?;
    if !fit.converged {
        return Err(Error::NotConverged {
            grad_norm: fit.grad_norm.as_f64(),
            iterations: fit.iterations,
        });
    }
    let chain = RwmSettings::new(settings.steps, settings.burn_in, settings.seed)
        .with_stream(substream(&[rep, 1]))
        .with_laplace_proposal(&fit, gp.n)?;
    let mut draws = rwm_sample_with(&gp, &fit.theta_n, &chain)?;
    if settings.calibrate {
        let sandwich = sandwich_covariance(gp.model.as_ref(), &fit)?;
        draws = affine_calibrate(&draws, &fit.theta_n, &sandwich.sandwich_cov)?;
    }
    credible_set(&draws, settings.rho)?.contains(theta0)
}
