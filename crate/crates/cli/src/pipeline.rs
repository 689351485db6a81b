//! Typed experiments and the pipeline stages
//! simulate → fit → laplace → sample → diagnose.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gbv::diagnostics::{
    concentration_mass, coverage_experiment, moment_gap_to_normal, sandwich_covariance, tv_to_normal_limit,
    CoverageReport, CoverageSettings, MassSource, SandwichEstimate,
};
use gbv::io;
use gbv::models::{
    boltzmann_pseudolik, build_glm, cox_partial_model, gmrf_pseudolik_with, ising_pseudolik, median_location_model,
    ExpFam1P, GmrfFeatures, IidExpFamModel, SymmetricCdf,
};
use gbv::rng::substream;
use gbv::sampler::{effective_sample_size, rwm_sample_with, RwmSettings};
use gbv::simulate::{Baseline, Censoring, CovariateSpec, GeneratorSpec, GlmKind, Noise, SimulatedData};
use gbv::{
    bvm_audit, find_minimizer, grid_density, laplace_log_normalizer, AuditReport, DomainBox, DrawMatrix, FitResult,
    GeneralizedPosterior, GridDensity, LaplaceResult, Matrix, ObjectiveModel, Prior, Tempered,
};

use crate::config::{ConfigError, RawConfig};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    IidExpFam,
    Glm,
    Ising,
    Gmrf,
    Boltzmann,
    Cox,
    Median,
}

#[derive(Clone, Debug)]
pub enum DataSource {
    /// One generator per sample size.
    Generate(Vec<GeneratorSpec>),
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub enum PriorSpec {
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
    Gaussian { mean: Option<Vec<f64>>, scale: f64 },
    Logistic { mean: Option<Vec<f64>>, scale: f64 },
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    pub seed: u64,
    pub output: PathBuf,
    pub config_hash: String,
    pub kind: ModelKind,
    family: ExpFam1P<f64>,
    glm: GlmKind,
    power: f64,
    features: GmrfFeatures,
    gamma: f64,
    cdf: SymmetricCdf,
    pub data: DataSource,
    pub theta_true: Option<Vec<f64>>,
    prior: PriorSpec,
    tol: f64,
    max_iter: usize,
    init: Option<Vec<f64>>,
    sampler_enabled: bool,
    steps: usize,
    burn_in: usize,
    chains: usize,
    tv: bool,
    grid_resolution: usize,
    grid_halfwidth: f64,
    concentration: Vec<f64>,
    audit: bool,
    audit_radius: f64,
    sandwich: bool,
    pub coverage: Option<CoverageSpec>,
}

#[derive(Clone, Debug)]
pub struct CoverageSpec {
    pub rho: f64,
    pub reps: usize,
    pub calibrate: bool,
    pub steps: usize,
    pub burn_in: usize,
}

fn positive(raw: &RawConfig, key: &str, default: f64) -> Result<f64, ConfigError> {
    let v = raw.float_or(key, default);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(raw.error(key, "must be positive"))
    }
}

impl Experiment {
    pub fn from_raw(raw: &RawConfig, seed: Option<u64>, output: Option<PathBuf>) -> Result<Self, ConfigError> {
        let kind = match raw.str("model.kind").ok_or_else(|| raw.missing("model.kind"))? {
            "iid-expfam" => ModelKind::IidExpFam,
            "glm" => ModelKind::Glm,
            "ising" => ModelKind::Ising,
            "gmrf" => ModelKind::Gmrf,
            "boltzmann" => ModelKind::Boltzmann,
            "cox" => ModelKind::Cox,
            _ => ModelKind::Median,
        };
        let sigma2 = positive(raw, "model.sigma2", 1.0)?;
        let family = match raw.str_or("model.family", "gaussian") {
            "gaussian" => ExpFam1P::Gaussian { sigma2 },
            "bernoulli" => ExpFam1P::BernoulliLogit,
            "poisson" => ExpFam1P::Poisson,
            _ => ExpFam1P::PlusMinusBinary,
        };
        if kind == ModelKind::IidExpFam && !raw.has("model.family") {
            return Err(raw.missing("model.family"));
        }
        let glm = match raw.str_or("model.glm", "logistic") {
            "linear" => GlmKind::Linear,
            "poisson" => GlmKind::Poisson,
            _ => GlmKind::Logistic,
        };
        if kind == ModelKind::Glm && !raw.has("model.glm") {
            return Err(raw.missing("model.glm"));
        }
        let features = match raw.str_or("model.features", "isotropic") {
            "axial" => GmrfFeatures::Axial,
            "per-neighbor" => GmrfFeatures::PerNeighbor,
            _ => GmrfFeatures::Isotropic,
        };
        let cdf = match raw.str_or("model.cdf", "logistic") {
            "gaussian" => SymmetricCdf::Gaussian,
            _ => SymmetricCdf::Logistic,
        };
        let theta_true = raw.floats("data.theta");
        let data = match raw.str_or("data.source", "generate") {
            "file" => DataSource::File(PathBuf::from(
                raw.str("data.path").ok_or_else(|| raw.missing("data.path"))?,
            )),
            _ => DataSource::Generate(generators(raw, kind, family, glm, features)?),
        };
        let prior = match raw.str_or("prior.kind", "gaussian") {
            "uniform" => PriorSpec::Uniform {
                lower: raw.floats("prior.lower").ok_or_else(|| raw.missing("prior.lower"))?,
                upper: raw.floats("prior.upper").ok_or_else(|| raw.missing("prior.upper"))?,
            },
            "logistic" => PriorSpec::Logistic {
                mean: raw.floats("prior.mean"),
                scale: positive(raw, "prior.scale", 1.0)?,
            },
            _ => PriorSpec::Gaussian {
                mean: raw.floats("prior.mean"),
                scale: positive(raw, "prior.scale", 10.0)?,
            },
        };
        let steps = raw.usize_or("sampler.steps", 20_000);
        let burn_in = raw.usize_or("sampler.burn_in", 5_000);
        if burn_in >= steps {
            return Err(raw.error("sampler.burn_in", "must be smaller than sampler.steps"));
        }
        let coverage = if raw.bool_or("coverage.enabled", false) {
            let rho = raw.float_or("coverage.rho", 0.9);
            if !(rho > 0.0 && rho < 1.0) {
                return Err(raw.error("coverage.rho", "must lie in (0, 1)"));
            }
            if theta_true.is_none() {
                return Err(raw.missing("data.theta"));
            }
            Some(CoverageSpec {
                rho,
                reps: raw.usize_or("coverage.reps", 2000),
                calibrate: raw.bool_or("coverage.calibrate", false),
                steps: raw.usize_or("coverage.steps", 12_000),
                burn_in: raw.usize_or("coverage.burn_in", 2_000),
            })
        } else {
            None
        };
        let concentration = raw.floats("diagnostics.concentration").unwrap_or_default();
        if !concentration.is_empty() && theta_true.is_none() {
            return Err(raw.missing("data.theta"));
        }
        let name = raw.str("experiment").map(str::to_string).unwrap_or_else(|| {
            Path::new(&raw.file)
                .file_stem()
                .map_or_else(|| "experiment".into(), |s| s.to_string_lossy().into_owned())
        });
        Ok(Self {
            name,
            seed: seed.or(raw.int("seed")).unwrap_or(0),
            output: output.unwrap_or_else(|| PathBuf::from(raw.str_or("output", "out"))),
            config_hash: raw.hash.clone(),
            kind,
            family,
            glm,
            power: positive(raw, "model.power", 1.0)?,
            features,
            gamma: positive(raw, "model.gamma", 1.0)?,
            cdf,
            data,
            theta_true,
            prior,
            tol: positive(raw, "optimizer.tol", 1e-8)?,
            max_iter: raw.usize_or("optimizer.max_iter", 200),
            init: raw.floats("optimizer.init"),
            sampler_enabled: raw.bool_or("sampler.enabled", true),
            steps,
            burn_in,
            chains: raw.usize_or("sampler.chains", 1).max(1),
            tv: raw.bool_or("diagnostics.tv", false),
            grid_resolution: raw.usize_or("diagnostics.grid_resolution", 2048),
            grid_halfwidth: positive(raw, "diagnostics.grid_halfwidth", 10.0)?,
            concentration,
            audit: raw.bool_or("diagnostics.audit", true),
            audit_radius: positive(raw, "diagnostics.audit_radius", 0.5)?,
            sandwich: raw.bool_or("diagnostics.sandwich", false),
            coverage,
        })
    }

    /// Sample sizes of the generated runs; a single unnamed run for file data.
    pub fn sizes(&self) -> Vec<Option<usize>> {
        match &self.data {
            DataSource::Generate(gens) => gens.iter().map(|g| Some(generator_size(g))).collect(),
            DataSource::File(_) => vec![None],
        }
    }

    fn generator(&self, n: Option<usize>) -> Option<&GeneratorSpec> {
        match (&self.data, n) {
            (DataSource::Generate(gens), Some(n)) => gens.iter().find(|g| generator_size(g) == n),
            (DataSource::Generate(gens), None) => gens.first(),
            _ => None,
        }
    }

    fn data_seed_stream(n: usize) -> u64 {
        substream(&[n as u64, 0])
    }

    pub fn generate(&self, n: Option<usize>) -> gbv::Result<SimulatedData<f64>> {
        let g = self
            .generator(n)
            .ok_or_else(|| gbv::Error::InvalidArgument("no generator for this sample size".into()))?;
        let mut rng = gbv::rng::stream_rng(self.seed, Self::data_seed_stream(generator_size(g)));
        g.generate_with(&mut rng)
    }

    pub fn read_data(&self, path: &Path) -> Result<SimulatedData<f64>, CliError> {
        if !path.exists() {
            return Err(CliError::Missing(path.to_path_buf()));
        }
        let data = match self.kind {
            ModelKind::IidExpFam | ModelKind::Median => SimulatedData::Scalars(io::read_column(path, "y")?),
            ModelKind::Glm => {
                let family = match (self.glm, &self.data) {
                    (GlmKind::Linear, _) => ExpFam1P::Gaussian {
                        sigma2: self.family_sigma2(),
                    },
                    (GlmKind::Logistic, _) => ExpFam1P::BernoulliLogit,
                    (GlmKind::Poisson, _) => ExpFam1P::Poisson,
                };
                SimulatedData::Glm(io::read_glm_csv(path, family)?)
            }
            ModelKind::Ising | ModelKind::Gmrf => SimulatedData::Field(io::read_field(path)?),
            ModelKind::Boltzmann => SimulatedData::Boltzmann(io::read_boltzmann_csv(path)?),
            ModelKind::Cox => SimulatedData::Survival(io::read_survival_csv(path)?),
        };
        Ok(data)
    }

    fn family_sigma2(&self) -> f64 {
        match (&self.data, self.family) {
            (DataSource::Generate(gens), _) => match gens.first() {
                Some(GeneratorSpec::Glm { sigma, .. }) => sigma * sigma,
                _ => 1.0,
            },
            (_, ExpFam1P::Gaussian { sigma2 }) => sigma2,
            _ => 1.0,
        }
    }

    pub fn write_data(&self, path: &Path, data: &SimulatedData<f64>) -> gbv::Result<()> {
        match data {
            SimulatedData::Scalars(y) => io::write_column(path, "y", y),
            SimulatedData::Glm(d) => io::write_glm_csv(path, d),
            SimulatedData::Field(f) => io::write_field(path, f),
            SimulatedData::Boltzmann(s) => io::write_boltzmann_csv(path, s),
            SimulatedData::Survival(s) => io::write_survival_csv(path, s),
        }
    }

    pub fn build_model(&self, data: &SimulatedData<f64>) -> gbv::Result<Arc<dyn ObjectiveModel<f64>>> {
        let wrong = || gbv::Error::Data(format!("data do not match model kind {:?}", self.kind));
        match (self.kind, data) {
            (ModelKind::IidExpFam, SimulatedData::Scalars(y)) => {
                self.temper(IidExpFamModel::from_observations(self.family, y)?)
            }
            (ModelKind::Median, SimulatedData::Scalars(y)) => self.temper(median_location_model(y, self.cdf)?),
            (ModelKind::Glm, SimulatedData::Glm(d)) => self.temper(build_glm(d)?),
            (ModelKind::Cox, SimulatedData::Survival(d)) => self.temper(cox_partial_model(d.clone())?),
            (ModelKind::Ising, SimulatedData::Field(f)) => self.temper(ising_pseudolik(f)?),
            (ModelKind::Gmrf, SimulatedData::Field(f)) => {
                self.temper(gmrf_pseudolik_with(f, self.gamma, self.features)?)
            }
            (ModelKind::Boltzmann, SimulatedData::Boltzmann(s)) => self.temper(boltzmann_pseudolik(s)?),
            _ => Err(wrong()),
        }
    }

    fn temper<M: ObjectiveModel<f64> + 'static>(&self, m: M) -> gbv::Result<Arc<dyn ObjectiveModel<f64>>> {
        Ok(if self.power == 1.0 {
            Arc::new(m)
        } else {
            Arc::new(Tempered::new(m, self.power)?)
        })
    }

    pub fn build_posterior(&self, data: &SimulatedData<f64>) -> gbv::Result<GeneralizedPosterior<f64>> {
        let model = self.build_model(data)?;
        let d = model.dim();
        let prior = match &self.prior {
            PriorSpec::Uniform { lower, upper } => Prior::uniform(DomainBox::new(lower.clone(), upper.clone())?)?,
            PriorSpec::Gaussian { mean, scale } => {
                Prior::gaussian_iso(mean.clone().unwrap_or_else(|| vec![0.0; d]), *scale)?
            }
            PriorSpec::Logistic { mean, scale } => {
                Prior::logistic(mean.clone().unwrap_or_else(|| vec![0.0; d]), *scale)?
            }
        };
        GeneralizedPosterior::new(model, prior, data_size(data))
    }

    pub fn fit(&self, gp: &GeneralizedPosterior<f64>) -> gbv::Result<FitResult<f64>> {
        let init = self.init.clone().unwrap_or_else(|| vec![0.0; gp.dim()]);
        let fit = find_minimizer(gp.model.as_ref(), &init, self.tol, self.max_iter)?;
        if !fit.converged {
            return Err(gbv::Error::NotConverged {
                grad_norm: fit.grad_norm,
                iterations: fit.iterations,
            });
        }
        Ok(fit)
    }

    pub fn audit(&self, gp: &GeneralizedPosterior<f64>, fit: &FitResult<f64>) -> gbv::Result<AuditReport<f64>> {
        let region = DomainBox::around(&fit.theta_n, self.audit_radius)?;
        let region = region.intersect(&gp.model.domain()).unwrap_or(region);
        bvm_audit(gp.model.as_ref(), fit, &region)
    }

    /// Chains run in parallel on streams `(n, 1 + c)` and are stacked in
    /// chain order.
    pub fn sample(&self, gp: &GeneralizedPosterior<f64>, fit: &FitResult<f64>) -> gbv::Result<DrawMatrix<f64>> {
        let chains: Vec<DrawMatrix<f64>> = (0..self.chains)
            .into_par_iter()
            .map(|c| {
                let settings = RwmSettings::new(self.steps, self.burn_in, self.seed)
                    .with_stream(substream(&[gp.n as u64, 1 + c as u64]))
                    .with_laplace_proposal(fit, gp.n)?;
                rwm_sample_with(gp, &fit.theta_n, &settings)
            })
            .collect::<gbv::Result<_>>()?;
        if chains.len() == 1 {
            return Ok(chains.into_iter().next().expect("one chain"));
        }
        let rows: Vec<Vec<f64>> = chains.iter().flat_map(|c| c.draws.to_rows()).collect();
        let mut all = chains[0].clone();
        all.draws = Matrix::from_rows(&rows)?;
        all.acceptance_rate = chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / chains.len() as f64;
        Ok(all)
    }

    /// Grid over `θ_n ± halfwidth · sd` per axis, clipped to the model and
    /// prior supports.
    pub fn grid(&self, gp: &GeneralizedPosterior<f64>, laplace: &LaplaceResult<f64>) -> gbv::Result<GridDensity<f64>> {
        let sd: Vec<f64> = laplace.covariance.diagonal().iter().map(|v| v.sqrt()).collect();
        let lower = laplace
            .mean
            .iter()
            .zip(&sd)
            .map(|(m, s)| m - self.grid_halfwidth * s)
            .collect();
        let upper = laplace
            .mean
            .iter()
            .zip(&sd)
            .map(|(m, s)| m + self.grid_halfwidth * s)
            .collect();
        let mut b = DomainBox::new(lower, upper)?;
        for clip in [gp.model.domain(), gp.prior.support()] {
            b = b.intersect(&clip).unwrap_or(b);
        }
        grid_density(gp, &b, self.grid_resolution)
    }

    /// Limit precision `H₀`: the objective Hessian at the true parameter when
    /// known, otherwise at `θ_n`.
    pub fn h0(&self, gp: &GeneralizedPosterior<f64>, fit: &FitResult<f64>) -> Matrix<f64> {
        match &self.theta_true {
            Some(t) if t.len() == gp.dim() && gp.model.domain().contains(t) => gp.model.hessian(t),
            _ => fit.hessian_at_min.clone(),
        }
    }

    pub fn coverage(&self, n: Option<usize>, spec: &CoverageSpec, calibrate: bool) -> gbv::Result<CoverageReport> {
        let g = self
            .generator(n)
            .ok_or_else(|| gbv::Error::InvalidArgument("coverage needs generated data".into()))?
            .clone();
        let theta0 = self.theta_true.clone().expect("validated with coverage");
        let settings = CoverageSettings {
            reps: spec.reps,
            rho: spec.rho,
            seed: substream(&[self.seed, generator_size(&g) as u64, 2]),
            calibrate,
            steps: spec.steps,
            burn_in: spec.burn_in,
            theta_init: self.init.clone(),
            newton_tol: self.tol,
            newton_max_iter: self.max_iter,
        };
        coverage_experiment(
            |rng| g.generate_with(rng),
            |data: &SimulatedData<f64>| self.build_posterior(data),
            &theta0,
            &settings,
        )
    }

    pub fn concentration_radii(&self) -> &[f64] {
        &self.concentration
    }

    pub fn wants_grid(&self, dim: usize) -> bool {
        dim <= 2 && (self.tv || !self.concentration.is_empty())
    }
}

fn generator_size(g: &GeneratorSpec) -> usize {
    match g {
        GeneratorSpec::ExpFam { n, .. }
        | GeneratorSpec::Glm { n, .. }
        | GeneratorSpec::Boltzmann { n, .. }
        | GeneratorSpec::Cox { n, .. }
        | GeneratorSpec::Location { n, .. } => *n,
        GeneratorSpec::Ising { m, side, .. } | GeneratorSpec::Gmrf { m, side, .. } => side.pow(*m as u32),
    }
}

pub fn data_size(data: &SimulatedData<f64>) -> usize {
    match data {
        SimulatedData::Scalars(y) => y.len(),
        SimulatedData::Glm(d) => d.n(),
        SimulatedData::Field(f) => f.values.len(),
        SimulatedData::Boltzmann(s) => s.len(),
        SimulatedData::Survival(s) => s.n(),
    }
}

fn generators(
    raw: &RawConfig,
    kind: ModelKind,
    family: ExpFam1P<f64>,
    glm: GlmKind,
    features: GmrfFeatures,
) -> Result<Vec<GeneratorSpec>, ConfigError> {
    let theta = raw.floats("data.theta").ok_or_else(|| raw.missing("data.theta"))?;
    let scalar = |what: &str| -> Result<f64, ConfigError> {
        match theta.as_slice() {
            [t] => Ok(*t),
            _ => Err(raw.error("data.theta", format!("{what} needs a single true parameter"))),
        }
    };
    if matches!(kind, ModelKind::Ising | ModelKind::Gmrf) {
        let m = raw.usize_or("data.m", 2);
        let side = raw.int("data.L").ok_or_else(|| raw.missing("data.L"))? as usize;
        let spec = if kind == ModelKind::Ising {
            let theta: [f64; 2] = theta
                .as_slice()
                .try_into()
                .map_err(|_| raw.error("data.theta", "Ising needs (field, coupling)"))?;
            GeneratorSpec::Ising {
                m,
                side,
                theta,
                sweeps: raw.usize_or("data.sweeps", 1000),
                burn_sweeps: raw.usize_or("data.burn_sweeps", 500),
            }
        } else {
            GeneratorSpec::Gmrf {
                m,
                side,
                features,
                theta,
                gamma: positive(raw, "model.gamma", 1.0)?,
            }
        };
        return Ok(vec![spec]);
    }
    let ns = raw.ints("data.n").ok_or_else(|| raw.missing("data.n"))?;
    if ns.contains(&0) {
        return Err(raw.error("data.n", "sample sizes must be positive"));
    }
    let covariates = match raw.str_or("data.covariates", "iid-gaussian") {
        "rademacher" => CovariateSpec::Rademacher,
        "bounded-uniform" => {
            let b = raw.floats("data.covariate_bounds").unwrap_or_else(|| vec![-1.0, 1.0]);
            match b.as_slice() {
                [a, b] if a < b => CovariateSpec::BoundedUniform { a: *a, b: *b },
                _ => return Err(raw.error("data.covariate_bounds", "expected [a, b] with a < b")),
            }
        }
        _ => CovariateSpec::IidGaussian {
            scale: positive(raw, "data.covariate_scale", 1.0)?,
        },
    };
    ns.into_iter()
        .map(|n| {
            Ok(match kind {
                ModelKind::IidExpFam => GeneratorSpec::ExpFam {
                    family,
                    theta: scalar("iid-expfam")?,
                    n,
                },
                ModelKind::Glm => GeneratorSpec::Glm {
                    glm,
                    theta: theta.clone(),
                    n,
                    covariates,
                    sigma: positive(raw, "data.sigma", 1.0)?,
                },
                ModelKind::Boltzmann => GeneratorSpec::Boltzmann {
                    d: raw.int("data.d").ok_or_else(|| raw.missing("data.d"))? as usize,
                    theta: theta.clone(),
                    n,
                },
                ModelKind::Cox => {
                    let baseline = match raw.str_or("data.baseline", "exponential") {
                        "weibull" => Baseline::Weibull {
                            k: positive(raw, "data.weibull_shape", 1.0)?,
                            lambda: positive(raw, "data.weibull_scale", 1.0)?,
                        },
                        _ => Baseline::Exponential {
                            c: positive(raw, "data.baseline_rate", 1.0)?,
                        },
                    };
                    let censoring = match raw.str_or("data.censoring", "none") {
                        "exponential" => Censoring::Exponential {
                            rate: positive(raw, "data.censoring_rate", 1.0)?,
                        },
                        "uniform" => Censoring::Uniform {
                            c: positive(raw, "data.censoring_bound", 1.0)?,
                        },
                        _ => Censoring::Exponential { rate: 0.0 },
                    };
                    GeneratorSpec::Cox {
                        n,
                        theta: theta.clone(),
                        baseline,
                        censoring,
                        covariates: if raw.has("data.covariates") {
                            covariates
                        } else {
                            CovariateSpec::BoundedUniform { a: -1.0, b: 1.0 }
                        },
                    }
                }
                ModelKind::Median => {
                    let scale = positive(raw, "data.noise_scale", 1.0)?;
                    let noise = match raw.str_or("data.noise", "gaussian") {
                        "cauchy" => Noise::Cauchy { gamma: scale },
                        "mixture" => Noise::Mixture {
                            eps: raw.float_or("data.contamination", 0.0),
                            outlier_scale: positive(raw, "data.outlier_scale", 10.0)?,
                        },
                        _ => Noise::Gaussian { sigma: scale },
                    };
                    GeneratorSpec::Location {
                        n,
                        theta0: scalar("median")?,
                        noise,
                    }
                }
                ModelKind::Ising | ModelKind::Gmrf => unreachable!(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerSummary {
    pub draws: usize,
    pub chains: usize,
    pub acceptance_rate: f64,
    pub min_ess: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationEntry {
    pub eps: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub n: usize,
    pub fit: FitResult<f64>,
    pub laplace: LaplaceResult<f64>,
    pub audit: Option<AuditReport<f64>>,
    pub sampler: Option<SamplerSummary>,
    pub tv: Option<f64>,
    /// `(‖mean‖, ‖cov − H₀⁻¹‖_F)` in rescaled coordinates, for `D > 2`.
    pub moment_gap: Option<(f64, f64)>,
    pub concentration: Vec<ConcentrationEntry>,
    pub sandwich: Option<SandwichEstimate<f64>>,
    pub coverage_raw: Option<CoverageReport>,
    pub coverage_calibrated: Option<CoverageReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultBundle {
    pub experiment: String,
    pub model: String,
    pub provenance: Provenance,
    pub runs: Vec<RunResult>,
}

impl Experiment {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Every enabled stage for one sample size. Artifacts go to `dir`.
    pub fn run_one(&self, n: Option<usize>, dir: &Path) -> Result<(String, RunResult), CliError> {
        std::fs::create_dir_all(dir)?;
        let data = match &self.data {
            DataSource::File(p) => self.read_data(p)?,
            DataSource::Generate(_) => stage("simulate", self.generate(n))?,
        };
        let gp = stage("model", self.build_posterior(&data))?;
        let model_name = gp.model.name();
        let fit = stage("fit", self.fit(&gp))?;
        let laplace = stage("laplace", laplace_log_normalizer(&gp, &fit))?;
        let audit = if self.audit {
            Some(stage("audit", self.audit(&gp, &fit))?)
        } else {
            None
        };
        let draws = if self.sampler_enabled {
            let d = stage("sample", self.sample(&gp, &fit))?;
            io::write_draws(&dir.join("draws.csv"), &d)?;
            Some(d)
        } else {
            None
        };
        let sampler = draws.as_ref().map(|d| SamplerSummary {
            draws: d.len(),
            chains: self.chains,
            acceptance_rate: d.acceptance_rate,
            min_ess: effective_sample_size(d).ok().map(|e| e.min()),
        });
        let grid = if self.wants_grid(gp.dim()) {
            let g = stage("grid", self.grid(&gp, &laplace))?;
            io::write_grid_csv(&dir.join("grid.csv"), &g)?;
            Some(g)
        } else {
            None
        };
        let h0 = self.h0(&gp, &fit);
        let mut tv = None;
        let mut moment_gap = None;
        if self.tv {
            match (&grid, &draws) {
                (Some(g), _) => tv = Some(stage("tv", tv_to_normal_limit(g, &fit.theta_n, gp.n, &h0))?),
                (None, Some(d)) => moment_gap = Some(stage("tv", moment_gap_to_normal(d, &fit.theta_n, gp.n, &h0))?),
                (None, None) => {
                    return Err(CliError::Usage(
                        "diagnostics.tv with D > 2 needs sampler.enabled = true".into(),
                    ))
                }
            }
        }
        let mut concentration = Vec::new();
        if let Some(theta0) = &self.theta_true {
            for &eps in &self.concentration {
                let source = match (&grid, &draws) {
                    (Some(g), _) => MassSource::Grid(g),
                    (None, Some(d)) => MassSource::Draws(d),
                    (None, None) => {
                        return Err(CliError::Usage(
                            "concentration with D > 2 needs sampler.enabled = true".into(),
                        ))
                    }
                };
                let mass = stage("concentration", concentration_mass(source, theta0, eps))?;
                concentration.push(ConcentrationEntry { eps, mass });
            }
        }
        let sandwich = if self.sandwich {
            Some(stage("sandwich", sandwich_covariance(gp.model.as_ref(), &fit))?)
        } else {
            None
        };
        let (coverage_raw, coverage_calibrated) = match &self.coverage {
            Some(spec) => {
                let raw = stage("coverage", self.coverage(n, spec, false))?;
                let cal = if spec.calibrate {
                    Some(stage("coverage", self.coverage(n, spec, true))?)
                } else {
                    None
                };
                (Some(raw), cal)
            }
            None => (None, None),
        };
        Ok((
            model_name,
            RunResult {
                n: gp.n,
                fit,
                laplace,
                audit,
                sampler,
                tv,
                moment_gap,
                concentration,
                sandwich,
                coverage_raw,
                coverage_calibrated,
            },
        ))
    }

    /// The full pipeline for every sample size. A single run writes its
    /// artifacts into the output directory, several runs into `n<size>/`.
    pub fn run(&self) -> Result<ResultBundle, CliError> {
        std::fs::create_dir_all(&self.output)?;
        let sizes = self.sizes();
        let mut runs = Vec::with_capacity(sizes.len());
        let mut model = String::new();
        for n in &sizes {
            let dir = match n {
                Some(n) if sizes.len() > 1 => self.output.join(format!("n{n}")),
                _ => self.output.clone(),
            };
            let (name, run) = self.run_one(*n, &dir)?;
            log::info!("{}: n = {} done", self.name, run.n);
            model = name;
            runs.push(run);
        }
        let bundle = ResultBundle {
            experiment: self.name.clone(),
            model,
            provenance: self.provenance(),
            runs,
        };
        write_json(&self.output.join("result.json"), &bundle)?;
        Ok(bundle)
    }
}

/// Tags a library failure with the stage it came from.
pub fn stage<T>(name: &'static str, r: gbv::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_stage(name, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(gbv::Error::from)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S, CliError> {
    if !path.exists() {
        return Err(CliError::Missing(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text).map_err(gbv::Error::from)?)
}
