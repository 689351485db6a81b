//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! `cargo test -p gbv --test acceptance -- --nocapture`

use std::sync::Arc;
use std::time::Instant;

use gbv::diagnostics::{
    concentration_mass, coverage_experiment, sandwich_covariance, tv_to_normal_limit, CoverageSettings, MassSource,
};
use gbv::models::{
    boltzmann_pseudolik, boltzmann_pseudolik_weighted, build_glm, cox_partial_model, gmrf_pseudolik_with,
    ising_pseudolik, median_location_model, ExpFam1P, FieldSample, GmrfFeatures, IidExpFamModel, QuadraticModel,
    SurvivalDataset, SymmetricCdf, TorusLattice,
};
use gbv::rng::{stream_rng, substream, StreamRng};
use gbv::simulate::{
    draw_covariates, gen_boltzmann_exact, gen_cox, gen_expfam, gen_glm, gen_gmrf, gen_ising_gibbs, gen_location,
    Baseline, Censoring, CovariateSpec, GlmKind, Noise,
};
use gbv::{
    bvm_audit, find_minimizer, grid_density, laplace_log_normalizer, validate_model, DomainBox, FitResult,
    GeneralizedPosterior, GridDensity, Matrix, ObjectiveModel, Prior, Tempered,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fit(model: &dyn ObjectiveModel<f64>, init: &[f64]) -> FitResult<f64> {
    let f = find_minimizer(model, init, 1e-8, 200).expect("optimizer error");
    assert!(f.converged, "fit did not converge: {}", f.grad_norm);
    f
}

fn posterior(model: impl ObjectiveModel<f64> + 'static, prior: Prior<f64>, n: usize) -> GeneralizedPosterior<f64> {
    GeneralizedPosterior::new(Arc::new(model), prior, n).unwrap()
}

/// Grid over `θ_n ± 12` Laplace standard deviations, clipped to the model domain.
fn grid_around(gp: &GeneralizedPosterior<f64>, fit: &FitResult<f64>, resolution: usize) -> GridDensity<f64> {
    let lr = laplace_log_normalizer(gp, fit).unwrap();
    let sd: Vec<f64> = lr.covariance.diagonal().iter().map(|v| v.sqrt()).collect();
    let lo = fit.theta_n.iter().zip(&sd).map(|(m, s)| m - 12.0 * s).collect();
    let hi = fit.theta_n.iter().zip(&sd).map(|(m, s)| m + 12.0 * s).collect();
    let b = DomainBox::new(lo, hi).unwrap();
    let b = b.intersect(&gp.model.domain()).unwrap_or(b);
    grid_density(gp, &b, resolution).unwrap()
}

fn uniform_probes(rng: &mut StreamRng, count: usize, center: &[f64], half: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| center.iter().map(|c| c + rng.random_range(-half..half)).collect())
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn iqr(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let h = p * (xs.len() - 1) as f64;
        let (i, f) = (h.floor() as usize, h.fract());
        xs[i] + f * (xs[(i + 1).min(xs.len() - 1)] - xs[i])
    };
    q(0.75) - q(0.25)
}

/// Bernoulli data with exactly `round(p n)` successes.
fn quota_bernoulli(n: usize, p: f64) -> Vec<f64> {
    let ones = (p * n as f64).round() as usize;
    (0..n).map(|i| if i < ones { 1.0 } else { 0.0 }).collect()
}

fn derivatives() -> Outcome {
    let mut rng = stream_rng(101, 0);
    let mut zoo: Vec<(String, Box<dyn ObjectiveModel<f64>>, Vec<f64>, f64)> = Vec::new();

    for (family, theta) in [
        (ExpFam1P::Gaussian { sigma2: 1.5 }, 0.3),
        (ExpFam1P::BernoulliLogit, -0.4),
        (ExpFam1P::Poisson, 0.7),
        (ExpFam1P::PlusMinusBinary, 0.2),
    ] {
        let ys: Vec<f64> = gen_expfam(family, theta, 200, &mut rng).unwrap();
        let m = IidExpFamModel::from_observations(family, &ys).unwrap();
        zoo.push((format!("iid-{}", family.name()), Box::new(m), vec![theta], 1.0));
    }
    let cov = CovariateSpec::IidGaussian { scale: 1.0 };
    for kind in [GlmKind::Linear, GlmKind::Logistic, GlmKind::Poisson] {
        let theta = [0.3, -0.5, 0.2];
        let data = gen_glm(kind, &theta, 300, &cov, 1.0, &mut rng).unwrap();
        zoo.push((
            format!("glm-{kind:?}"),
            Box::new(build_glm(&data).unwrap()),
            theta.to_vec(),
            0.5,
        ));
    }
    let lattice = TorusLattice::new(2, 12).unwrap();
    let field = gen_gmrf(&lattice, GmrfFeatures::Axial, &[0.1, 0.15], 1.0, &mut rng).unwrap();
    for features in [GmrfFeatures::Isotropic, GmrfFeatures::Axial, GmrfFeatures::PerNeighbor] {
        let m = gmrf_pseudolik_with(&field, 1.0, features).unwrap();
        let d = features.dim(2);
        zoo.push((format!("gmrf-{features:?}"), Box::new(m), vec![0.1; d], 0.2));
    }
    let spins: FieldSample<f64> = gen_ising_gibbs(&lattice, [0.0, 0.2], 200, 100, &mut rng).unwrap();
    zoo.push((
        "ising".into(),
        Box::new(ising_pseudolik(&spins).unwrap()),
        vec![0.0, 0.2],
        0.5,
    ));
    let theta_b = [0.2, -0.1, 0.3, 0.3, -0.2, 0.1];
    let (_, samples) = gen_boltzmann_exact(3, &theta_b, 500, &mut rng).unwrap();
    zoo.push((
        "boltzmann".into(),
        Box::new(boltzmann_pseudolik(&samples).unwrap()),
        theta_b.to_vec(),
        0.5,
    ));
    let bounded = CovariateSpec::BoundedUniform { a: -1.0, b: 1.0 };
    let surv = gen_cox(
        200,
        &[0.8, -0.4],
        Baseline::Exponential { c: 1.0 },
        Censoring::Uniform { c: 3.0 },
        &bounded,
        &mut rng,
    )
    .unwrap();
    zoo.push((
        "cox".into(),
        Box::new(cox_partial_model(surv).unwrap()),
        vec![0.8, -0.4],
        1.0,
    ));
    let cauchy: Vec<f64> = gen_location(101, 0.0, Noise::Cauchy { gamma: 1.0 }, &mut rng).unwrap();
    for cdf in [SymmetricCdf::Logistic, SymmetricCdf::Gaussian] {
        let m = median_location_model(&cauchy, cdf).unwrap();
        let c = m.median();
        zoo.push((format!("median-{}", cdf.name()), Box::new(m), vec![c], 3.0));
    }

    let mut worst = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for (name, model, center, half) in &zoo {
        let probes = uniform_probes(&mut rng, 20, center, *half);
        let rep = validate_model(model.as_ref(), &probes, 1e-5);
        worst.0 = worst.0.max(rep.max_gradient_error());
        worst.1 = worst.1.max(rep.max_hessian_error());
        if rep.checks.len() != 20 || !rep.passed() {
            failures.push(format!(
                "{name} (checked {}, grad {:.1e}, hess {:.1e})",
                rep.checks.len(),
                rep.max_gradient_error(),
                rep.max_hessian_error()
            ));
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{} models x 20 points, max grad err {:.1e}, max hess err {:.1e}{}",
            zoo.len(),
            worst.0,
            worst.1,
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failures.join(", "))
            }
        ),
    )
}

fn laplace_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut grid_err = f64::NAN;
    for n in [4usize, 100, 10_000] {
        let model = QuadraticModel::isotropic(vec![0.0], 1.0).unwrap();
        let gp = posterior(model, Prior::gaussian_iso(vec![0.0], 1.0).unwrap(), n);
        let f = fit(gp.model.as_ref(), &[0.7]);
        let lr = laplace_log_normalizer(&gp, &f).unwrap();
        let log_z = -0.5 * ((n + 1) as f64).ln();
        let ratio = (log_z - lr.log_zhat).exp();
        worst = worst.max((ratio - (n as f64 / (n + 1) as f64).sqrt()).abs());
        if n == 4 {
            let b = DomainBox::new(vec![-12.0], vec![12.0]).unwrap();
            let g = grid_density(&gp, &b, 8192).unwrap();
            grid_err = (g.log_z_grid - log_z).abs();
        }
    }
    check(
        worst < 1e-9 && grid_err < 1e-4,
        format!("max |z/zhat - sqrt(n/(n+1))| = {worst:.1e}, grid log z error at n=4 = {grid_err:.1e}"),
    )
}

fn bernoulli_posterior(n: usize) -> (GeneralizedPosterior<f64>, FitResult<f64>) {
    let ys = quota_bernoulli(n, 0.3);
    let model = IidExpFamModel::from_observations(ExpFam1P::BernoulliLogit, &ys).unwrap();
    let gp = posterior(model, Prior::logistic(vec![0.0], 1.0).unwrap(), n);
    let f = fit(gp.model.as_ref(), &[0.0]);
    (gp, f)
}

fn theta0_bernoulli() -> f64 {
    (0.3f64 / 0.7).ln()
}

fn bvm_tv_decay() -> Outcome {
    let t0 = theta0_bernoulli();
    let h0 = Matrix::from_diagonal(&[0.3 * 0.7]);
    let tv: Vec<f64> = [50usize, 200, 800]
        .iter()
        .map(|&n| {
            let (gp, f) = bernoulli_posterior(n);
            assert!((gp.model.hessian(&[t0])[(0, 0)] - 0.21).abs() < 1e-12);
            let g = grid_around(&gp, &f, 4096);
            tv_to_normal_limit(&g, &f.theta_n, n, &h0).unwrap()
        })
        .collect();
    check(
        tv[0] > tv[1] && tv[1] > tv[2] && tv[2] < 0.1,
        format!("TV at n=50,200,800: {:.4}, {:.4}, {:.4}", tv[0], tv[1], tv[2]),
    )
}

fn concentration() -> Outcome {
    let t0 = theta0_bernoulli();
    let mass = |n: usize| {
        let (gp, f) = bernoulli_posterior(n);
        let b = DomainBox::new(vec![t0 - 3.0], vec![t0 + 3.0]).unwrap();
        let g = grid_density(&gp, &b, 8192).unwrap();
        let _ = f;
        concentration_mass(MassSource::Grid(&g), &[t0], 0.1).unwrap()
    };
    let (small, large) = (mass(50), mass(5000));
    check(
        large >= 0.99 && large > small,
        format!("mass of B(theta0, 0.1): n=50 {small:.4}, n=5000 {large:.6}"),
    )
}

fn normal_mean_setup(n: usize) -> impl Fn(&mut StreamRng) -> gbv::Result<Vec<f64>> + Sync {
    move |rng: &mut StreamRng| gen_expfam(ExpFam1P::Gaussian { sigma2: 1.0 }, 0.0, n, rng)
}

fn normal_mean_coverage() -> Outcome {
    let build = |ys: &Vec<f64>| {
        let m = IidExpFamModel::from_observations(ExpFam1P::Gaussian { sigma2: 1.0 }, ys)?;
        GeneralizedPosterior::new(Arc::new(m), Prior::gaussian_iso(vec![0.0], 10.0)?, ys.len())
    };
    let settings = CoverageSettings::new(2000, 0.9, 505);
    let rep = coverage_experiment(normal_mean_setup(100), build, &[0.0], &settings).unwrap();
    check(
        rep.failed == 0 && (0.88..=0.92).contains(&rep.coverage),
        format!(
            "coverage {:.4} over {} reps (Wilson {:.3}-{:.3})",
            rep.coverage, rep.replications, rep.wilson_interval.0, rep.wilson_interval.1
        ),
    )
}

fn power_posterior_calibration() -> Outcome {
    let build = |ys: &Vec<f64>| {
        let m = IidExpFamModel::from_observations(ExpFam1P::Gaussian { sigma2: 1.0 }, ys)?;
        GeneralizedPosterior::new(
            Arc::new(Tempered::new(m, 2.0)?),
            Prior::gaussian_iso(vec![0.0], 10.0)?,
            ys.len(),
        )
    };
    let settings = CoverageSettings::new(2000, 0.9, 606);
    let raw = coverage_experiment(normal_mean_setup(100), build, &[0.0], &settings).unwrap();
    let cal = coverage_experiment(
        normal_mean_setup(100),
        build,
        &[0.0],
        &settings.clone().calibrated(true),
    )
    .unwrap();
    check(
        raw.failed == 0
            && cal.failed == 0
            && (0.735..=0.775).contains(&raw.coverage)
            && (0.88..=0.92).contains(&cal.coverage),
        format!(
            "raw {:.4} (closed form 0.7553), calibrated {:.4}, 2000 reps",
            raw.coverage, cal.coverage
        ),
    )
}

fn sandwich_consistency() -> Outcome {
    let theta = [0.5, -1.0];
    let cov = CovariateSpec::IidGaussian { scale: 1.0 };
    let gap = |n: usize| -> f64 {
        (0..20u64)
            .map(|s| {
                let mut rng = stream_rng(707, substream(&[n as u64, s]));
                let data = gen_glm(GlmKind::Logistic, &theta, n, &cov, 1.0, &mut rng).unwrap();
                let m = build_glm(&data).unwrap();
                let f = fit(&m, &[0.0, 0.0]);
                let sw = sandwich_covariance(&m, &f).unwrap();
                sw.a_hat.sub(&sw.j_hat).frobenius_norm() / sw.a_hat.frobenius_norm()
            })
            .sum::<f64>()
            / 20.0
    };
    let (small, large) = (gap(500), gap(5000));
    check(
        large < small && large < 0.1,
        format!("mean |A-J|_F/|A|_F: n=500 {small:.4}, n=5000 {large:.4}"),
    )
}

fn boltzmann_recovery() -> Outcome {
    let theta = [0.2, -0.1, 0.3, 0.3, -0.2, 0.1];
    let close = (0..20u64)
        .filter(|&s| {
            let mut rng = stream_rng(808, s);
            let (_, samples) = gen_boltzmann_exact::<f64, _>(3, &theta, 20_000, &mut rng).unwrap();
            let m = boltzmann_pseudolik(&samples).unwrap();
            let f = fit(&m, &[0.0; 6]);
            f.theta_n.iter().zip(&theta).all(|(a, b)| (a - b).abs() <= 0.15)
        })
        .count();
    let mut rng = stream_rng(808, 99);
    let (table, _) = gen_boltzmann_exact::<f64, _>(3, &theta, 1, &mut rng).unwrap();
    let m = boltzmann_pseudolik_weighted(&table.states(), &table.probabilities).unwrap();
    let f = find_minimizer(&m, &[0.0; 6], 1e-12, 200).unwrap();
    let exact_err = f
        .theta_n
        .iter()
        .zip(&theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        close >= 18 && f.converged && exact_err <= 1e-8,
        format!("{close}/20 seeds within 0.15; exact-table error {exact_err:.1e}"),
    )
}

fn ising_pipeline() -> Outcome {
    let lattice = TorusLattice::new(2, 64).unwrap();
    let truth = [0.0, 0.2];
    let mut fits = Vec::new();
    let mut audits_ok = true;
    for s in 0..20u64 {
        let mut rng = stream_rng(909, s);
        let field: FieldSample<f64> = gen_ising_gibbs(&lattice, truth, 1000, 500, &mut rng).unwrap();
        let m = ising_pseudolik(&field).unwrap();
        let f = fit(&m, &[0.0, 0.0]);
        if s == 0 {
            let region = DomainBox::around(&f.theta_n, 0.5).unwrap();
            let a = bvm_audit(&m, &f, &region).unwrap();
            audits_ok = a.min_eigenvalue_h0 > 0.0 && a.third_bound_estimate.is_finite() && a.verdicts.all_pass();
        }
        fits.push(f.theta_n.to_vec());
    }
    let med = [
        median(fits.iter().map(|t| t[0]).collect()),
        median(fits.iter().map(|t| t[1]).collect()),
    ];
    let err = (med[0] - truth[0]).abs().max((med[1] - truth[1]).abs());
    check(
        err <= 0.05 && audits_ok,
        format!(
            "median theta_n ({:.4}, {:.4}), error {err:.4}; audit passes: {audits_ok}",
            med[0], med[1]
        ),
    )
}

fn cox_checks() -> Outcome {
    let x = Matrix::from_rows(&[vec![0.3], vec![-1.0], vec![2.0]]).unwrap();
    let desk = SurvivalDataset::new(vec![1.0, 2.0, 3.0], vec![true; 3], x).unwrap();
    let f0 = cox_partial_model(desk).unwrap().value(&[0.0]);
    let oracle = ((2.0f64 / 3.0).ln() + (1.0f64 / 3.0).ln()) / 3.0;
    let desk_ok = (f0 - oracle).abs() < 1e-9 && (f0 - -0.501359).abs() < 5e-7;

    let mut rng = stream_rng(1010, 0);
    let n = 40;
    let xs: Matrix<f64> = draw_covariates(&CovariateSpec::IidGaussian { scale: 1.0 }, n, 2, &mut rng).unwrap();
    let times: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..4.0)).collect();
    let events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
    let cubed = times.iter().map(|t| t * t * t).collect();
    let a = cox_partial_model(SurvivalDataset::new(times, events.clone(), xs.clone()).unwrap()).unwrap();
    let b = cox_partial_model(SurvivalDataset::new(cubed, events, xs).unwrap()).unwrap();
    let rank_gap = (0..10)
        .map(|_| {
            let t = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            (a.value(&t) - b.value(&t)).abs()
        })
        .fold(0.0, f64::max);

    let bounded = CovariateSpec::BoundedUniform { a: -1.0, b: 1.0 };
    let within = (0..100u64)
        .filter(|&r| {
            let mut rng = stream_rng(1010, substream(&[1, r]));
            let data = gen_cox(
                2000,
                &[1.0],
                Baseline::Exponential { c: 1.0 },
                Censoring::Exponential { rate: 0.3 },
                &bounded,
                &mut rng,
            )
            .unwrap();
            let m = cox_partial_model(data).unwrap();
            let f = fit(&m, &[0.0]);
            let se = sandwich_covariance(&m, &f).unwrap().sandwich_cov[(0, 0)].sqrt();
            (f.theta_n[0] - 1.0).abs() <= 3.0 * se
        })
        .count();
    check(
        desk_ok && rank_gap <= 1e-12 && within >= 90,
        format!("f_n(0) = {f0:.9}; t->t^3 max gap {rank_gap:.1e}; {within}/100 fits within 3 sandwich SEs"),
    )
}

fn median_checks() -> Outcome {
    let mut rng = stream_rng(1111, 0);
    let data: Vec<f64> = gen_location(401, 0.0, Noise::Cauchy { gamma: 1.0 }, &mut rng).unwrap();
    let m = median_location_model(&data, SymmetricCdf::Logistic).unwrap();
    let f = fit(&m, &[m.median() + 1.0]);
    let region = DomainBox::around(&f.theta_n, 1.0).unwrap();
    let audit = bvm_audit(&m, &f, &region).unwrap();
    let h0_err = (audit.min_eigenvalue_h0 - 0.25).abs();

    let prior = || Prior::gaussian_iso(vec![0.0], 10.0).unwrap();
    let half_width = |n: usize, seed: u64| {
        let mut rng = stream_rng(1111, seed);
        let ys: Vec<f64> = gen_location(n, 0.0, Noise::Cauchy { gamma: 1.0 }, &mut rng).unwrap();
        let gp = posterior(median_location_model(&ys, SymmetricCdf::Logistic).unwrap(), prior(), n);
        let f = fit(gp.model.as_ref(), &[0.0]);
        let g = grid_around(&gp, &f, 4096);
        0.5 * (g.quantile(0.95).unwrap() - g.quantile(0.05).unwrap())
    };
    let ratio = half_width(200, 1) / half_width(800, 2);

    let mut gauss_means = Vec::new();
    let mut median_means = Vec::new();
    for r in 0..50u64 {
        let mut rng = stream_rng(1111, substream(&[2, r]));
        let ys: Vec<f64> = gen_location(200, 0.0, Noise::Cauchy { gamma: 1.0 }, &mut rng).unwrap();
        let gm = IidExpFamModel::from_observations(ExpFam1P::Gaussian { sigma2: 1.0 }, &ys).unwrap();
        let gp = posterior(gm, prior(), ys.len());
        let f = fit(gp.model.as_ref(), &[0.0]);
        gauss_means.push(grid_around(&gp, &f, 1024).mean()[0]);
        let gp = posterior(
            median_location_model(&ys, SymmetricCdf::Logistic).unwrap(),
            prior(),
            ys.len(),
        );
        let f = fit(gp.model.as_ref(), &[0.0]);
        median_means.push(grid_around(&gp, &f, 1024).mean()[0]);
    }
    let spread = iqr(gauss_means) / iqr(median_means);
    check(
        h0_err <= 1e-8 && (1.7..=2.3).contains(&ratio) && spread >= 5.0,
        format!(
            "H0 = 0.25 + {h0_err:.1e}; width(200)/width(800) = {ratio:.3}; IQR spread ratio gaussian/median = {spread:.1}"
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("derivative correctness", derivatives),
        ("Laplace oracle", laplace_oracle),
        ("BvM TV decay", bvm_tv_decay),
        ("concentration", concentration),
        ("coverage under correct specification", normal_mean_coverage),
        ("miscoverage and affine calibration", power_posterior_calibration),
        ("sandwich consistency", sandwich_consistency),
        ("Boltzmann pseudo-true recovery", boltzmann_recovery),
        ("Ising pipeline", ising_pipeline),
        ("Cox desk oracle", cox_checks),
        ("median model", median_checks),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
