use std::sync::Arc;

use gbv::models::{build_glm, ExpFam1P, IidExpFamModel};
use gbv::rng::stream_rng;
use gbv::simulate::{gen_expfam, gen_glm, CovariateSpec, GlmKind};
use gbv::{find_minimizer, laplace_log_normalizer, rwm_sample, GeneralizedPosterior, Prior};

#[test]
fn f32_pipeline_tracks_f64() {
    let mut rng = stream_rng(3, 0);
    let data32 = gen_glm::<f32, _>(
        GlmKind::Logistic,
        &[0.5, -1.0],
        500,
        &CovariateSpec::IidGaussian { scale: 1.0 },
        1.0,
        &mut rng,
    )
    .unwrap();
    let mut rng = stream_rng(3, 0);
    let data64 = gen_glm::<f64, _>(
        GlmKind::Logistic,
        &[0.5, -1.0],
        500,
        &CovariateSpec::IidGaussian { scale: 1.0 },
        1.0,
        &mut rng,
    )
    .unwrap();
    let f32fit = find_minimizer(&build_glm(&data32).unwrap(), &[0.0f32; 2], 1e-4, 100).unwrap();
    let f64fit = find_minimizer(&build_glm(&data64).unwrap(), &[0.0f64; 2], 1e-10, 100).unwrap();
    assert!(f32fit.converged);
    for j in 0..2 {
        assert!((f32fit.theta_n[j] as f64 - f64fit.theta_n[j]).abs() < 1e-3);
    }
}

#[test]
fn f32_laplace_and_sampler() {
    let mut rng = stream_rng(4, 0);
    let ys: Vec<f32> = gen_expfam(ExpFam1P::Poisson, 0.3, 200, &mut rng).unwrap();
    let m = IidExpFamModel::from_observations(ExpFam1P::Poisson, &ys).unwrap();
    let gp = GeneralizedPosterior::new(Arc::new(m), Prior::gaussian_iso(vec![0.0f32], 3.0).unwrap(), 200).unwrap();
    let fit = find_minimizer(gp.model.as_ref(), &[0.0f32], 1e-4, 100).unwrap();
    let lr = laplace_log_normalizer(&gp, &fit).unwrap();
    assert!(lr.log_zhat.is_finite());
    let draws = rwm_sample(&gp, &fit.theta_n, 4000, 1000, 9).unwrap();
    let mean: f32 = draws.draws.column(0).iter().sum::<f32>() / draws.len() as f32;
    assert!((mean - fit.theta_n[0]).abs() < 4.0 * lr.covariance[(0, 0)].sqrt());
}
