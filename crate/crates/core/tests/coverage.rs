use std::sync::Arc;

use gbv::diagnostics::coverage::{coverage_experiment, wilson_interval, CoverageSettings, WILSON_Z};
use gbv::models::{ExpFam1P, IidExpFamModel};
use gbv::rng::StreamRng;
use gbv::simulate::gen_expfam;
use gbv::{GeneralizedPosterior, Prior, Tempered};

fn data(rng: &mut StreamRng) -> gbv::Result<Vec<f64>> {
    gen_expfam(ExpFam1P::Gaussian { sigma2: 1.0 }, 0.0, 100, rng)
}

fn power_posterior(ys: &Vec<f64>) -> gbv::Result<GeneralizedPosterior<f64>> {
    let m = IidExpFamModel::from_observations(ExpFam1P::Gaussian { sigma2: 1.0 }, ys)?;
    GeneralizedPosterior::new(
        Arc::new(Tempered::new(m, 2.0)?),
        Prior::gaussian_iso(vec![0.0], 10.0)?,
        ys.len(),
    )
}

#[test]
fn calibration_moves_coverage_towards_nominal() {
    let settings = CoverageSettings::new(2000, 0.9, 77).with_chain(6000, 1000);
    let raw = coverage_experiment(data, power_posterior, &[0.0], &settings).unwrap();
    let cal = coverage_experiment(data, power_posterior, &[0.0], &settings.clone().calibrated(true)).unwrap();
    let noise = 2.0 * (0.9f64 * 0.1 / 2000.0).sqrt();
    assert!(
        (cal.coverage - 0.9).abs() <= (raw.coverage - 0.9).abs() + noise,
        "{} {}",
        raw.coverage,
        cal.coverage
    );
    assert!(
        raw.wilson_interval.1 < 0.9,
        "raw sets should undercover: {:?}",
        raw.wilson_interval
    );
    let (lo, hi) = wilson_interval(cal.hits, cal.replications, WILSON_Z);
    assert!(lo <= 0.9 && 0.9 <= hi, "calibrated interval {lo}..{hi}");
}

#[test]
fn too_few_replications_are_rejected() {
    let settings = CoverageSettings::new(50, 0.9, 1);
    assert!(coverage_experiment(data, power_posterior, &[0.0], &settings).is_err());
}

#[test]
fn replications_are_reproducible() {
    let settings = CoverageSettings::new(100, 0.8, 5).with_chain(3000, 500);
    let a = coverage_experiment(data, power_posterior, &[0.0], &settings).unwrap();
    let b = coverage_experiment(data, power_posterior, &[0.0], &settings).unwrap();
    assert_eq!((a.hits, a.replications), (b.hits, b.replications));
}
