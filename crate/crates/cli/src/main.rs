mod config;
mod error;
mod pipeline;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use gbv::diagnostics::{concentration_mass, moment_gap_to_normal, tv_to_normal_limit, MassSource};
use gbv::io;
use gbv::{laplace_log_normalizer, FitResult, GeneralizedPosterior};

use crate::config::RawConfig;
use crate::error::CliError;
use crate::pipeline::{read_json, stage, write_json, ConcentrationEntry, CoverageSpec, DataSource, Experiment};

#[derive(Parser)]
#[command(name = "gbv", version, about = "Generalized-posterior experiment runner")]
struct Cli {
    /// Experiment config (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; overrides GBV_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every enabled stage for every sample size; writes result.json.
    Run,
    /// Generates data.csv.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Minimizes f_n; writes fit.json.
    Fit,
    /// Laplace normalizer from fit.json; writes laplace.json.
    Laplace,
    /// Random-walk Metropolis draws from fit.json; writes draws.csv.
    Sample,
    /// BvM condition audit at the fit; writes audit.json.
    Audit,
    /// Distance to the normal limit and concentration; writes tv.json.
    Tv,
    /// Credible-set coverage simulation; writes coverage.json.
    Coverage {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        /// Also run the sandwich-calibrated experiment.
        #[arg(long)]
        calibrate: bool,
    },
    /// Aggregates result.json files (or run directories) into one CSV.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("GBV_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("GBV_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Command::Report { inputs, csv } = &cli.command {
        let table = report::report(&report::resolve(inputs))?;
        match csv {
            Some(p) => std::fs::write(p, table)?,
            None => print!("{table}"),
        }
        return Ok(());
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let raw = RawConfig::load(path)?;
    let exp = Experiment::from_raw(&raw, cli.seed, cli.out.clone())?;
    let dir = exp.output.clone();
    std::fs::create_dir_all(&dir)?;
    match cli.command {
        Command::Run => {
            let bundle = exp.run()?;
            for r in &bundle.runs {
                let tv = r.tv.map_or_else(|| "-".into(), |v| format!("{v:.6}"));
                println!("n = {:>7}  log_zhat = {:.6}  tv = {tv}", r.n, r.laplace.log_zhat);
            }
            println!("wrote {}", dir.join("result.json").display());
        }
        Command::Simulate { n } => {
            let data = stage("simulate", exp.generate(n))?;
            let p = dir.join("data.csv");
            exp.write_data(&p, &data)?;
            println!("wrote {}", p.display());
        }
        Command::Fit => {
            let gp = posterior(&exp, &dir)?;
            let fit = stage("fit", exp.fit(&gp))?;
            write_json(&dir.join("fit.json"), &fit)?;
            println!("theta_n = {:?}", fit.theta_n.to_vec());
            println!("grad_norm = {:e}", fit.grad_norm);
        }
        Command::Laplace => {
            let (gp, fit) = fitted(&exp, &dir)?;
            let lr = stage("laplace", laplace_log_normalizer(&gp, &fit))?;
            write_json(&dir.join("laplace.json"), &lr)?;
            println!("log_zhat = {}", lr.log_zhat);
        }
        Command::Sample => {
            let (gp, fit) = fitted(&exp, &dir)?;
            let draws = stage("sample", exp.sample(&gp, &fit))?;
            io::write_draws(&dir.join("draws.csv"), &draws)?;
            println!("acceptance = {:.4}", draws.acceptance_rate);
        }
        Command::Audit => {
            let (gp, fit) = fitted(&exp, &dir)?;
            let report = stage("audit", exp.audit(&gp, &fit))?;
            write_json(&dir.join("audit.json"), &report)?;
            println!("min_eigenvalue = {}", report.min_eigenvalue_h0);
            println!("all_pass = {}", report.verdicts.all_pass());
        }
        Command::Tv => tv_stage(&exp, &dir)?,
        Command::Coverage {
            n,
            reps,
            rho,
            calibrate,
        } => {
            let base = exp.coverage.clone().unwrap_or(CoverageSpec {
                rho: 0.9,
                reps: 2000,
                calibrate: false,
                steps: 12_000,
                burn_in: 2_000,
            });
            let spec = CoverageSpec {
                rho: rho.unwrap_or(base.rho),
                reps: reps.unwrap_or(base.reps),
                calibrate: calibrate || base.calibrate,
                ..base
            };
            if exp.theta_true.is_none() || matches!(exp.data, DataSource::File(_)) {
                return Err(CliError::Usage("coverage needs generated data with data.theta".into()));
            }
            #[derive(Serialize)]
            struct Out {
                raw: gbv::diagnostics::CoverageReport,
                calibrated: Option<gbv::diagnostics::CoverageReport>,
            }
            let raw = stage("coverage", exp.coverage(n, &spec, false))?;
            println!("coverage_raw = {:.4} {:?}", raw.coverage, raw.wilson_interval);
            let calibrated = if spec.calibrate {
                let c = stage("coverage", exp.coverage(n, &spec, true))?;
                println!("coverage_cal = {:.4} {:?}", c.coverage, c.wilson_interval);
                Some(c)
            } else {
                None
            };
            write_json(&dir.join("coverage.json"), &Out { raw, calibrated })?;
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn posterior(exp: &Experiment, dir: &Path) -> Result<GeneralizedPosterior<f64>, CliError> {
    let path = match &exp.data {
        DataSource::File(p) => p.clone(),
        DataSource::Generate(_) => dir.join("data.csv"),
    };
    let data = exp.read_data(&path)?;
    stage("model", exp.build_posterior(&data))
}

fn fitted(exp: &Experiment, dir: &Path) -> Result<(GeneralizedPosterior<f64>, FitResult<f64>), CliError> {
    let fit: FitResult<f64> = read_json(&dir.join("fit.json"))?;
    let gp = posterior(exp, dir)?;
    if fit.theta_n.dim() != gp.dim() {
        return Err(CliError::Usage("fit.json does not match the configured model".into()));
    }
    Ok((gp, fit))
}

fn tv_stage(exp: &Experiment, dir: &Path) -> Result<(), CliError> {
    let (gp, fit) = fitted(exp, dir)?;
    let h0 = exp.h0(&gp, &fit);
    #[derive(Serialize)]
    struct Out {
        n: usize,
        tv: Option<f64>,
        moment_gap: Option<(f64, f64)>,
        concentration: Vec<ConcentrationEntry>,
    }
    let mut out = Out {
        n: gp.n,
        tv: None,
        moment_gap: None,
        concentration: Vec::new(),
    };
    let eps_list: Vec<f64> = exp.concentration_radii().to_vec();
    if gp.dim() <= 2 {
        let lr = stage("laplace", laplace_log_normalizer(&gp, &fit))?;
        let grid = stage("grid", exp.grid(&gp, &lr))?;
        io::write_grid_csv(&dir.join("grid.csv"), &grid)?;
        out.tv = Some(stage("tv", tv_to_normal_limit(&grid, &fit.theta_n, gp.n, &h0))?);
        if let Some(t0) = &exp.theta_true {
            for eps in eps_list {
                let mass = stage("concentration", concentration_mass(MassSource::Grid(&grid), t0, eps))?;
                out.concentration.push(ConcentrationEntry { eps, mass });
            }
        }
        println!("tv = {}", out.tv.unwrap_or(f64::NAN));
    } else {
        let draws_path = dir.join("draws.csv");
        if !draws_path.exists() {
            return Err(CliError::Missing(draws_path));
        }
        let draws = io::read_draws(&draws_path)?;
        let gap = stage("tv", moment_gap_to_normal(&draws, &fit.theta_n, gp.n, &h0))?;
        out.moment_gap = Some(gap);
        if let Some(t0) = &exp.theta_true {
            for eps in eps_list {
                let mass = stage("concentration", concentration_mass(MassSource::Draws(&draws), t0, eps))?;
                out.concentration.push(ConcentrationEntry { eps, mass });
            }
        }
        println!("moment_gap = {gap:?}");
    }
    write_json(&dir.join("tv.json"), &out)
}
