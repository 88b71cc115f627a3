//! One function per experiment. Each writes its CSV files under `cfg.out`
//! and returns the paths plus any lines meant for stdout.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use optlin_core::estimation::{
    gap_report, linear_coefficient_lp, linear_coefficient_mse, lp_stationarity, nonlinearity_gap,
    optimal_estimator,
};
use optlin_core::matching::{
    lp_linearity_residual, match_source, matching_moments, MomentSequence,
};
use optlin_core::spectral::char_fn;
use optlin_core::vector::{givens_point, Grid2d, RotatedProduct2D};
use optlin_core::{vector, Distribution, Mat2, Problem, Verdict, DEFAULT_STEP, DEFAULT_STEP_2D};

use crate::config::{Config, Experiment};
use crate::output::{write_csv, write_text};
use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub stdout: Vec<String>,
}

pub fn run(cfg: &Config) -> Result<Report, CliError> {
    match cfg.experiment {
        Experiment::Example1 => example1(cfg),
        Experiment::Example2 => example2(cfg),
        Experiment::Match => run_match(cfg),
        Experiment::Moments => moments(cfg),
        Experiment::LpCheck => lp_check(cfg),
        Experiment::TwoSnr => two_snr(cfg),
    }
}

fn problem(
    source: &Distribution,
    noise: &Distribution,
    gamma: f64,
    step: f64,
) -> Result<Problem, CliError> {
    Ok(Problem::at_snr(source.clone(), noise, gamma)?.with_step(step)?)
}

/// Log-spaced SNRs over `[0.01, 100]`.
pub fn sweep_gammas(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (points - 1) as f64))
        .collect()
}

/// Estimator curves per SNR and the gap sweep.
pub fn example1(cfg: &Config) -> Result<Report, CliError> {
    let source = cfg.source.distribution()?;
    let noise = cfg.noise.distribution()?;
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    let comment = cfg.header_comment();
    let mut report = Report::default();

    for &gamma in &cfg.gamma {
        let p = problem(&source, &noise, gamma, step)?;
        let grid = p.default_obs_grid()?;
        let h = optimal_estimator(&p, &grid)?;
        let k = linear_coefficient_mse(gamma)?;
        let sigma_y = (source.variance() * (1.0 + 1.0 / gamma)).sqrt();
        let half = cfg.extent.unwrap_or(4.0 * sigma_y);
        let rows: Vec<Vec<f64>> = h
            .points()
            .filter(|(y, _)| y.abs() <= half + 1e-9 * step)
            .map(|(y, v)| vec![y, v, k * y])
            .collect();
        let name = format!("example1_curve_gamma_{gamma}.csv");
        report.files.push(write_csv(
            &cfg.out,
            &name,
            &comment,
            &["y", "h_opt", "h_lin"],
            &rows,
        )?);
    }

    let rows = sweep_gammas(cfg.sweep_points)
        .into_par_iter()
        .map(|gamma| {
            let r = gap_report(&problem(&source, &noise, gamma, step)?)?;
            Ok(vec![
                gamma,
                r.gap,
                r.fitted_slope,
                r.k_mse,
                r.risk_opt,
                r.risk_lin,
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    report.files.push(write_csv(
        &cfg.out,
        "example1_sweep.csv",
        &comment,
        &[
            "gamma",
            "gap",
            "fitted_slope",
            "k_mse",
            "risk_opt",
            "risk_lin",
        ],
        &rows,
    )?);
    Ok(report)
}

/// Givens sweep: source coordinates rotated by `G(theta)`, noise unrotated.
pub fn example2(cfg: &Config) -> Result<Report, CliError> {
    let s = cfg.source.distribution()?;
    let z = cfg.noise.distribution()?;
    let base_x = [s.clone(), s];
    let base_z = [z.clone(), z];
    let mut grid = Grid2d::for_pair(
        &RotatedProduct2D::new(base_x.clone(), Mat2::IDENTITY)?,
        &RotatedProduct2D::new(base_z.clone(), Mat2::IDENTITY)?,
    )
    .with_step(cfg.step.unwrap_or(DEFAULT_STEP_2D));
    if let Some(e) = cfg.extent {
        grid.source_half = e;
        grid.noise_half = e;
    }
    let rows = vector::theta_grid(cfg.theta_count)
        .into_par_iter()
        .map(|theta| {
            let r = givens_point(&base_x, &base_z, theta, Some(grid))?;
            Ok(vec![r.theta, r.gap_normalized, r.mse_opt, r.mse_lin])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let path = write_csv(
        &cfg.out,
        "example2_givens.csv",
        &cfg.header_comment(),
        &["theta", "gap_normalized", "mse_opt", "mse_lin"],
        &rows,
    )?;
    Ok(Report {
        files: vec![path],
        stdout: vec![],
    })
}

/// Matching source for the configured noise; candidate density plus a JSON
/// verdict record.
pub fn run_match(cfg: &Config) -> Result<Report, CliError> {
    let gamma = cfg.gamma[0];
    let r = match_source(&cfg.noise.distribution()?, gamma)?;
    let rows: Vec<Vec<f64>> = r.candidate.points().map(|(x, f)| vec![x, f]).collect();
    let comment = cfg.header_comment();
    let csv = write_csv(
        &cfg.out,
        "match_candidate.csv",
        &comment,
        &["x", "density"],
        &rows,
    )?;
    let (location, omega_cut) = match r.verdict {
        Verdict::Invalid { location, .. } => (Some(location), None),
        Verdict::DomainRestricted { omega_cut } => (None, Some(omega_cut)),
        Verdict::Valid => (None, None),
    };
    let record = json!({
        "experiment": "match",
        "noise": cfg.noise.to_string(),
        "gamma": gamma,
        "verdict": r.verdict.label(),
        "min_density": r.min_density,
        "location": location,
        "omega_cut": omega_cut,
        "mass": r.mass,
    })
    .to_string();
    let json_path = cfg.out.join("match_verdict.json");
    write_text(&json_path, &format!("{record}\n"))?;
    Ok(Report {
        files: vec![csv, json_path],
        stdout: vec![record],
    })
}

/// Recursed moments of the matching source next to the noise moments.
pub fn moments(cfg: &Config) -> Result<Report, CliError> {
    let z = MomentSequence::of(&cfg.noise.distribution()?, cfg.depth + 1)?;
    let x = matching_moments(&z, cfg.gamma[0], cfg.depth)?;
    let rows: Vec<Vec<f64>> = (1..=x.order())
        .map(|k| {
            vec![
                k as f64,
                z.moment(k).unwrap_or(f64::NAN),
                x.moment(k).unwrap_or(f64::NAN),
            ]
        })
        .collect();
    let path = write_csv(
        &cfg.out,
        "moments.csv",
        &cfg.header_comment(),
        &["order", "noise_moment", "source_moment"],
        &rows,
    )?;
    Ok(Report {
        files: vec![path],
        stdout: vec![],
    })
}

/// Linearity residual and stationarity over a grid of slopes, plus the
/// root of the stationarity condition.
pub fn lp_check(cfg: &Config) -> Result<Report, CliError> {
    let gamma = cfg.gamma[0];
    let p = problem(
        &cfg.source.distribution()?,
        &cfg.noise.distribution()?,
        gamma,
        DEFAULT_STEP,
    )?;
    let k_star = linear_coefficient_lp(&p, cfg.p)?;
    let sigma = p.source().std_dev().min(p.noise().std_dev());
    let fx = char_fn(p.source(), 12.0 / sigma, 2400)?;
    let fz = char_fn(p.noise(), 12.0 / sigma, 2400)?;
    let mut ks: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    ks.push(k_star);
    ks.sort_by(f64::total_cmp);
    let rows = ks
        .into_iter()
        .map(|k| {
            Ok(vec![
                k,
                lp_linearity_residual(&fx, &fz, k, cfg.p)?,
                lp_stationarity(&p, k, cfg.p)?,
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let path = write_csv(
        &cfg.out,
        "lp_check.csv",
        &cfg.header_comment(),
        &["k", "residual", "stationarity"],
        &rows,
    )?;
    Ok(Report {
        files: vec![path],
        stdout: vec![format!("k_lp={k_star}")],
    })
}

/// Gap at two SNRs with the noise shape rescaled each time.
pub fn two_snr(cfg: &Config) -> Result<Report, CliError> {
    let source = cfg.source.distribution()?;
    let noise = cfg.noise.distribution()?;
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    let rows = cfg
        .gamma
        .iter()
        .map(|&g| {
            Ok(vec![
                g,
                nonlinearity_gap(&problem(&source, &noise, g, step)?)?,
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let path = write_csv(
        &cfg.out,
        "two_snr.csv",
        &cfg.header_comment(),
        &["gamma", "gap"],
        &rows,
    )?;
    Ok(Report {
        files: vec![path],
        stdout: vec![],
    })
}
