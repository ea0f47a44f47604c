//! Convergence, stability and relaxation-limit studies.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closure::{t_tilde_basis, ClosureSpec, SpectralDecomp};
use crate::error::{Error, Result};
use crate::maxwellian::build_maxwellian;
use crate::quadrature::{gauss_chebyshev_rule, VelocityRule, WeightedNorms};
use crate::spectral::{bgk_trajectory, kinetic_trajectory, moment_trajectory_from_kinetic, PropagatorCache};
use crate::system::{moments_from_kinetic, KernelSpec, KineticState, MomentState, SystemMatrices};

use super::data::{synth_initial_data, InitialDataSpec};

/// Errors below this level are treated as the floating-point floor.
pub const ERROR_FLOOR: f64 = 1e-11;
/// Number of largest orders entering the slope fit.
pub const FIT_POINTS: usize = 4;
/// Highest moment whose error is reported by the convergence study.
pub const REPORTED_MOMENTS: usize = 3;

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub n_list: Vec<usize>,
    pub horizon: f64,
    pub kernel: KernelSpec,
    pub data: InitialDataSpec,
    pub nv: usize,
    pub time_samples: usize,
    pub eps_list: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_list", "must be non-empty and strictly increasing"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon_t", "must be positive"));
        }
        if self.time_samples == 0 {
            return Err(Error::invalid("time_samples", "must be positive"));
        }
        if self.n_list.last().copied().unwrap_or(0) + 1 > self.nv {
            return Err(Error::invalid("nv", "needs at least N + 1 velocity nodes"));
        }
        if self.kernel.interval != (-1.0, 1.0) {
            return Err(Error::invalid(
                "interval",
                "studies run on the Gauss-Chebyshev rule, which needs I = [-1, 1]",
            ));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0)) || self.eps_list.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid("eps_list", "must be positive and strictly decreasing"));
        }
        self.data.validate(self.kernel.interval)
    }

    pub fn rule(&self) -> Result<Arc<VelocityRule>> {
        Ok(Arc::new(gauss_chebyshev_rule(self.nv)?))
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some(SlopeFit {
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

/// Tabular study output plus named scalars.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub fit: Option<SlopeFit>,
    pub scalars: BTreeMap<String, f64>,
}

impl StudyReport {
    pub fn new(columns: &[&str]) -> Self {
        StudyReport {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// `max_t ||mu_i^a(t) - mu_i^b(t)||_{L^2}` over matching samples.
pub fn sup_t_l2_error(run_a: &[MomentState], run_b: &[MomentState], i: usize) -> Result<f64> {
    if run_a.len() != run_b.len() || run_a.is_empty() {
        return Err(Error::GridMismatch);
    }
    let mut worst: f64 = 0.0;
    for (a, b) in run_a.iter().zip(run_b) {
        if a.grid != b.grid || (a.time - b.time).abs() > 1e-12 * a.time.abs().max(1.0) {
            return Err(Error::GridMismatch);
        }
        if i >= a.values.nrows() || i >= b.values.nrows() {
            return Err(Error::invalid("component", format!("moment {i} is not stored")));
        }
        let diff: Vec<f64> = (0..a.grid.nx).map(|j| a.values[(i, j)] - b.values[(i, j)]).collect();
        worst = worst.max(a.grid.l2_norm(&diff));
    }
    Ok(worst)
}

fn kinetic_moments(traj: &[KineticState], order: usize) -> Vec<MomentState> {
    traj.iter().map(|s| moments_from_kinetic(s, order)).collect()
}

/// Moment-method error against the kinetic reference for each `N`.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.kernel.degree() != 0 {
        return Err(Error::invalid("alphas", "the convergence study needs d = 0"));
    }
    let rule = cfg.rule()?;
    let f0 = synth_initial_data(&cfg.data, rule.clone())?;
    let cache = PropagatorCache::default();
    let reference = kinetic_trajectory(&f0, &cfg.kernel, cfg.horizon, cfg.time_samples, Some(&cache))?;
    let ref_moments = kinetic_moments(&reference, REPORTED_MOMENTS);

    let errors = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let closure = ClosureSpec::chebyshev(n);
            let sys = SystemMatrices::on_rule(&closure, &cfg.kernel, &rule)?;
            let traj =
                moment_trajectory_from_kinetic(&f0, &sys, cfg.horizon, cfg.time_samples, REPORTED_MOMENTS, None)?;
            (0..=REPORTED_MOMENTS)
                .map(|i| sup_t_l2_error(&traj, &ref_moments, i))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = StudyReport::new(&["n", "error_mu0", "ratio", "error_mu1", "error_mu2", "error_mu3"]);
    for (idx, (&n, e)) in cfg.n_list.iter().zip(&errors).enumerate() {
        let ratio = if idx == 0 { f64::NAN } else { e[0] / errors[idx - 1][0] };
        report.rows.push(vec![n as f64, e[0], ratio, e[1], e[2], e[3]]);
    }
    let usable: Vec<(f64, f64)> = cfg
        .n_list
        .iter()
        .zip(&errors)
        .filter(|(_, e)| e[0] >= ERROR_FLOOR)
        .map(|(&n, e)| (n as f64, e[0]))
        .collect();
    let window = &usable[usable.len().saturating_sub(FIT_POINTS)..];
    report.fit = fit_loglog_slope(window);
    if let Some(fit) = report.fit {
        report.scalars.insert("slope".into(), fit.slope);
        report.scalars.insert("slope_residual".into(), fit.residual);
    }
    report
        .scalars
        .insert("max_error_mu0".into(), errors.iter().map(|e| e[0]).fold(0.0, f64::max));
    Ok(report)
}

/// Largest moment norm over time and index against the stability bounds.
///
/// Two bounds are reported: `exp(T C_{d,alpha} ||q||) ||f0||` with
/// `C_{d,alpha} = sqrt(pi (d+1)) |alpha|`, and the sharper weighted bound
/// `(sum_k lambda_k^{2i})^{1/2} exp(T C_N(q)) C_N(f0)` checked per moment.
pub fn stability_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let rule = cfg.rule()?;
    let seeds = if cfg.seeds.is_empty() {
        vec![cfg.data.seed]
    } else {
        cfg.seeds.clone()
    };
    let d = cfg.kernel.degree();
    let c_d_alpha = (std::f64::consts::PI * (d + 1) as f64).sqrt() * cfg.kernel.alpha_norm();
    let q_norm = cfg.kernel.q_l2_norm();
    let jobs: Vec<(usize, u64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();

    let rows = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let mut data = cfg.data.clone();
            data.seed = seed;
            let f0 = synth_initial_data(&data, rule.clone())?;
            let closure = ClosureSpec::chebyshev(n);
            let sys = SystemMatrices::on_rule(&closure, &cfg.kernel, &rule)?;
            let traj = moment_trajectory_from_kinetic(&f0, &sys, cfg.horizon, cfg.time_samples, n, None)?;
            let norms = WeightedNorms::compute(&closure, &cfg.kernel, &f0)?;
            let bound = (cfg.horizon * c_d_alpha * q_norm).exp() * f0.l2_norm();
            let growth = (cfg.horizon * norms.c_n_q).exp() * norms.c_n_f0;
            let mut sup: f64 = 0.0;
            let mut weighted_ratio: f64 = 0.0;
            for i in 0..=n {
                let m = traj.iter().map(|s| s.l2_norm(i)).fold(0.0, f64::max);
                sup = sup.max(m);
                let scale = closure
                    .eigenvalues()
                    .iter()
                    .map(|l| l.powi(2 * i as i32))
                    .sum::<f64>()
                    .sqrt();
                weighted_ratio = weighted_ratio.max(m / (scale * growth));
            }
            Ok(vec![n as f64, seed as f64, sup, bound, sup / bound, weighted_ratio])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = StudyReport::new(&["n", "seed", "sup_norm", "bound", "ratio", "weighted_ratio"]);
    report.rows = rows;
    let max_of = |c: usize| report.rows.iter().map(|r| r[c]).fold(0.0, f64::max);
    let (r, w) = (max_of(4), max_of(5));
    report.scalars.insert("max_stability_ratio".into(), r);
    report.scalars.insert("max_weighted_ratio".into(), w);
    report.scalars.insert("c_d_alpha".into(), c_d_alpha);
    Ok(report)
}

/// Distance between BGK moments and the closed moment system as `eps` shrinks.
///
/// The order is the first entry of `n_list`. The limit system uses kernel
/// integrals on the same velocity rule as the BGK solve.
pub fn bgk_limit_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.eps_list.is_empty() {
        return Err(Error::invalid("eps_list", "must not be empty"));
    }
    let n = cfg.n_list[0];
    let rule = cfg.rule()?;
    let f0 = synth_initial_data(&cfg.data, rule.clone())?;
    let closure = ClosureSpec::chebyshev(n);
    let sys = SystemMatrices::on_rule(&closure, &cfg.kernel, &rule)?;
    let limit = moment_trajectory_from_kinetic(&f0, &sys, cfg.horizon, cfg.time_samples, n, None)?;
    let basis = t_tilde_basis(&SpectralDecomp::new(&closure)?);
    let maxw = build_maxwellian(&closure, &basis, rule.clone())?;

    let max_error = |run: &[MomentState], other: &[MomentState]| -> Result<f64> {
        (0..=n).try_fold(0.0f64, |acc, i| Ok(acc.max(sup_t_l2_error(run, other, i)?)))
    };

    let runs = cfg
        .eps_list
        .par_iter()
        .map(|&eps| {
            let traj = bgk_trajectory(&f0, &cfg.kernel, &maxw, eps, cfg.horizon, cfg.time_samples, None)?;
            Ok(kinetic_moments(&traj, n))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = runs
        .iter()
        .map(|r| max_error(r, &limit))
        .collect::<Result<Vec<f64>>>()?;

    let mut report = StudyReport::new(&["eps", "error", "ratio"]);
    for (idx, (&eps, &e)) in cfg.eps_list.iter().zip(&errors).enumerate() {
        let ratio = if idx == 0 { f64::NAN } else { errors[idx - 1] / e };
        report.rows.push(vec![eps, e, ratio]);
    }

    let kinetic = kinetic_trajectory(&f0, &cfg.kernel, cfg.horizon, cfg.time_samples, None)?;
    report.scalars.insert(
        "baseline_error".into(),
        max_error(&kinetic_moments(&kinetic, n), &limit)?,
    );

    // Richardson extrapolation from the two smallest eps when they differ by 2.
    let k = cfg.eps_list.len();
    if k >= 2 && (cfg.eps_list[k - 2] / cfg.eps_list[k - 1] - 2.0).abs() < 1e-12 {
        let (fine, coarse) = (&runs[k - 1], &runs[k - 2]);
        let extrapolated: Vec<MomentState> = fine
            .iter()
            .zip(coarse)
            .map(|(a, b)| MomentState {
                values: &a.values * 2.0 - &b.values,
                grid: a.grid,
                time: a.time,
            })
            .collect();
        report
            .scalars
            .insert("richardson_defect".into(), max_error(&extrapolated, &limit)?);
    }
    if let Some(last) = errors.last() {
        report.scalars.insert("min_eps_error".into(), *last);
    }
    Ok(report)
}
