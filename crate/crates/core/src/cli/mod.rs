//! Configuration-driven runner behind the `momclose` binary.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::closure::{chebyshev_nodes, t_tilde_basis, ClosureSpec, SpectralDecomp};
use crate::error::{Error, Result};
use crate::experiments::{bgk_limit_study, convergence_study, stability_study, synth_initial_data, StudyReport};
use crate::maxwellian::build_maxwellian;
use crate::quadrature::gauss_chebyshev_rule;
use crate::spectral::{evolve_bgk, evolve_kinetic, moment_trajectory_from_kinetic};
use crate::system::{moments_from_kinetic, MomentState, SystemMatrices};

pub use config::{Command, DataConfig, KernelConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const SUMMARY_SCHEMA: u32 = 1;

/// Writes `report` as CSV: a header row, then one line per row with every
/// value in `{:.16e}` form (17 significant digits, always a `.` separator).
pub fn emit_csv(report: &StudyReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&report.columns.join(","));
    out.push('\n');
    for row in &report.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Result of a completed run.
#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Maps an error to the process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter { .. }
        | Error::BumpOutsideInterval { .. }
        | Error::TruncationBelowKernelDegree { .. }
        | Error::DuplicateEigenvalue(..)
        | Error::OutOfInterval { .. } => EXIT_INVALID,
        _ => EXIT_SOLVER,
    }
}

fn moments_table(state: &MomentState) -> StudyReport {
    let rows = state.values.nrows();
    let mut names = vec!["x".to_string()];
    names.extend((0..rows).map(|i| format!("mu_{i}")));
    let mut report = StudyReport {
        columns: names,
        ..Default::default()
    };
    for j in 0..state.grid.nx {
        let mut row = vec![state.grid.x(j)];
        row.extend((0..rows).map(|i| state.values[(i, j)]));
        report.rows.push(row);
    }
    report
}

fn final_norms(report: &mut StudyReport, state: &MomentState) {
    for i in 0..state.values.nrows().min(4) {
        report.scalars.insert(format!("final_l2_mu{i}"), state.l2_norm(i));
    }
}

fn execute(command: Command, cfg: &RunConfig) -> Result<(&'static str, StudyReport)> {
    match command {
        Command::Validate => unreachable!("handled before dispatch"),
        Command::Nodes => {
            let mut report = StudyReport::new(&["k", "lambda"]);
            for (k, l) in chebyshev_nodes(cfg.order).into_iter().enumerate() {
                report.rows.push(vec![k as f64, l]);
            }
            Ok(("nodes.csv", report))
        }
        Command::System => {
            let closure = ClosureSpec::chebyshev(cfg.order);
            let sys = SystemMatrices::new(&closure, &cfg.kernel()?)?;
            let mut report = StudyReport::new(&["i", "j", "a", "b", "p_inv", "gram"]);
            for i in 0..closure.size() {
                for j in 0..closure.size() {
                    report.rows.push(vec![
                        i as f64,
                        j as f64,
                        sys.a[(i, j)],
                        sys.b[(i, j)],
                        sys.decomp.p_inv[(i, j)],
                        sys.decomp.gram[(i, j)],
                    ]);
                }
            }
            let resid = (&sys.decomp.p * &sys.decomp.p_inv
                - crate::closure::RMatrix::identity(closure.size(), closure.size()))
            .amax();
            report.scalars.insert("vandermonde_residual".into(), resid);
            Ok(("system.csv", report))
        }
        Command::SolveMoments => {
            let rule = std::sync::Arc::new(gauss_chebyshev_rule(cfg.nv)?);
            let f0 = synth_initial_data(&cfg.data(), rule.clone())?;
            let closure = ClosureSpec::chebyshev(cfg.order);
            let sys = SystemMatrices::on_rule(&closure, &cfg.kernel()?, &rule)?;
            let traj = moment_trajectory_from_kinetic(&f0, &sys, cfg.horizon_t, 1, cfg.order, None)?;
            let last = traj.last().expect("two snapshots");
            let mut report = moments_table(last);
            final_norms(&mut report, last);
            Ok(("moments.csv", report))
        }
        Command::SolveKinetic => {
            let rule = std::sync::Arc::new(gauss_chebyshev_rule(cfg.nv)?);
            let f0 = synth_initial_data(&cfg.data(), rule)?;
            let f = evolve_kinetic(&f0, &cfg.kernel()?, cfg.horizon_t)?;
            let m = moments_from_kinetic(&f, cfg.order);
            let mut report = moments_table(&m);
            final_norms(&mut report, &m);
            report.scalars.insert("final_l2_f".into(), f.l2_norm());
            Ok(("kinetic.csv", report))
        }
        Command::SolveBgk => {
            let rule = std::sync::Arc::new(gauss_chebyshev_rule(cfg.nv)?);
            let f0 = synth_initial_data(&cfg.data(), rule.clone())?;
            let closure = ClosureSpec::chebyshev(cfg.order);
            let basis = t_tilde_basis(&SpectralDecomp::new(&closure)?);
            let maxw = build_maxwellian(&closure, &basis, rule)?;
            let f = evolve_bgk(&f0, &cfg.kernel()?, &maxw, cfg.eps, cfg.horizon_t)?;
            let m = moments_from_kinetic(&f, cfg.order);
            let mut report = moments_table(&m);
            final_norms(&mut report, &m);
            report.scalars.insert("final_l2_f".into(), f.l2_norm());
            Ok(("bgk.csv", report))
        }
        Command::Convergence => Ok(("convergence.csv", convergence_study(&cfg.study()?)?)),
        Command::Stability => Ok(("stability.csv", stability_study(&cfg.study()?)?)),
        Command::BgkLimit => Ok(("bgk_limit.csv", bgk_limit_study(&cfg.study()?)?)),
    }
}

fn scalars_json(report: &StudyReport) -> Value {
    let mut map = Map::new();
    for (k, v) in &report.scalars {
        map.insert(k.clone(), if v.is_finite() { json!(v) } else { Value::Null });
    }
    Value::Object(map)
}

/// Validates `cfg`, runs `command` and writes its CSV plus `summary.json`
/// into `out_dir`. `validate` checks the configuration and writes nothing.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let start = Instant::now();
    if let Some(c) = cfg.command {
        if c != command {
            return Err(Error::invalid(
                "command",
                format!("config names `{c}` but `{command}` was requested"),
            ));
        }
    }
    cfg.validate_for(command)?;
    let config_echo = serde_json::to_value(cfg).map_err(|e| Error::invalid("config", e.to_string()))?;
    if command == Command::Validate {
        return Ok(RunOutput {
            files: Vec::new(),
            summary: json!({
                "schema": SUMMARY_SCHEMA,
                "command": command.name(),
                "config": config_echo,
                "scalars": {},
            }),
        });
    }
    let (file_name, report) = execute(command, cfg)?;
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(file_name);
    emit_csv(&report, &csv_path)?;
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "command": command.name(),
        "config": config_echo,
        "scalars": scalars_json(&report),
        "files": [file_name],
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let summary_path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::invalid("summary", e.to_string()))?;
    fs::write(&summary_path, text + "\n")?;
    Ok(RunOutput {
        files: vec![csv_path, summary_path],
        summary,
    })
}
