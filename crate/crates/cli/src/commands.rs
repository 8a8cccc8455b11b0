use std::fs;
use std::path::{Path, PathBuf};

use wqed_core::disorder::splitmix64;
use wqed_core::ensemble::{convergence, ConvergenceReport, CONVERGENCE_THRESHOLD};
use wqed_core::{run_ensemble, BasisIndex, EnsembleConfig};

use crate::archive::{write_archive, Manifest, SweepPoint};
use crate::config::{self, AxisName, ExperimentFile};
use crate::error::{CliError, Result};

/// Settings that come from flags rather than the experiment file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub progress: bool,
}

/// The experiment file with `--seed` folded in, so the echo reproduces the run.
fn load(config_path: &Path, opts: &RunOptions) -> Result<ExperimentFile> {
    let mut file = config::load(config_path, &opts.overrides)?;
    if let Some(seed) = opts.seed {
        file.ensemble.master_seed = seed;
    }
    if opts.workers == Some(0) {
        return Err(CliError::config("--workers", "must be at least 1"));
    }
    Ok(file)
}

fn ensemble_config(file: &ExperimentFile, opts: &RunOptions, out: &Path) -> EnsembleConfig {
    let mut e = file.ensemble_config();
    e.workers = opts.workers;
    e.progress = opts.progress;
    if file.outputs.dump_realizations {
        e.dump_dir = Some(out.join("realizations"));
    }
    e
}

fn output_dir(file: &ExperimentFile, opts: &RunOptions) -> Result<PathBuf> {
    opts.out
        .clone()
        .or_else(|| file.outputs.directory.clone())
        .ok_or_else(|| CliError::config("outputs.directory", "no output directory; pass --out or set outputs.directory"))
}

pub fn cmd_run(config_path: &Path, opts: &RunOptions) -> Result<Manifest> {
    let file = load(config_path, opts)?;
    let out = output_dir(&file, opts)?;
    let result = run_ensemble(&file.system()?, &ensemble_config(&file, opts, &out))?;
    write_archive(&out, &result, &file, None)
}

/// One archive per value in `<out>/<axis>_<value>/`, plus `sweep.json`.
pub fn cmd_sweep(
    config_path: &Path,
    axis: Option<&str>,
    values: Option<&[f64]>,
    opts: &RunOptions,
) -> Result<Vec<(PathBuf, Manifest)>> {
    let file = load(config_path, opts)?;
    let out = output_dir(&file, opts)?;
    let (axis, values) = match (axis, values, &file.sweep) {
        (Some(a), Some(v), _) => (AxisName::parse(a)?, v.to_vec()),
        (Some(a), None, Some(s)) if AxisName::parse(a)? == s.axis => (s.axis, s.values.clone()),
        (None, v, Some(s)) => (s.axis, v.map_or_else(|| s.values.clone(), <[f64]>::to_vec)),
        _ => return Err(CliError::config("sweep", "give --axis and --values, or a [sweep] section")),
    };
    if values.is_empty() {
        return Err(CliError::config("sweep.values", "needs at least one value"));
    }

    // resolve and validate every point before running any of them
    let mut points = Vec::with_capacity(values.len());
    for (k, &v) in values.iter().enumerate() {
        let mut f = file.clone();
        match axis {
            AxisName::NClean => f.geometry.n_clean = count(v, "sweep.values")?,
            AxisName::NRealizations => f.ensemble.n_realizations = count(v, "sweep.values")?,
            AxisName::WBar => f.physics.w_bar_over_pi = v,
            AxisName::Directionality => f.physics.directionality = v,
            AxisName::Beta => f.physics.beta = v,
        }
        if !file.ensemble.couple_sweeps {
            f.ensemble.master_seed = splitmix64(file.ensemble.master_seed ^ splitmix64(!(k as u64)));
        }
        f.sweep = None;
        let f = config::parse(&toml::to_string(&f).expect("config serializes"), &[])
            .map_err(|e| match e {
                CliError::Config { key, reason } => CliError::config(key, format!("{reason} (sweep value {v})")),
                other => other,
            })?;
        points.push((v, f));
    }

    let mut archives = Vec::with_capacity(points.len());
    for (v, f) in &points {
        let dir = out.join(axis.directory_name(*v));
        if opts.progress {
            eprintln!("{}", dir.display());
        }
        let result = run_ensemble(&f.system()?, &ensemble_config(f, opts, &dir))?;
        let point = SweepPoint {
            axis: axis.core().name().to_string(),
            value: *v,
        };
        archives.push((dir.clone(), write_archive(&dir, &result, f, Some(point))?));
    }
    let index = serde_json::json!({
        "axis": axis.core().name(),
        "values": values,
        "directories": points.iter().map(|(v, _)| axis.directory_name(*v)).collect::<Vec<_>>(),
    });
    let path = out.join("sweep.json");
    fs::write(&path, serde_json::to_string_pretty(&index).expect("index serializes")).map_err(CliError::io("writing", &path))?;
    Ok(archives)
}

fn count(v: f64, key: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(CliError::config(key, format!("{v} is not a positive integer")))
    }
}

/// Runs the ladder, writes `convergence.csv` and returns the report with
/// its pass/fail line.
pub fn cmd_convergence(config_path: &Path, opts: &RunOptions) -> Result<(ConvergenceReport, String)> {
    let file = load(config_path, opts)?;
    let out = output_dir(&file, opts)?;
    let settings = file.convergence.clone().unwrap_or_default();
    let mut ensemble = ensemble_config(&file, opts, &out);
    ensemble.dump_dir = None;
    let report = convergence(&file.system()?, &ensemble, &settings.ladder, settings.sets)?;

    fs::create_dir_all(&out).map_err(CliError::io("creating", &out))?;
    let path = out.join("convergence.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Archive {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let csv_err = |e: csv::Error| CliError::Archive {
        path: path.clone(),
        reason: e.to_string(),
    };
    w.write_record(["count", "diff", "relative_diff", "total_population"]).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.count.to_string(),
            format!("{:.16e}", r.diff),
            format!("{:.16e}", r.relative),
            format!("{:.16e}", r.total_population),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io("writing", &path))?;
    let json = out.join("convergence.json");
    let echo = serde_json::json!({ "config": file, "report": report });
    fs::write(&json, serde_json::to_string_pretty(&echo).expect("report serializes")).map_err(CliError::io("writing", &json))?;

    let line = match report.criterion_row() {
        Some(r) => format!(
            "{}: Diff({} vs {}) at t = {} is {:.3}% of P_tot = {:.6} (threshold {:.0}%)",
            if report.passes() { "PASS" } else { "FAIL" },
            r.count,
            report.reference_count,
            report.time,
            100.0 * r.relative,
            report.reference_total,
            100.0 * CONVERGENCE_THRESHOLD
        ),
        None => "FAIL: empty ladder".to_string(),
    };
    Ok((report, line))
}

/// Parses and validates without running; returns a short description.
pub fn cmd_validate(config_path: &Path, opts: &RunOptions) -> Result<String> {
    let file = load(config_path, opts)?;
    let system = file.system()?;
    let dim = BasisIndex::new(system.n_clean + system.n_disordered, system.n_excitations)?.dim();
    Ok(format!(
        "ok: N = {} + {}, M = {}, dimension {dim}, {} time points to {}, {} realizations",
        system.n_clean,
        system.n_disordered,
        system.n_excitations,
        system.grid.len(),
        system.grid.t_max(),
        file.ensemble.n_realizations
    ))
}
