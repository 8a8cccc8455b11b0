//! Result archives: one CSV per observable plus `manifest.json`.
//!
//! Every CSV starts with a `time_gamma` column followed by site columns
//! (`site_<m>`), pair columns (`pair_<m>_<m'>`) or distance bins (`d_<d>`).
//! Values are written with 17 significant digits so they parse back to the
//! same double. Undefined values are empty cells. Standard errors live in a
//! sibling `<name>.stderr.csv` with the same header.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wqed_core::ensemble::Series;
use wqed_core::EnsembleResult;

use crate::config::ExperimentFile;
use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr_file: Option<String>,
    pub columns: Vec<String>,
    pub unit: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub code_version: String,
    pub disorder_stream: String,
    pub master_seed: u64,
    pub n_realizations: u64,
    pub wall_time_seconds: f64,
    /// Fully resolved experiment file, overrides included.
    pub config: ExperimentFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_point: Option<SweepPoint>,
    pub site_labels: Vec<i64>,
    pub n_clean: usize,
    pub units: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// A parsed CSV: a time column plus named value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Row whose time equals `t` up to `1e-9` relative.
    pub fn row_at(&self, t: f64) -> Option<&[Option<f64>]> {
        let k = self
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))?;
        Some(&self.rows[k])
    }
}

pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

pub fn write_table(path: &Path, columns: &[String], times: &[f64], rows: &[Vec<Option<f64>>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| archive_err(path, e))?;
    let mut header = vec!["time_gamma".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(|e| archive_err(path, e))?;
    for (t, row) in times.iter().zip(rows) {
        debug_assert_eq!(row.len(), columns.len());
        let mut rec = vec![format_value(Some(*t))];
        rec.extend(row.iter().map(|&v| format_value(v)));
        w.write_record(&rec).map_err(|e| archive_err(path, e))?;
    }
    w.flush().map_err(CliError::io("writing", path))
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| archive_err(path, e))?;
    let header = r.headers().map_err(|e| archive_err(path, e))?.clone();
    if header.get(0) != Some("time_gamma") {
        return Err(CliError::Archive {
            path: path.into(),
            reason: "first column must be time_gamma".into(),
        });
    }
    let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| archive_err(path, e))?;
        let parse = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|e| CliError::Archive {
                path: path.into(),
                reason: format!("bad number `{s}`: {e}"),
            })
        };
        let t = parse(&rec[0])?.ok_or_else(|| CliError::Archive {
            path: path.into(),
            reason: "empty time cell".into(),
        })?;
        times.push(t);
        rows.push(rec.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?);
    }
    Ok(Table { columns, times, rows })
}

fn archive_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Archive {
        path: path.into(),
        reason: e.to_string(),
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(CliError::io("reading", &path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Archive {
        path,
        reason: e.to_string(),
    })
}

/// Reads one observable and its standard errors by manifest name.
pub fn read_observable(dir: &Path, name: &str) -> Result<(Table, Option<Table>)> {
    let manifest = read_manifest(dir)?;
    let entry = manifest.file(name).ok_or_else(|| CliError::Archive {
        path: dir.into(),
        reason: format!("no observable `{name}`"),
    })?;
    let values = read_table(&dir.join(&entry.file))?;
    let stderr = entry
        .stderr_file
        .as_ref()
        .map(|f| read_table(&dir.join(f)))
        .transpose()?;
    Ok((values, stderr))
}

fn site_columns(labels: &[i64]) -> Vec<String> {
    labels.iter().map(|m| format!("site_{m}")).collect()
}

struct Writer<'a> {
    dir: &'a Path,
    times: &'a [f64],
    files: Vec<FileEntry>,
}

impl Writer<'_> {
    fn series(&mut self, name: &str, columns: Vec<String>, series: &Series, unit: &str, description: &str) -> Result<()> {
        let rows = |data: &[f64]| -> Vec<Vec<Option<f64>>> {
            data.chunks(series.width.max(1)).map(|r| r.iter().map(|&v| Some(v)).collect()).collect()
        };
        self.write(name, columns, rows(&series.mean), Some(rows(&series.stderr)), unit, description)
    }

    fn write(
        &mut self,
        name: &str,
        columns: Vec<String>,
        mean: Vec<Vec<Option<f64>>>,
        stderr: Option<Vec<Vec<Option<f64>>>>,
        unit: &str,
        description: &str,
    ) -> Result<()> {
        let file = format!("{name}.csv");
        write_table(&self.dir.join(&file), &columns, self.times, &mean)?;
        let stderr_file = match stderr {
            Some(se) => {
                let f = format!("{name}.stderr.csv");
                write_table(&self.dir.join(&f), &columns, self.times, &se)?;
                Some(f)
            }
            None => None,
        };
        self.files.push(FileEntry {
            name: name.to_string(),
            file,
            stderr_file,
            columns,
            unit: unit.to_string(),
            description: description.to_string(),
        });
        Ok(())
    }
}

/// Writes every observable of `result` into `dir`, creating it if needed.
pub fn write_archive(
    dir: &Path,
    result: &EnsembleResult,
    config: &ExperimentFile,
    sweep_point: Option<SweepPoint>,
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(CliError::io("creating", dir))?;
    let labels = &result.site_labels;
    let mut w = Writer {
        dir,
        times: result.grid.times(),
        files: Vec::new(),
    };
    w.series(
        "total_population",
        vec!["total_population".into()],
        &result.total_population,
        "excitations",
        "P_tot: sum of site populations",
    )?;
    w.series("clean_population", vec!["clean".into()], &result.clean_population, "excitations", "population summed over the clean zone")?;
    w.series(
        "disordered_population",
        vec!["disordered".into()],
        &result.disordered_population,
        "excitations",
        "population summed over the disordered zone",
    )?;
    w.series("norm", vec!["norm".into()], &result.norm, "probability", "squared norm of the amplitude vector")?;
    w.series(
        "site_populations",
        site_columns(labels),
        &result.site_populations,
        "probability",
        "disorder-averaged <n_m>",
    )?;
    let n = labels.len();
    let site_entropy = result.site_entropy.chunks(n).map(|r| r.to_vec()).collect();
    w.write(
        "site_entropy",
        site_columns(labels),
        site_entropy,
        None,
        "nats",
        "binary entropy per particle from averaged populations; empty where the population is zero",
    )?;
    if let Some(s) = &result.interface_entropy {
        w.series("interface_entropy", vec!["s_a".into()], s, "nats", "S_A across the clean/disordered interface")?;
    }
    if let Some(g) = &result.g2 {
        let mut cols = Vec::new();
        let mut idx = Vec::new();
        for i in 0..n {
            for j in i..n {
                cols.push(format!("pair_{}_{}", labels[i], labels[j]));
                idx.push(i * n + j);
            }
        }
        let pick = |data: &[f64]| -> Vec<Vec<Option<f64>>> {
            data.chunks(n * n).map(|r| idx.iter().map(|&k| Some(r[k])).collect()).collect()
        };
        w.write("g2", cols, pick(&g.mean), Some(pick(&g.stderr)), "dimensionless", "G2(m, m') for m <= m'")?;
    }
    if let Some(g) = &result.g2_clean_mean {
        w.series(
            "g2_clean_mean",
            site_columns(result.disordered_labels()),
            g,
            "dimensionless",
            "G2(j) averaged over clean partners, per disordered site j",
        )?;
    }
    if let Some(g) = &result.g3_clean_mean {
        let cols = result.pair_labels.iter().map(|(a, b)| format!("pair_{a}_{b}")).collect();
        w.series("g3_clean_mean", cols, g, "dimensionless", "G3(i, j) averaged over clean k, disordered pairs i < j")?;
    }
    if let Some(g) = &result.g3_by_mean_distance {
        let cols = result.distance_bins.iter().map(|d| format!("d_{d:.1}")).collect();
        w.series(
            "g3_by_mean_distance",
            cols,
            g,
            "dimensionless",
            "G3 clean means averaged in half-integer bins of d = (i + j)/2",
        )?;
    }

    let units = [
        ("time_gamma", "1/gamma"),
        ("angles", "radians in the core, units of pi in the config"),
        ("entropy", "nats"),
        ("populations", "probability per site"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        disorder_stream: result.disorder_stream.clone(),
        master_seed: result.ensemble.master_seed,
        n_realizations: result.n_realizations,
        wall_time_seconds: result.wall_time_seconds,
        config: config.clone(),
        sweep_point,
        site_labels: labels.clone(),
        n_clean: result.n_clean,
        units,
        files: w.files,
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(CliError::io("writing", &path))?;
    Ok(manifest)
}

/// Directories of a sweep, in value order.
pub fn sweep_directories(root: &Path) -> Result<Vec<PathBuf>> {
    let index = root.join("sweep.json");
    let text = fs::read_to_string(&index).map_err(CliError::io("reading", &index))?;
    let dirs: Vec<String> = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("directories").cloned())
        .and_then(|v| serde_json::from_value(v).ok())
        .ok_or_else(|| CliError::Archive {
            path: index.clone(),
            reason: "missing `directories`".into(),
        })?;
    Ok(dirs.into_iter().map(|d| root.join(d)).collect())
}
