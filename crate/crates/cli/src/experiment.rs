//! Runs a coverage experiment over every grid point of a config.
//!
//! Output directory layout:
//! - `coverage_<param><value>_n<n>.csv`, one per grid point
//! - `table.csv`, mean interval lengths with one column per grid point
//! - `seeds.txt`, the master seed and every derived stream seed
//! - `run.txt`, the canonical config and per-point status

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vwlb_core::inference::{coverage_experiment, CoverageConfig, CoverageOutcome, IntervalMethod};
use vwlb_core::io::format_coverage_csv;

use crate::config::{coverage_file_name, ExperimentConfig, GridPoint, RawConfig};
use crate::{write_atomic, Error};

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Done { file: PathBuf },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactManifest {
    pub out: PathBuf,
    pub points: Vec<(GridPoint, PointStatus)>,
    pub table: PathBuf,
    pub seeds: PathBuf,
    pub run: PathBuf,
}

impl ArtifactManifest {
    pub fn coverage_files(&self) -> Vec<&Path> {
        self.points
            .iter()
            .filter_map(|(_, s)| match s {
                PointStatus::Done { file } => Some(file.as_path()),
                PointStatus::Failed { .. } => None,
            })
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|(_, s)| matches!(s, PointStatus::Failed { .. })).count()
    }
}

/// Loads the config at `path`, applies `overrides` and runs every grid point.
pub fn run_experiment(path: &Path, overrides: &[(String, String)]) -> Result<ArtifactManifest, Error> {
    let text = crate::read_text(path)?;
    let mut raw = RawConfig::parse(&text)?;
    for (k, v) in overrides {
        raw.set(k, v);
    }
    let config = ExperimentConfig::from_raw(&raw)?;
    run_config(&config, &raw)
}

pub fn run_config(config: &ExperimentConfig, raw: &RawConfig) -> Result<ArtifactManifest, Error> {
    let out = &config.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let grid = config.grid();
    let mut points = Vec::with_capacity(grid.len());
    let mut outcomes = Vec::with_capacity(grid.len());
    for (i, &point) in grid.iter().enumerate() {
        let cov = config.coverage_config(i, point);
        match coverage_experiment(&cov) {
            Ok(outcome) => {
                let file = out.join(coverage_file_name(config.model, point));
                write_atomic(&file, &format_coverage_csv(&outcome.reports))?;
                points.push((point, PointStatus::Done { file }));
                outcomes.push(Some(outcome));
            }
            Err(e) => {
                points.push((point, PointStatus::Failed { reason: e.to_string() }));
                outcomes.push(None);
            }
        }
    }
    let table = out.join("table.csv");
    write_atomic(&table, &length_table(config, &grid, &outcomes))?;
    let seeds = out.join("seeds.txt");
    write_atomic(&seeds, &seed_manifest(config, &grid))?;
    let run = out.join("run.txt");
    write_atomic(&run, &run_metadata(config, raw, &points))?;
    Ok(ArtifactManifest { out: out.clone(), points, table, seeds, run })
}

fn column_label(config: &ExperimentConfig, point: GridPoint) -> String {
    let param = config.model.grid_param();
    if config.ns.len() > 1 {
        format!("{param}={}|n={}", point.value, point.n)
    } else {
        format!("{param}={}", point.value)
    }
}

/// Mean interval length per method and coordinate, one column per grid
/// point; the layout of the published length tables.
fn length_table(config: &ExperimentConfig, grid: &[GridPoint], outcomes: &[Option<CoverageOutcome>]) -> String {
    let mut out = String::from("method,coordinate");
    for &p in grid {
        let _ = write!(out, ",{}", column_label(config, p));
    }
    out.push('\n');
    let d = match config.model {
        crate::ModelKind::Gmm => config.k,
        crate::ModelKind::Blr => config.beta.len(),
    };
    for method in IntervalMethod::ALL {
        for k in 0..d {
            let _ = write!(out, "{method},{}", k + 1);
            for outcome in outcomes {
                match outcome {
                    Some(o) => {
                        let _ = write!(out, ",{}", o.report(method).per_coordinate[k].mean_length);
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    out
}

fn seed_manifest(config: &ExperimentConfig, grid: &[GridPoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "master_seed = {}", config.master_seed);
    let _ = writeln!(out, "# grid.<i> = derive(master_seed, grid, i)");
    let _ = writeln!(out, "# per dataset r: dataset/r, vb/r, gibbs/r, vwlb/r under the grid seed");
    let _ = writeln!(out, "# vb restarts: init/restart/j under vb/r");
    let _ = writeln!(out, "# per replicate b: weights/b and init/b under vwlb/r, restarts init/restart/j under init/b");
    for (i, &p) in grid.iter().enumerate() {
        let cov: CoverageConfig = config.coverage_config(i, p);
        let _ = writeln!(out, "grid.{i} = {}", cov.master_seed);
        for r in 0..config.replicates {
            let _ = writeln!(out, "grid.{i}.dataset.{r} = {}", cov.dataset_seed(r));
            let _ = writeln!(out, "grid.{i}.vb.{r} = {}", cov.vb_seed(r));
            let _ = writeln!(out, "grid.{i}.gibbs.{r} = {}", cov.gibbs_seed(r));
            let _ = writeln!(out, "grid.{i}.vwlb.{r} = {}", cov.vwlb_seed(r));
        }
    }
    out
}

fn run_metadata(config: &ExperimentConfig, raw: &RawConfig, points: &[(GridPoint, PointStatus)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tool = vwlb {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "model = {}", config.model);
    let _ = writeln!(out, "level = {}", config.level);
    let _ = writeln!(out, "points = {}", points.len());
    let _ =
        writeln!(out, "failed = {}", points.iter().filter(|(_, s)| matches!(s, PointStatus::Failed { .. })).count());
    for (i, (p, status)) in points.iter().enumerate() {
        let _ = writeln!(out, "point.{i}.{} = {}", config.model.grid_param(), p.value);
        let _ = writeln!(out, "point.{i}.n = {}", p.n);
        let _ = writeln!(out, "point.{i}.digest = {}", config.coverage_config(i, *p).digest());
        let _ = writeln!(out, "point.{i}.file = {}", coverage_file_name(config.model, *p));
        match status {
            PointStatus::Done { .. } => {
                let _ = writeln!(out, "point.{i}.status = ok");
            }
            PointStatus::Failed { reason } => {
                let _ = writeln!(out, "point.{i}.status = failed: {reason}");
            }
        }
    }
    out.push_str("\n[config]\n");
    out.push_str(&raw.canonical());
    out
}
