//! The `percolate` command: critical tunneling distance of snapshot files,
//! or of freshly generated platelet ensembles over a density sweep.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use srm_core::engine::max_bounding_radius;
use srm_core::geometry::PeriodicBox;
use srm_core::percolation::{critical_percolation_distance, number_density, Percolation};
use srm_core::shape::Shape;

use crate::config::{resolve_generation, Config, Preset, ShapeKind};
use crate::error::CliError;
use crate::generate::{generate_member, member_seeds, with_pool, RunLog};
use crate::output::{cell, Table};
use crate::snapshot::{Particles, SnapshotFile};

/// Default search limit, in particle diameters.
pub const DEFAULT_DELTA_MAX: f64 = 0.5;

pub const COLUMNS: [&str; 7] = ["rho", "seed", "recipe", "delta_c", "delta_c_over_D", "spanning_axis_mask", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationRow {
    pub rho: Option<f64>,
    pub seed: u64,
    pub recipe: String,
    /// `None` when no cluster wraps within the search limit.
    pub result: Option<Percolation>,
    pub diameter: f64,
}

impl PercolationRow {
    pub fn delta_c_over_d(&self) -> Option<f64> {
        self.result.map(|p| p.delta_c / self.diameter)
    }

    fn cells(&self) -> Vec<String> {
        vec![
            cell(self.rho),
            self.seed.to_string(),
            self.recipe.clone(),
            cell(self.result.map(|p| p.delta_c)),
            cell(self.delta_c_over_d()),
            self.result.map(|p| p.axis_mask.to_string()).unwrap_or_default(),
            if self.result.is_some() { "percolating" } else { "not_percolating" }.to_string(),
        ]
    }
}

/// Critical distance with the search limit given in diameters. Without an
/// explicit limit the default is capped at the largest admissible value.
fn solve<const D: usize, S: Shape<D>>(
    ps: &[S],
    bx: &PeriodicBox<D>,
    delta_max: Option<f64>,
) -> Result<(Option<Percolation>, f64, Option<f64>), srm_core::Error> {
    let diameter = 2.0 * max_bounding_radius(ps);
    let limit = match delta_max {
        Some(d) => d * diameter,
        None => (DEFAULT_DELTA_MAX * diameter).min(bx.min_length() - diameter),
    };
    let rho = number_density(ps.len(), diameter, bx).ok();
    match critical_percolation_distance(ps, bx, limit) {
        Ok(p) => Ok((Some(p), diameter, rho)),
        Err(srm_core::Error::NotPercolating { .. }) => Ok((None, diameter, rho)),
        Err(e) => Err(e),
    }
}

pub fn percolate_file(file: &SnapshotFile, delta_max: Option<f64>) -> Result<PercolationRow, CliError> {
    let (result, diameter, rho) = match &file.particles {
        Particles::Disks(v) => solve(v, &file.box2()?, delta_max)?,
        Particles::Spheres(v) => solve(v, &file.box3()?, delta_max)?,
        Particles::Platelets(v) => solve(v, &file.box3()?, delta_max)?,
    };
    let recipe = file
        .header
        .params
        .get("recipe")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    Ok(PercolationRow {
        rho,
        seed: file.header.seed,
        recipe,
        result,
        diameter,
    })
}

fn table(rows: &[PercolationRow], seed: Option<u64>, meta: &Map<String, Value>) -> Table {
    let mut t = Table::new(&COLUMNS, seed, meta);
    for r in rows {
        t.row(&r.cells());
    }
    t
}

#[derive(Debug, Clone)]
pub struct PercolationReport {
    pub rows: Vec<PercolationRow>,
    pub files: Vec<PathBuf>,
}

fn finish(report: PercolationReport) -> Result<PercolationReport, CliError> {
    if !report.rows.is_empty() && report.rows.iter().all(|r| r.result.is_none()) {
        return Err(CliError::NotPercolating);
    }
    Ok(report)
}

/// One row per snapshot file, written to `percolation.csv`.
pub fn run_percolate_files(paths: &[PathBuf], cfg: &Config) -> Result<PercolationReport, CliError> {
    let rows = with_pool(cfg.threads, || {
        paths
            .par_iter()
            .map(|p| SnapshotFile::read(p).and_then(|(f, _)| percolate_file(&f, cfg.delta_max)))
            .collect::<Vec<_>>()
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut meta = Map::new();
    meta.insert("snapshots".into(), json!(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()));
    meta.insert("delta_max".into(), json!(cfg.delta_max));
    let path = cfg.out_dir().join("percolation.csv");
    table(&rows, None, &meta).write(&path)?;
    finish(PercolationReport { rows, files: vec![path] })
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

/// Generates platelet ensembles for every density × recipe of the sweep
/// and solves each member. Writes `percolation_sweep.csv` (one row per
/// member) and `percolation_summary.csv` (median `delta_c/D` per density
/// and recipe; non-percolating members count as missing).
pub fn run_percolate_sweep(cfg: &Config) -> Result<PercolationReport, CliError> {
    let densities = cfg
        .sweep_densities
        .clone()
        .ok_or_else(|| CliError::Validation("sweep mode needs config key `sweep_densities`".into()))?;
    let recipes = cfg.sweep_recipes.clone().unwrap_or_else(|| vec![cfg.recipe.unwrap_or(Preset::Rsa)]);
    let mut jobs = Vec::new();
    let mut resolved_meta = Map::new();
    for &rho in &densities {
        for &recipe in &recipes {
            let member_cfg = Config {
                shape: Some(ShapeKind::Spherodisk),
                rho_target: Some(rho),
                recipe: Some(recipe),
                sweep_densities: None,
                sweep_recipes: None,
                ..cfg.clone()
            };
            let resolved = resolve_generation(&member_cfg)?;
            resolved_meta.insert(format!("{}@{rho}", recipe.name()), Value::Object(resolved.config.run_map()));
            for seed in member_seeds(resolved.config.seed(), resolved.config.ensemble()) {
                jobs.push((rho, recipe, resolved.clone(), seed));
            }
        }
    }
    let rows = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|(rho, recipe, resolved, seed)| -> Result<PercolationRow, CliError> {
                let file = generate_member(resolved, *seed, &mut RunLog::new())?;
                let mut row = percolate_file(&file, cfg.delta_max)?;
                row.rho = Some(*rho);
                row.recipe = recipe.name().to_string();
                Ok(row)
            })
            .collect::<Vec<_>>()
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let out = cfg.out_dir();
    let sweep_path = out.join("percolation_sweep.csv");
    table(&rows, cfg.seed, &resolved_meta).write(&sweep_path)?;

    let mut summary = Table::new(&["rho", "recipe", "members", "percolating", "median_delta_c_over_D"], cfg.seed, &resolved_meta);
    for &rho in &densities {
        for &recipe in &recipes {
            let group: Vec<&PercolationRow> = rows.iter().filter(|r| r.rho == Some(rho) && r.recipe == recipe.name()).collect();
            let mut v: Vec<f64> = group.iter().filter_map(|r| r.delta_c_over_d()).collect();
            summary.row(&[
                rho.to_string(),
                recipe.name().to_string(),
                group.len().to_string(),
                v.len().to_string(),
                cell(median(&mut v)),
            ]);
        }
    }
    let summary_path = out.join("percolation_summary.csv");
    summary.write(&summary_path)?;
    finish(PercolationReport {
        rows,
        files: vec![sweep_path, summary_path],
    })
}
