//! The `bench` command: wall time of disk/sphere growth over a list of
//! sizes, with and without locality reordering, and the fitted scaling
//! exponent.

use std::time::Instant;

use serde_json::{json, Map, Value};
use srm_core::engine::{srm_generate, Snapshot};
use srm_core::rng::rng_from_seed;
use srm_core::rsa::{radius_for_fraction, rsa_spheres, DEFAULT_MAX_ATTEMPTS};
use srm_core::{PeriodicBox, SrmParams};

use crate::config::{Config, ReorderMode};
use crate::error::CliError;
use crate::generate::member_seeds;
use crate::output::{cell, Table};
use crate::percolate::median;

pub const DEFAULT_SIZES: [usize; 3] = [10_000, 100_000, 1_000_000];
pub const DEFAULT_REPEATS: usize = 3;
pub const DEFAULT_REORDER_PERIOD: u32 = 10;

/// Growth settings of the benchmark; the migration length is a multiple of
/// the initial radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub dimension: usize,
    pub initial_fraction: f64,
    pub f_target: f64,
    pub swelling_rate: f64,
    pub migration_per_radius: f64,
    pub outer_attempts: u32,
    pub move_attempts: u32,
    pub reorder_period: u32,
    pub max_iterations: u64,
}

impl BenchSettings {
    pub fn from_config(cfg: &Config) -> Result<Self, CliError> {
        let dimension = cfg.dimension.unwrap_or(2);
        if dimension != 2 && dimension != 3 {
            return Err(CliError::Validation("config key `dimension`: must be 2 or 3".into()));
        }
        if cfg.migration_rate.is_some() {
            return Err(CliError::Validation(
                "config key `migration_rate`: bench scales the migration with the particle size; it is fixed at half the initial radius".into(),
            ));
        }
        let s = Self {
            dimension,
            initial_fraction: cfg.initial_fraction.unwrap_or(0.1),
            f_target: cfg.f_target.unwrap_or(if dimension == 2 { 0.5 } else { 0.4 }),
            swelling_rate: cfg.swelling_rate.unwrap_or(0.05),
            migration_per_radius: 0.5,
            outer_attempts: cfg.outer_attempts.unwrap_or(20),
            move_attempts: cfg.move_attempts.unwrap_or(10),
            reorder_period: cfg.reorder_period.unwrap_or(DEFAULT_REORDER_PERIOD),
            max_iterations: cfg.max_iterations.unwrap_or(1_000_000),
        };
        if !(s.initial_fraction > 0.0 && s.initial_fraction < s.f_target && s.f_target < 1.0) {
            return Err(CliError::Validation("bench needs 0 < initial_fraction < f_target < 1".into()));
        }
        if s.reorder_period == 0 {
            return Err(CliError::Validation("config key `reorder_period`: use `reorder` to disable reordering".into()));
        }
        Ok(s)
    }

    fn to_json(self) -> Value {
        json!({
            "dimension": self.dimension,
            "initial_fraction": self.initial_fraction,
            "f_target": self.f_target,
            "swelling_rate": self.swelling_rate,
            "migration_per_radius": self.migration_per_radius,
            "outer_attempts": self.outer_attempts,
            "move_attempts": self.move_attempts,
            "reorder_period": self.reorder_period,
            "max_iterations": self.max_iterations,
        })
    }
}

fn timed_run<const D: usize>(n: usize, seed: u64, reorder: bool, s: &BenchSettings) -> Result<f64, srm_core::Error> {
    let bx = PeriodicBox::<D>::unit();
    let mut rng = rng_from_seed(seed);
    let r0 = radius_for_fraction(n, s.initial_fraction, &bx);
    let ps = rsa_spheres::<D, _>(n, r0, &bx, DEFAULT_MAX_ATTEMPTS, &mut rng)?;
    let params = SrmParams {
        swelling_rate: s.swelling_rate,
        migration_rate: s.migration_per_radius * r0,
        outer_attempts: s.outer_attempts,
        move_attempts: s.move_attempts,
        target_fraction: s.f_target,
        max_iterations: s.max_iterations,
        seed,
        reorder_period: if reorder { s.reorder_period } else { 0 },
        ..SrmParams::default()
    };
    let mut snap = Snapshot::new(bx, ps, params, seed);
    let t = Instant::now();
    srm_generate(&mut snap, &params, &mut rng, &mut ())?;
    Ok(t.elapsed().as_secs_f64())
}

/// Wall time in seconds of one growth run (random packing excluded).
pub fn time_run(n: usize, seed: u64, reorder: bool, s: &BenchSettings) -> Result<f64, CliError> {
    Ok(match s.dimension {
        2 => timed_run::<2>(n, seed, reorder, s)?,
        _ => timed_run::<3>(n, seed, reorder, s)?,
    })
}

/// Least-squares slope of `ln t` against `ln n`; `None` below two sizes.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, t)| ((n as f64).ln(), t.ln())).collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub n: usize,
    pub reorder: bool,
    pub times: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    /// (reorder, slope) per mode with at least two sizes.
    pub slopes: Vec<(bool, f64)>,
    /// (n, time without reordering / time with) when both modes ran.
    pub speedups: Vec<(usize, f64)>,
    pub files: Vec<std::path::PathBuf>,
}

/// Runs the benchmark sequentially so repetitions do not compete for cores.
pub fn run_bench(cfg: &Config, mut progress: impl FnMut(&BenchPoint)) -> Result<BenchReport, CliError> {
    let settings = BenchSettings::from_config(cfg)?;
    let sizes = cfg.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] < 2 {
        return Err(CliError::Validation("config key `sizes`: need ascending sizes of at least 2".into()));
    }
    let repeats = cfg.repeats.unwrap_or(DEFAULT_REPEATS);
    if repeats < 3 {
        return Err(CliError::Validation("config key `repeats`: the median needs at least 3 runs".into()));
    }
    let modes: Vec<bool> = match cfg.reorder.unwrap_or(ReorderMode::Both) {
        ReorderMode::On => vec![true],
        ReorderMode::Off => vec![false],
        ReorderMode::Both => vec![false, true],
    };
    let seeds = member_seeds(cfg.seed(), repeats);
    let mut points = Vec::new();
    for &n in &sizes {
        for &reorder in &modes {
            let times = seeds
                .iter()
                .map(|&s| time_run(n, s, reorder, &settings))
                .collect::<Result<Vec<_>, _>>()?;
            let median = median(&mut times.clone()).expect("at least one run");
            let p = BenchPoint { n, reorder, times, median };
            progress(&p);
            points.push(p);
        }
    }
    let slopes = modes
        .iter()
        .filter_map(|&m| {
            let pts: Vec<(usize, f64)> = points.iter().filter(|p| p.reorder == m).map(|p| (p.n, p.median)).collect();
            loglog_slope(&pts).map(|s| (m, s))
        })
        .collect::<Vec<_>>();
    let speedups = if modes.len() == 2 {
        sizes
            .iter()
            .map(|&n| {
                let t = |m: bool| points.iter().find(|p| p.n == n && p.reorder == m).unwrap().median;
                (n, t(false) / t(true))
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut meta = Map::new();
    meta.insert("bench".into(), settings.to_json());
    meta.insert("sizes".into(), json!(sizes));
    meta.insert("repeats".into(), json!(repeats));
    meta.insert("seeds".into(), json!(seeds));
    let out = cfg.out_dir();
    let mut t = Table::new(&["n", "reorder", "repeats", "median_seconds", "speedup"], cfg.seed, &meta);
    for p in &points {
        let speedup = speedups.iter().find(|(n, _)| p.reorder && *n == p.n).map(|s| s.1);
        t.row(&[p.n.to_string(), p.reorder.to_string(), p.times.len().to_string(), p.median.to_string(), cell(speedup)]);
    }
    let bench_path = out.join("bench.csv");
    t.write(&bench_path)?;
    let mut files = vec![bench_path];
    if !slopes.is_empty() {
        let mut f = Table::new(&["reorder", "slope"], cfg.seed, &meta);
        for (m, s) in &slopes {
            f.row(&[m.to_string(), s.to_string()]);
        }
        let path = out.join("bench_fit.csv");
        f.write(&path)?;
        files.push(path);
    }
    Ok(BenchReport {
        points,
        slopes,
        speedups,
        files,
    })
}
