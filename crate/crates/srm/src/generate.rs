//! The `generate` command: resolved config → one snapshot and run log per
//! ensemble member.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{Map, Value};
use srm_core::engine::{srm_generate, IterationOutcome, IterationRecord, Observer, Snapshot};
use srm_core::platelet::generate_platelets;
use srm_core::rng::{derive_seed, rng_from_seed};
use srm_core::rsa::{rsa_spheres, DEFAULT_MAX_ATTEMPTS};
use srm_core::{PeriodicBox, Sphere, SrmParams};

use crate::config::{resolve_generation, Config, Plan, ResolvedGeneration, SnapshotFormat, SpherePlan};
use crate::error::CliError;
use crate::output::Table;
use crate::snapshot::{Particles, SnapshotFile, AUDIT_TOLERANCE};

/// Seeds of the ensemble members. A single run uses the master seed itself.
pub fn member_seeds(master: u64, ensemble: usize) -> Vec<u64> {
    if ensemble == 1 {
        vec![master]
    } else {
        (0..ensemble as u64).map(|k| derive_seed(master, k)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LogEntry {
    pub stage: usize,
    pub record: IterationRecord,
    pub shakes: u64,
    pub elapsed: f64,
}

/// Collects iteration records with wall time and a running shake count.
pub struct RunLog {
    start: Instant,
    stage: usize,
    offset: u64,
    last: u64,
    shakes: u64,
    pub entries: Vec<LogEntry>,
}

impl RunLog {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
            stage: 0,
            offset: 0,
            last: 0,
            shakes: 0,
            entries: Vec::new(),
        }
    }

    fn next_stage(&mut self) {
        self.stage += 1;
        self.offset = self.last;
    }

    pub fn table(&self, seed: u64, params: &Map<String, Value>) -> Table {
        let mut t = Table::new(
            &["iteration", "stage", "volume_fraction", "swell_factor", "outcome", "rounds", "moved", "shakes", "elapsed_s"],
            Some(seed),
            params,
        );
        for e in &self.entries {
            let (outcome, rounds) = match e.record.outcome {
                IterationOutcome::Accepted { rounds } => ("accepted", rounds.to_string()),
                IterationOutcome::Shaken => ("shaken", String::new()),
                IterationOutcome::Relaxed => ("relaxed", String::new()),
            };
            t.row(&[
                e.record.iteration.to_string(),
                e.stage.to_string(),
                e.record.volume_fraction.to_string(),
                e.record.swell_factor.to_string(),
                outcome.to_string(),
                rounds,
                e.record.moved.to_string(),
                e.shakes.to_string(),
                format!("{:.6}", e.elapsed),
            ]);
        }
        t
    }
}

impl Default for RunLog {
    fn default() -> Self {
        Self::new()
    }
}

impl Observer for RunLog {
    fn on_iteration(&mut self, record: &IterationRecord) {
        if record.outcome == IterationOutcome::Shaken {
            self.shakes += 1;
        }
        let mut record = *record;
        record.iteration += self.offset;
        self.last = self.last.max(record.iteration);
        self.entries.push(LogEntry {
            stage: self.stage,
            record,
            shakes: self.shakes,
            elapsed: self.start.elapsed().as_secs_f64(),
        });
    }
}

/// Random sequential packing followed by the planned growth stages.
pub fn generate_spheres<const D: usize>(
    plan: &SpherePlan,
    seed: u64,
    log: &mut RunLog,
) -> Result<Snapshot<D, Sphere<D>>, srm_core::Error> {
    let bx = PeriodicBox::<D>::new(core::array::from_fn(|k| plan.box_lengths[k]))?;
    let mut rng = rng_from_seed(seed);
    let ps = rsa_spheres::<D, _>(plan.count, plan.initial_radius, &bx, DEFAULT_MAX_ATTEMPTS, &mut rng)?;
    let first = plan.stages.first().map(|s| s.params).unwrap_or_default();
    let mut snap = Snapshot::new(bx, ps, SrmParams { seed, ..first }, seed);
    for stage in &plan.stages {
        let mut params = SrmParams { seed, ..stage.params };
        if let Some(m) = stage.migration_per_radius {
            params.migration_rate = m * snap.max_bounding_radius();
        }
        srm_generate(&mut snap, &params, &mut rng, log)?;
        log.next_stage();
    }
    Ok(snap)
}

/// Generates one member. The snapshot header carries `resolved` with the
/// member's seed, so regenerating from the header reproduces the file.
pub fn generate_member(resolved: &ResolvedGeneration, seed: u64, log: &mut RunLog) -> Result<SnapshotFile, srm_core::Error> {
    let member = resolved.with_seed(seed);
    let params = member.config.run_map();
    Ok(match &member.plan {
        Plan::Spheres(plan) if plan.dimension == 2 => {
            let s = generate_spheres::<2>(plan, seed, log)?;
            SnapshotFile::new(&s, Particles::Disks(s.particles.clone()), seed, params)
        }
        Plan::Spheres(plan) => {
            let s = generate_spheres::<3>(plan, seed, log)?;
            SnapshotFile::new(&s, Particles::Spheres(s.particles.clone()), seed, params)
        }
        Plan::Platelets { recipe, params: rp } => {
            let s = generate_platelets(*recipe, rp, log)?;
            SnapshotFile::new(&s, Particles::Platelets(s.particles.clone()), seed, params)
        }
    })
}

pub fn snapshot_path(out: &std::path::Path, seed: u64, format: SnapshotFormat) -> PathBuf {
    let ext = match format {
        SnapshotFormat::Text => "srm",
        SnapshotFormat::Binary => "srmb",
    };
    out.join(format!("snapshot_seed{seed}.{ext}"))
}

#[derive(Debug, Clone)]
pub struct MemberReport {
    pub seed: u64,
    pub snapshot: Option<PathBuf>,
    pub log: PathBuf,
    pub volume_fraction: Option<f64>,
    pub iterations: Option<u64>,
    pub shakes: u64,
    pub seconds: f64,
}

fn run_member(resolved: &ResolvedGeneration, seed: u64) -> Result<MemberReport, CliError> {
    let cfg = &resolved.config;
    let out = cfg.out_dir();
    let mut log = RunLog::new();
    let result = generate_member(resolved, seed, &mut log);
    let seconds = log.start.elapsed().as_secs_f64();
    let log_path = out.join(format!("runlog_seed{seed}.csv"));
    log.table(seed, &resolved.with_seed(seed).config.run_map()).write(&log_path)?;
    let file = result?;
    if cfg.audit_for(file.particles.len()) {
        let bad = file.audit(AUDIT_TOLERANCE)?;
        if let Some((i, j, gap)) = bad.first() {
            return Err(CliError::Audit(format!("seed {seed}: {} overlapping pairs, e.g. {i}-{j} with gap {gap}", bad.len())));
        }
    }
    let path = snapshot_path(&out, seed, cfg.format());
    file.write(&path, cfg.format())?;
    Ok(MemberReport {
        seed,
        snapshot: Some(path),
        log: log_path,
        volume_fraction: Some(file.header.volume_fraction),
        iterations: Some(file.header.iterations),
        shakes: log.shakes,
        seconds,
    })
}

/// Runs every ensemble member on a pool of `threads` workers (default: all
/// cores). Returns the member reports in seed order, or the first error.
pub fn run_generate(cfg: &Config) -> Result<Vec<MemberReport>, CliError> {
    let resolved = resolve_generation(cfg)?;
    let seeds = member_seeds(resolved.config.seed(), resolved.config.ensemble());
    let results = with_pool(cfg.threads, || seeds.par_iter().map(|&s| run_member(&resolved, s)).collect::<Vec<_>>())?;
    results.into_iter().collect()
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if threads == Some(0) {
        return Err(CliError::Validation("config key `threads`: must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
