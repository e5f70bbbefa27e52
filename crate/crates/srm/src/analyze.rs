//! The `analyze` command: per-particle descriptor table and histograms.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use srm_core::descriptors::{histogram, local_nematic_order, local_volume_fractions, nearest_neighbor_distances, Histogram};
use srm_core::geometry::PeriodicBox;
use srm_core::rng::rng_from_seed;
use srm_core::shape::Shape;

use crate::config::{Config, Descriptor};
use crate::error::CliError;
use crate::output::{cell, Table};
use crate::snapshot::{Particles, SnapshotFile, AUDIT_TOLERANCE};

pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_LVF_SAMPLES_PER_PARTICLE: u64 = 1000;
pub const DEFAULT_ALIGNMENT_CUTOFF: f64 = 1.5;

/// Descriptor values per particle, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescriptorValues {
    pub ids: Vec<u32>,
    pub nnd: Option<Vec<f64>>,
    pub lvf: Option<Vec<Option<f64>>>,
    pub alignment: Option<Vec<Option<f64>>>,
    /// Smallest Voronoi hit count; estimates from cells below the reliability
    /// threshold are still reported.
    pub lvf_min_hits: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub nnd: bool,
    pub lvf: bool,
    pub alignment: bool,
    pub lvf_samples_per_particle: u64,
    pub alignment_cutoff: f64,
    pub seed: u64,
}

fn compute<const D: usize, S: Shape<D>>(
    ps: &[S],
    bx: &PeriodicBox<D>,
    s: &AnalysisSettings,
) -> Result<DescriptorValues, srm_core::Error> {
    let mut v = DescriptorValues {
        ids: ps.iter().map(Shape::id).collect(),
        ..Default::default()
    };
    if s.nnd {
        v.nnd = Some(nearest_neighbor_distances(ps, bx)?);
    }
    if s.lvf {
        let mut rng = rng_from_seed(s.seed);
        let samples = s.lvf_samples_per_particle.saturating_mul(ps.len() as u64);
        let l = local_volume_fractions(ps, bx, samples, &mut rng)?;
        v.lvf_min_hits = Some(l.min_hits());
        v.lvf = Some(l.lvf);
    }
    Ok(v)
}

pub fn descriptors(file: &SnapshotFile, s: &AnalysisSettings) -> Result<DescriptorValues, CliError> {
    if s.alignment && !matches!(file.particles, Particles::Platelets(_)) {
        return Err(CliError::Validation("alignment is defined for spherodisk snapshots only".into()));
    }
    Ok(match &file.particles {
        Particles::Disks(v) => compute(v, &file.box2()?, s)?,
        Particles::Spheres(v) => compute(v, &file.box3()?, s)?,
        Particles::Platelets(v) => {
            let bx = file.box3()?;
            let mut d = compute(v, &bx, s)?;
            if s.alignment {
                // the cutoff is in platelet diameters
                let diameter = v.iter().map(|p| p.diameter).fold(0.0, f64::max);
                d.alignment = Some(local_nematic_order(v, &bx, s.alignment_cutoff * diameter)?);
            }
            d
        }
    })
}

fn stats(values: impl Iterator<Item = f64>) -> (usize, f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    if n == 0 {
        return (0, f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (n, mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub files: Vec<PathBuf>,
    /// (descriptor, count, mean, population standard deviation)
    pub summary: Vec<(&'static str, usize, f64, f64)>,
}

fn histogram_table(h: &Histogram, seed: u64, meta: &Map<String, Value>) -> Table {
    let mut t = Table::new(&["bin_left", "bin_right", "count", "density"], Some(seed), meta);
    for (k, (&c, &d)) in h.counts.iter().zip(&h.density).enumerate() {
        let (l, r) = h.bin_edges(k);
        t.row(&[l.to_string(), r.to_string(), c.to_string(), d.to_string()]);
    }
    t
}

/// Analyzes one snapshot file and writes `<stem>_particles.csv` plus one
/// `<stem>_hist_<descriptor>.csv` per descriptor into the output directory.
pub fn run_analyze(snapshot: &Path, cfg: &Config) -> Result<AnalysisReport, CliError> {
    let (file, _) = SnapshotFile::read(snapshot)?;
    if cfg.audit_for(file.particles.len()) {
        let bad = file.audit(AUDIT_TOLERANCE)?;
        if let Some((i, j, gap)) = bad.first() {
            return Err(CliError::Audit(format!("{}: {} overlapping pairs, e.g. {i}-{j} with gap {gap}", snapshot.display(), bad.len())));
        }
    }
    let platelets = matches!(file.particles, Particles::Platelets(_));
    let chosen = cfg.descriptors.clone().unwrap_or_else(|| vec![Descriptor::Nnd, Descriptor::Lvf]);
    let settings = AnalysisSettings {
        nnd: chosen.contains(&Descriptor::Nnd),
        lvf: chosen.contains(&Descriptor::Lvf),
        alignment: chosen.contains(&Descriptor::Alignment),
        lvf_samples_per_particle: cfg.lvf_samples_per_particle.unwrap_or(DEFAULT_LVF_SAMPLES_PER_PARTICLE),
        alignment_cutoff: cfg.alignment_cutoff.unwrap_or(DEFAULT_ALIGNMENT_CUTOFF),
        seed: cfg.seed.unwrap_or(file.header.seed),
    };
    if settings.lvf && settings.lvf_samples_per_particle == 0 {
        return Err(CliError::Validation("config key `lvf_samples_per_particle`: must be positive".into()));
    }
    let bins = cfg.bins.unwrap_or(DEFAULT_BINS);
    if bins == 0 {
        return Err(CliError::Validation("config key `bins`: must be positive".into()));
    }
    let values = descriptors(&file, &settings)?;

    let mut meta = file.header.params.clone();
    meta.insert(
        "analysis".into(),
        json!({
            "descriptors": chosen,
            "bins": bins,
            "lvf_samples_per_particle": settings.lvf_samples_per_particle,
            "lvf_min_hits": values.lvf_min_hits,
            "alignment_cutoff": platelets.then_some(settings.alignment_cutoff),
            "analysis_seed": settings.seed,
            "snapshot": snapshot.display().to_string(),
        }),
    );
    let seed = file.header.seed;
    let stem = snapshot.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    let out = cfg.out_dir();
    let mut files = Vec::new();

    let mut columns = vec!["id"];
    let mut cols: Vec<(&'static str, Vec<Option<f64>>)> = Vec::new();
    if let Some(v) = &values.nnd {
        cols.push(("nnd", v.iter().map(|&x| Some(x)).collect()));
    }
    if let Some(v) = &values.lvf {
        cols.push(("lvf", v.clone()));
    }
    if let Some(v) = &values.alignment {
        cols.push(("alignment", v.clone()));
    }
    columns.extend(cols.iter().map(|(n, _)| *n));
    let mut table = Table::new(&columns, Some(seed), &meta);
    for (k, id) in values.ids.iter().enumerate() {
        let mut row = vec![id.to_string()];
        row.extend(cols.iter().map(|(_, v)| cell(v[k])));
        table.row(&row);
    }
    let path = out.join(format!("{stem}_particles.csv"));
    table.write(&path)?;
    files.push(path);

    let mut summary = Vec::new();
    for (name, v) in &cols {
        let present: Vec<f64> = v.iter().flatten().copied().collect();
        let (n, mean, sd) = stats(present.iter().copied());
        summary.push((*name, n, mean, sd));
        let (lo, hi) = match *name {
            "nnd" => (0.0, present.iter().copied().fold(0.0, f64::max)),
            "lvf" => (0.0, present.iter().copied().fold(1.0, f64::max)),
            _ => (0.0, 1.0),
        };
        if hi > lo {
            let h = histogram(&present, bins, lo, hi)?;
            let path = out.join(format!("{stem}_hist_{name}.csv"));
            histogram_table(&h, seed, &meta).write(&path)?;
            files.push(path);
        }
    }
    Ok(AnalysisReport { files, summary })
}
