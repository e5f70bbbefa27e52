//! Run configuration.
//!
//! A config file is one flat JSON object. Every key is optional and every
//! command-line flag sets the key of the same name, overriding the file.
//! Unknown keys are rejected. `resolve_*` turns a config into concrete
//! engine parameters and returns the fully resolved config, which is echoed
//! into the header of every output so a run can be reproduced from its files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use srm_core::platelet::{Recipe, RecipeParams};
use srm_core::rsa::radius_for_fraction;
use srm_core::{PeriodicBox, SrmParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ShapeKind {
    Disk,
    Sphere,
    Spherodisk,
}

impl ShapeKind {
    pub fn dimension(self) -> usize {
        match self {
            ShapeKind::Disk => 2,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Disk => "disk",
            ShapeKind::Sphere => "sphere",
            ShapeKind::Spherodisk => "spherodisk",
        }
    }
}

/// Named parameter sets. `equilibrium` and `clustered` apply to disks and
/// spheres; `hoc`, `quasi_nematic` and `stacked` to platelets; `rsa` to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    Equilibrium,
    Clustered,
    Rsa,
    Hoc,
    QuasiNematic,
    Stacked,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Equilibrium => "equilibrium",
            Preset::Clustered => "clustered",
            Preset::Rsa => "rsa",
            Preset::Hoc => "hoc",
            Preset::QuasiNematic => "quasi_nematic",
            Preset::Stacked => "stacked",
        }
    }

    fn platelet_recipe(self) -> Option<Recipe> {
        match self {
            Preset::Rsa => Some(Recipe::Rsa),
            Preset::Hoc => Some(Recipe::Hoc),
            Preset::QuasiNematic => Some(Recipe::QuasiNematic),
            Preset::Stacked => Some(Recipe::Stacked),
            Preset::Equilibrium | Preset::Clustered => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Descriptor {
    Nnd,
    Lvf,
    Alignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ReorderMode {
    On,
    Off,
    Both,
}

/// One leg of a staged disk/sphere run. The migration length is given
/// relative to the particle radius at the start of the stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub f_target: f64,
    pub swelling_rate: f64,
    pub migration_per_radius: f64,
}

/// The flat config schema. See the README for the meaning of each key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub shape: Option<ShapeKind>,
    pub dimension: Option<usize>,
    pub n: Option<usize>,
    pub f_target: Option<f64>,
    pub rho_target: Option<f64>,
    pub box_lengths: Option<Vec<f64>>,
    pub initial_fraction: Option<f64>,
    pub recipe: Option<Preset>,
    pub swelling_rate: Option<f64>,
    pub migration_rate: Option<f64>,
    pub rotation_rate: Option<f64>,
    pub outer_attempts: Option<u32>,
    pub move_attempts: Option<u32>,
    pub max_iterations: Option<u64>,
    pub reorder_period: Option<u32>,
    pub final_relaxation_sweeps: Option<u32>,
    pub stages: Option<Vec<Stage>>,

    pub aspect_ratio: Option<f64>,
    pub initial_density: Option<f64>,
    pub rsa_max_attempts: Option<u32>,
    pub relax_migration_rate: Option<f64>,
    pub relax_rotation_rate: Option<f64>,
    pub plateau_window: Option<u32>,
    pub plateau_tolerance: Option<f64>,
    pub min_relax_sweeps: Option<u64>,
    pub max_relax_sweeps: Option<u64>,
    pub stacked_density: Option<f64>,
    pub stacked_swelling_rate: Option<f64>,
    pub stacked_migration_rate: Option<f64>,
    pub stacked_rotation_rate: Option<f64>,

    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub ensemble: Option<usize>,
    pub threads: Option<usize>,
    pub audit: Option<bool>,
    pub format: Option<SnapshotFormat>,

    pub descriptors: Option<Vec<Descriptor>>,
    pub bins: Option<usize>,
    pub lvf_samples_per_particle: Option<u64>,
    pub alignment_cutoff: Option<f64>,

    pub delta_max: Option<f64>,
    pub sweep_densities: Option<Vec<f64>>,
    pub sweep_recipes: Option<Vec<Preset>>,

    pub sizes: Option<Vec<usize>>,
    pub repeats: Option<usize>,
    pub reorder: Option<ReorderMode>,
}

/// Above this many particles the O(N²) audit is off unless requested.
pub const AUDIT_AUTO_LIMIT: usize = 10_000;

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// `self` with every key set in `overlay` replaced.
    pub fn merged(&self, overlay: &Config) -> Config {
        let mut base = self.to_map();
        base.extend(overlay.to_map());
        serde_json::from_value(Value::Object(base)).expect("merging two valid configs")
    }

    /// The keys that determine a run's output, without where it is written
    /// or how many workers run it.
    pub fn run_map(&self) -> Map<String, Value> {
        let mut m = self.to_map();
        m.remove("out");
        m.remove("threads");
        m
    }

    /// The keys that are set, as a sorted JSON object.
    pub fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("config serializes") {
            Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
            _ => unreachable!(),
        }
    }

    pub fn to_json(&self) -> String {
        Value::Object(self.to_map()).to_string()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn ensemble(&self) -> usize {
        self.ensemble.unwrap_or(1)
    }

    pub fn format(&self) -> SnapshotFormat {
        self.format.unwrap_or_default()
    }

    pub fn audit_for(&self, count: usize) -> bool {
        self.audit.unwrap_or(count <= AUDIT_AUTO_LIMIT)
    }

    fn shape(&self) -> Result<ShapeKind, CliError> {
        let shape = match (self.shape, self.dimension) {
            (Some(s), _) => s,
            (None, Some(2) | None) => ShapeKind::Disk,
            (None, Some(3)) => ShapeKind::Sphere,
            (None, Some(d)) => return Err(invalid("dimension", format!("must be 2 or 3, got {d}"))),
        };
        if let Some(d) = self.dimension {
            if d != shape.dimension() {
                return Err(invalid("dimension", format!("{d} does not match shape {}", shape.name())));
            }
        }
        Ok(shape)
    }
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("config key `{key}`: {msg}"))
}

/// Defaults of the disk/sphere presets. Migration lengths are multiples of
/// the initial radius.
#[derive(Debug, Clone, Copy)]
struct SpherePreset {
    swelling_rate: f64,
    migration_per_radius: f64,
    outer_attempts: u32,
    move_attempts: u32,
    final_relaxation_sweeps: u32,
}

fn sphere_preset(preset: Preset) -> SpherePreset {
    match preset {
        Preset::Clustered => SpherePreset {
            swelling_rate: 0.01,
            migration_per_radius: 0.1,
            outer_attempts: 20,
            move_attempts: 10,
            final_relaxation_sweeps: 0,
        },
        _ => SpherePreset {
            swelling_rate: 0.01,
            migration_per_radius: 0.5,
            outer_attempts: 20,
            move_attempts: 10,
            final_relaxation_sweeps: 200,
        },
    }
}

pub const DEFAULT_INITIAL_FRACTION: f64 = 0.1;

/// Everything needed to generate one disk or sphere configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePlan {
    pub dimension: usize,
    pub count: usize,
    pub box_lengths: Vec<f64>,
    pub initial_radius: f64,
    /// Empty when the target is reached by random sequential adsorption alone.
    pub stages: Vec<PlannedStage>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedStage {
    pub params: SrmParams,
    /// When set, the migration length is this multiple of the radius at the
    /// start of the stage and `params.migration_rate` is ignored.
    pub migration_per_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Spheres(SpherePlan),
    Platelets { recipe: Recipe, params: RecipeParams },
}

/// A generation config with every default filled in, and what it means.
#[derive(Debug, Clone)]
pub struct ResolvedGeneration {
    pub config: Config,
    pub shape: ShapeKind,
    pub preset: Preset,
    pub plan: Plan,
}

impl ResolvedGeneration {
    /// Same run with another seed, as recorded for one ensemble member.
    pub fn with_seed(&self, seed: u64) -> ResolvedGeneration {
        let mut r = self.clone();
        r.config.seed = Some(seed);
        r.config.ensemble = Some(1);
        if let Plan::Platelets { params, .. } = &mut r.plan {
            params.seed = seed;
        }
        if let Plan::Spheres(p) = &mut r.plan {
            for s in &mut p.stages {
                s.params.seed = seed;
            }
        }
        r
    }
}

pub fn resolve_generation(cfg: &Config) -> Result<ResolvedGeneration, CliError> {
    let shape = cfg.shape()?;
    let mut out = cfg.clone();
    out.shape = Some(shape);
    out.dimension = Some(shape.dimension());
    out.seed = Some(cfg.seed());
    out.ensemble = Some(cfg.ensemble());
    if out.ensemble == Some(0) {
        return Err(invalid("ensemble", "must be at least 1"));
    }
    let n = cfg.n.unwrap_or(1000);
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    out.n = Some(n);
    let preset = cfg.recipe.unwrap_or(if shape == ShapeKind::Spherodisk { Preset::Hoc } else { Preset::Equilibrium });
    out.recipe = Some(preset);

    let plan = if shape == ShapeKind::Spherodisk {
        resolve_platelets(cfg, &mut out, n, preset)?
    } else {
        resolve_spheres(cfg, &mut out, shape, n, preset)?
    };
    Ok(ResolvedGeneration {
        config: out,
        shape,
        preset,
        plan,
    })
}

fn resolve_spheres(cfg: &Config, out: &mut Config, shape: ShapeKind, n: usize, preset: Preset) -> Result<Plan, CliError> {
    let dim = shape.dimension();
    if preset.platelet_recipe().is_some() && preset != Preset::Rsa {
        return Err(invalid("recipe", format!("{} applies to spherodisks only", preset.name())));
    }
    if cfg.rho_target.is_some() {
        return Err(invalid("rho_target", "number density targets apply to spherodisks only; use f_target"));
    }
    let lengths = cfg.box_lengths.clone().unwrap_or_else(|| vec![1.0; dim]);
    if lengths.len() != dim {
        return Err(invalid("box_lengths", format!("expected {dim} lengths, got {}", lengths.len())));
    }
    if !lengths.iter().all(|l| l.is_finite() && *l > 0.0) {
        return Err(invalid("box_lengths", "lengths must be finite and positive"));
    }
    let stages_cfg = cfg.stages.clone().unwrap_or_default();
    let f_target = match (cfg.f_target, stages_cfg.last()) {
        (Some(f), Some(last)) if f != last.f_target => {
            return Err(invalid("stages", "the last stage must end at f_target"));
        }
        (Some(f), _) => f,
        (None, Some(last)) => last.f_target,
        (None, None) => if dim == 2 { 0.5 } else { 0.4 },
    };
    if !(f_target > 0.0 && f_target < 1.0) {
        return Err(invalid("f_target", "must lie in (0, 1)"));
    }
    let f0 = cfg.initial_fraction.unwrap_or(DEFAULT_INITIAL_FRACTION).min(f_target);
    if !(f0 > 0.0) {
        return Err(invalid("initial_fraction", "must be positive"));
    }
    out.f_target = Some(f_target);
    out.initial_fraction = Some(f0);
    out.box_lengths = Some(lengths.clone());
    let initial_radius = if dim == 2 {
        radius_for_fraction::<2>(n, f0, &PeriodicBox::new([lengths[0], lengths[1]]).map_err(core_invalid)?)
    } else {
        radius_for_fraction::<3>(n, f0, &PeriodicBox::new([lengths[0], lengths[1], lengths[2]]).map_err(core_invalid)?)
    };

    let defaults = sphere_preset(preset);
    let base = SrmParams {
        swelling_rate: cfg.swelling_rate.unwrap_or(defaults.swelling_rate),
        migration_rate: cfg.migration_rate.unwrap_or(defaults.migration_per_radius * initial_radius),
        rotation_rate: 0.0,
        outer_attempts: cfg.outer_attempts.unwrap_or(defaults.outer_attempts),
        move_attempts: cfg.move_attempts.unwrap_or(defaults.move_attempts),
        target_fraction: f_target,
        max_iterations: cfg.max_iterations.unwrap_or(1_000_000),
        seed: cfg.seed(),
        reorder_period: cfg.reorder_period.unwrap_or(SrmParams::default().reorder_period),
        final_relaxation_sweeps: cfg.final_relaxation_sweeps.unwrap_or(defaults.final_relaxation_sweeps),
    };
    let mut stages = Vec::new();
    if preset != Preset::Rsa && f_target > f0 {
        if stages_cfg.is_empty() {
            stages.push(PlannedStage {
                params: base,
                migration_per_radius: None,
            });
        } else {
            let mut prev = f0;
            for (k, s) in stages_cfg.iter().enumerate() {
                if !(s.f_target > prev) {
                    return Err(invalid("stages", format!("stage {k} must raise f above {prev}")));
                }
                if !(s.migration_per_radius > 0.0 && s.swelling_rate >= 0.0) {
                    return Err(invalid("stages", format!("stage {k} needs positive migration and non-negative swelling")));
                }
                prev = s.f_target;
                let last = k + 1 == stages_cfg.len();
                stages.push(PlannedStage {
                    params: SrmParams {
                        swelling_rate: s.swelling_rate,
                        target_fraction: s.f_target,
                        final_relaxation_sweeps: if last { base.final_relaxation_sweeps } else { 0 },
                        ..base
                    },
                    migration_per_radius: Some(s.migration_per_radius),
                });
            }
        }
        for s in &stages {
            s.params.validate().map_err(core_invalid)?;
        }
        out.swelling_rate = Some(base.swelling_rate);
        out.migration_rate = Some(base.migration_rate);
        out.outer_attempts = Some(base.outer_attempts);
        out.move_attempts = Some(base.move_attempts);
        out.max_iterations = Some(base.max_iterations);
        out.reorder_period = Some(base.reorder_period);
        out.final_relaxation_sweeps = Some(base.final_relaxation_sweeps);
    }
    Ok(Plan::Spheres(SpherePlan {
        dimension: dim,
        count: n,
        box_lengths: lengths,
        initial_radius,
        stages,
    }))
}

fn resolve_platelets(cfg: &Config, out: &mut Config, n: usize, preset: Preset) -> Result<Plan, CliError> {
    let recipe = preset
        .platelet_recipe()
        .ok_or_else(|| invalid("recipe", format!("{} applies to disks and spheres only", preset.name())))?;
    if cfg.f_target.is_some() {
        return Err(invalid("f_target", "spherodisk targets are number densities; use rho_target"));
    }
    if cfg.box_lengths.is_some() {
        return Err(invalid("box_lengths", "the platelet box is the cube fixed by n and rho_target"));
    }
    if cfg.stages.is_some() {
        return Err(invalid("stages", "staged runs apply to disks and spheres only"));
    }
    let d = RecipeParams::default();
    let params = RecipeParams {
        count: n,
        aspect_ratio: cfg.aspect_ratio.unwrap_or(d.aspect_ratio),
        density: cfg.rho_target.unwrap_or(d.density),
        seed: cfg.seed(),
        initial_density: cfg.initial_density.unwrap_or(d.initial_density),
        rsa_max_attempts: cfg.rsa_max_attempts.unwrap_or(d.rsa_max_attempts),
        hoc_swelling_rate: cfg.swelling_rate.unwrap_or(d.hoc_swelling_rate),
        hoc_migration_rate: cfg.migration_rate.unwrap_or(d.hoc_migration_rate),
        hoc_rotation_rate: cfg.rotation_rate.unwrap_or(d.hoc_rotation_rate),
        outer_attempts: cfg.outer_attempts.unwrap_or(d.outer_attempts),
        move_attempts: cfg.move_attempts.unwrap_or(d.move_attempts),
        relax_migration_rate: cfg.relax_migration_rate.unwrap_or(d.relax_migration_rate),
        relax_rotation_rate: cfg.relax_rotation_rate.unwrap_or(d.relax_rotation_rate),
        plateau_window: cfg.plateau_window.unwrap_or(d.plateau_window),
        plateau_tolerance: cfg.plateau_tolerance.unwrap_or(d.plateau_tolerance),
        min_relax_sweeps: cfg.min_relax_sweeps.unwrap_or(d.min_relax_sweeps),
        max_relax_sweeps: cfg.max_relax_sweeps.unwrap_or(d.max_relax_sweeps),
        alignment_cutoff: cfg.alignment_cutoff.unwrap_or(d.alignment_cutoff),
        stacked_density: cfg.stacked_density.unwrap_or(d.stacked_density),
        stacked_swelling_rate: cfg.stacked_swelling_rate.unwrap_or(d.stacked_swelling_rate),
        stacked_migration_rate: cfg.stacked_migration_rate.unwrap_or(d.stacked_migration_rate),
        stacked_rotation_rate: cfg.stacked_rotation_rate.unwrap_or(d.stacked_rotation_rate),
        max_iterations: cfg.max_iterations.unwrap_or(d.max_iterations),
    };
    params.validate(recipe).map_err(core_invalid)?;
    out.rho_target = Some(params.density);
    out.aspect_ratio = Some(params.aspect_ratio);
    out.rsa_max_attempts = Some(params.rsa_max_attempts);
    if recipe != Recipe::Rsa {
        out.initial_density = Some(params.initial_density);
        out.swelling_rate = Some(params.hoc_swelling_rate);
        out.migration_rate = Some(params.hoc_migration_rate);
        out.rotation_rate = Some(params.hoc_rotation_rate);
        out.outer_attempts = Some(params.outer_attempts);
        out.move_attempts = Some(params.move_attempts);
        out.max_iterations = Some(params.max_iterations);
    }
    if matches!(recipe, Recipe::QuasiNematic | Recipe::Stacked) {
        out.relax_migration_rate = Some(params.relax_migration_rate);
        out.relax_rotation_rate = Some(params.relax_rotation_rate);
        out.plateau_window = Some(params.plateau_window);
        out.plateau_tolerance = Some(params.plateau_tolerance);
        out.min_relax_sweeps = Some(params.min_relax_sweeps);
        out.max_relax_sweeps = Some(params.max_relax_sweeps);
        out.alignment_cutoff = Some(params.alignment_cutoff);
    }
    if recipe == Recipe::Stacked {
        out.stacked_density = Some(params.stacked_density);
        out.stacked_swelling_rate = Some(params.stacked_swelling_rate);
        out.stacked_migration_rate = Some(params.stacked_migration_rate);
        out.stacked_rotation_rate = Some(params.stacked_rotation_rate);
    }
    Ok(Plan::Platelets { recipe, params })
}

fn core_invalid(e: srm_core::Error) -> CliError {
    CliError::Validation(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Config::from_json(r#"{"n": 10, "seed": 3, "f_target": 0.3}"#).unwrap();
        let flags = Config {
            seed: Some(9),
            ..Config::default()
        };
        let m = file.merged(&flags);
        assert_eq!(m.seed, Some(9));
        assert_eq!(m.n, Some(10));
        assert_eq!(m.f_target, Some(0.3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = Config::from_json(r#"{"n": 10, "swelling": 0.1}"#).unwrap_err();
        assert!(e.to_string().contains("swelling"), "{e}");
        let e = Config::from_json("{\n\"n\": \"ten\"}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn resolution_fills_and_checks() {
        let r = resolve_generation(&Config::default()).unwrap();
        assert_eq!(r.shape, ShapeKind::Disk);
        assert_eq!(r.config.f_target, Some(0.5));
        assert!(r.config.migration_rate.unwrap() > 0.0);
        // resolving the resolved config changes nothing
        let again = resolve_generation(&r.config).unwrap();
        assert_eq!(again.config, r.config);
        assert_eq!(again.plan, r.plan);

        let bad = |json: &str| resolve_generation(&Config::from_json(json).unwrap()).is_err();
        assert!(bad(r#"{"shape": "sphere", "dimension": 2}"#));
        assert!(bad(r#"{"shape": "spherodisk", "f_target": 0.1}"#));
        assert!(bad(r#"{"shape": "disk", "rho_target": 2}"#));
        assert!(bad(r#"{"shape": "disk", "recipe": "hoc"}"#));
        assert!(bad(r#"{"shape": "spherodisk", "recipe": "clustered"}"#));
        assert!(bad(r#"{"f_target": 1.5}"#));
        assert!(bad(r#"{"box_lengths": [1, 1, 1]}"#));
        assert!(bad(r#"{"stages": [{"f_target": 0.5, "swelling_rate": 0.01, "migration_per_radius": 0.1}], "f_target": 0.6}"#));
    }

    #[test]
    fn platelet_resolution() {
        let r = resolve_generation(&Config::from_json(r#"{"shape": "spherodisk", "n": 100, "rho_target": 2, "recipe": "hoc"}"#).unwrap()).unwrap();
        match r.plan {
            Plan::Platelets { recipe, params } => {
                assert_eq!(recipe, Recipe::Hoc);
                assert_eq!(params.count, 100);
                assert_eq!(params.density, 2.0);
            }
            _ => panic!("expected platelets"),
        }
        assert_eq!(r.config.dimension, Some(3));
    }
}
