//! Platelet microstructure recipes.
//!
//! All recipes start from a dilute random sequential packing in a cubic box
//! sized so that the platelet diameter is 1 at the requested number density.
//!
//! * `Hoc`: one fast growth run (large swelling, small migration and
//!   rotation) to the target density, which freezes in a random network of
//!   touching platelets.
//! * `QuasiNematic`: the `Hoc` result relaxed without swelling under large
//!   migration and rotation until the mean local alignment stops changing.
//! * `Stacked`: the `QuasiNematic` result grown further to a higher density.

use alloc::vec::Vec;

use crate::descriptors::{local_nematic_order, mean_present};
use crate::engine::{relax, srm_generate, IterationOutcome, IterationRecord, Observer, Snapshot, SrmParams};
use crate::error::{invalid, Error};
use crate::geometry::PeriodicBox;
use crate::math;
use crate::percolation::box_length_for_density;
use crate::rng::rng_from_seed;
use crate::rsa::rsa_place;

use super::{spherodisk_volume, Spherodisk};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Recipe {
    /// Random sequential adsorption directly at the target density.
    Rsa,
    Hoc,
    QuasiNematic,
    Stacked,
}

/// Recipe settings. Lengths are in units of the platelet diameter at the
/// target density.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RecipeParams {
    pub count: usize,
    pub aspect_ratio: f64,
    /// Target number density `N·D³/L³`.
    pub density: f64,
    pub seed: u64,
    /// Number density of the random sequential starting packing.
    pub initial_density: f64,
    /// Rejections allowed per platelet during random sequential placement.
    pub rsa_max_attempts: u32,
    pub hoc_swelling_rate: f64,
    pub hoc_migration_rate: f64,
    pub hoc_rotation_rate: f64,
    pub outer_attempts: u32,
    pub move_attempts: u32,
    pub relax_migration_rate: f64,
    pub relax_rotation_rate: f64,
    /// Relaxation stops once the mean alignment has moved by less than
    /// `plateau_tolerance` over the last `plateau_window` sweeps.
    pub plateau_window: u32,
    pub plateau_tolerance: f64,
    pub min_relax_sweeps: u64,
    pub max_relax_sweeps: u64,
    /// Neighbor cutoff of the alignment descriptor, in diameters.
    pub alignment_cutoff: f64,
    pub stacked_density: f64,
    pub stacked_swelling_rate: f64,
    pub stacked_migration_rate: f64,
    pub stacked_rotation_rate: f64,
    pub max_iterations: u64,
}

impl Default for RecipeParams {
    fn default() -> Self {
        Self {
            count: 2000,
            aspect_ratio: 100.0,
            density: 5.0,
            seed: 0,
            initial_density: 0.5,
            rsa_max_attempts: 1_000_000,
            hoc_swelling_rate: 0.005,
            hoc_migration_rate: 0.005,
            hoc_rotation_rate: 0.005,
            outer_attempts: 5,
            move_attempts: 5,
            relax_migration_rate: 0.08,
            relax_rotation_rate: 0.2,
            plateau_window: 500,
            plateau_tolerance: 0.01,
            min_relax_sweeps: 1000,
            max_relax_sweeps: 5000,
            alignment_cutoff: 1.5,
            stacked_density: 30.0,
            stacked_swelling_rate: 0.002,
            stacked_migration_rate: 0.01,
            stacked_rotation_rate: 0.01,
            max_iterations: 1_000_000,
        }
    }
}

impl RecipeParams {
    pub fn validate(&self, recipe: Recipe) -> Result<(), Error> {
        if self.count == 0 {
            return Err(invalid("platelet count must be positive"));
        }
        if !(self.aspect_ratio >= 1.0 && self.aspect_ratio.is_finite()) {
            return Err(invalid("aspect ratio must be at least 1"));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(invalid("density must be positive"));
        }
        if recipe != Recipe::Rsa && !(self.initial_density > 0.0 && self.initial_density <= self.density) {
            return Err(invalid("initial_density must lie in (0, density]"));
        }
        if recipe == Recipe::Stacked && !(self.stacked_density > self.density) {
            return Err(invalid("stacked_density must exceed density"));
        }
        if self.rsa_max_attempts == 0 {
            return Err(invalid("rsa_max_attempts must be positive"));
        }
        if self.plateau_window == 0 {
            return Err(invalid("plateau_window must be positive"));
        }
        Ok(())
    }

    /// Volume fraction of the platelets at number density `rho`.
    pub fn fraction_at(&self, rho: f64) -> f64 {
        rho * spherodisk_volume(1.0, 1.0 / self.aspect_ratio)
    }
}

/// Diameter-1 platelets in the box for `params.density`, placed by random
/// sequential adsorption at `rho` with random orientations.
fn rsa_platelets<R: rand::Rng + ?Sized>(params: &RecipeParams, rho: f64, rng: &mut R) -> Result<(PeriodicBox<3>, Vec<Spherodisk>), Error> {
    let bx = PeriodicBox::cube(box_length_for_density::<3>(params.count, 1.0, params.density))?;
    let d = math::cbrt(rho / params.density);
    let t = d / params.aspect_ratio;
    let templates = (0..params.count)
        .map(|i| Spherodisk::new(i as u32, [0.0; 3], [0.0, 0.0, 1.0], d, t))
        .collect::<Result<Vec<_>, _>>()?;
    let ps = rsa_place(templates, &bx, params.rsa_max_attempts, rng)?;
    Ok((bx, ps))
}

/// Runs `recipe`. Growth iterations and relaxation sweeps are reported to `observer`.
pub fn generate_platelets(recipe: Recipe, params: &RecipeParams, observer: &mut impl Observer) -> Result<Snapshot<3, Spherodisk>, Error> {
    generate_platelets_staged(recipe, params, observer, |_, _| {})
}

/// [`generate_platelets`], also handing every intermediate recipe result
/// (the `Hoc` state of a `QuasiNematic` run, for instance) to `on_stage`.
pub fn generate_platelets_staged(
    recipe: Recipe,
    params: &RecipeParams,
    observer: &mut impl Observer,
    mut on_stage: impl FnMut(Recipe, &Snapshot<3, Spherodisk>),
) -> Result<Snapshot<3, Spherodisk>, Error> {
    params.validate(recipe)?;
    let mut rng = rng_from_seed(params.seed);
    let growth = SrmParams {
        swelling_rate: params.hoc_swelling_rate,
        migration_rate: params.hoc_migration_rate,
        rotation_rate: params.hoc_rotation_rate,
        outer_attempts: params.outer_attempts,
        move_attempts: params.move_attempts,
        target_fraction: params.fraction_at(params.density),
        max_iterations: params.max_iterations,
        seed: params.seed,
        ..SrmParams::default()
    };
    if recipe == Recipe::Rsa {
        let (bx, ps) = rsa_platelets(params, params.density, &mut rng)?;
        return Ok(Snapshot::new(bx, ps, growth, params.seed));
    }
    let (bx, ps) = rsa_platelets(params, params.initial_density, &mut rng)?;
    let mut snap = Snapshot::new(bx, ps, growth, params.seed);
    srm_generate(&mut snap, &growth, &mut rng, observer)?;
    if recipe == Recipe::Hoc {
        return Ok(snap);
    }
    on_stage(Recipe::Hoc, &snap);

    let window = params.plateau_window as usize;
    let mut history: Vec<f64> = Vec::new();
    let base = snap.iteration_count;
    let f = snap.volume_fraction;
    let mut failure = None;
    relax(
        &mut snap,
        params.relax_migration_rate,
        params.relax_rotation_rate,
        params.move_attempts,
        params.max_relax_sweeps,
        &mut rng,
        |sweep, moved, ps| {
            let order = match local_nematic_order(ps, &bx, params.alignment_cutoff) {
                Ok(o) => o,
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            };
            let m = mean_present(&order).unwrap_or(0.0);
            observer.on_iteration(&IterationRecord {
                iteration: base + sweep,
                volume_fraction: f,
                swell_factor: 1.0,
                outcome: IterationOutcome::Relaxed,
                moved,
            });
            history.push(m);
            if sweep < params.min_relax_sweeps || history.len() <= window {
                return true;
            }
            let recent = &history[history.len() - window - 1..];
            let (lo, hi) = recent
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            hi - lo >= params.plateau_tolerance
        },
    )
    .map(|sweeps| snap.iteration_count += sweeps)?;
    if let Some(e) = failure {
        return Err(e);
    }
    if recipe == Recipe::QuasiNematic {
        return Ok(snap);
    }
    on_stage(Recipe::QuasiNematic, &snap);

    let dense = SrmParams {
        swelling_rate: params.stacked_swelling_rate,
        migration_rate: params.stacked_migration_rate,
        rotation_rate: params.stacked_rotation_rate,
        target_fraction: params.fraction_at(params.stacked_density),
        ..growth
    };
    srm_generate(&mut snap, &dense, &mut rng, observer)?;
    Ok(snap)
}
