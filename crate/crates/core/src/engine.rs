//! The swelling and random migration loop.
//!
//! Each outer iteration copies the accepted configuration `P` to `Q`, swells
//! `Q`, then runs up to `N_k` rounds of (rebuild cells, migrate every
//! particle, global overlap check). An overlap-free `Q` replaces `P`;
//! otherwise `Q` is dropped and `P` is shaken by `N_k` migration sweeps at its
//! current size. The loop ends once the target volume fraction is reached,
//! with the last swell clamped so the target is hit exactly.

use alloc::vec::Vec;

use rand::Rng;

use crate::cell_grid::{generator_cell_size, grid_dims, CellGrid};
use crate::error::{invalid, Error};
use crate::geometry::{volume_fraction, PeriodicBox};
use crate::math;
use crate::shape::Shape;

/// Control parameters of one generation run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SrmParams {
    /// `c_w`: per-iteration relative growth, `R ← R·(1 + c_w)`.
    pub swelling_rate: f64,
    /// `c_m`: length of every trial displacement.
    pub migration_rate: f64,
    /// `c_r`: rotation angle of every trial move, radians. Ignored by
    /// isotropic shapes.
    pub rotation_rate: f64,
    /// `N_k`: migrate/check rounds per iteration, also the number of shake sweeps.
    pub outer_attempts: u32,
    /// `N_l`: trial moves per particle per sweep.
    pub move_attempts: u32,
    pub target_fraction: f64,
    pub max_iterations: u64,
    pub seed: u64,
    /// Outer iterations between locality reorders; 0 disables reordering.
    pub reorder_period: u32,
    /// Migration sweeps (no swelling) run after the target is reached.
    pub final_relaxation_sweeps: u32,
}

impl Default for SrmParams {
    fn default() -> Self {
        Self {
            swelling_rate: 0.01,
            migration_rate: 0.001,
            rotation_rate: 0.0,
            outer_attempts: 5,
            move_attempts: 5,
            target_fraction: 0.5,
            max_iterations: 1_000_000,
            seed: 0,
            reorder_period: 16,
            final_relaxation_sweeps: 0,
        }
    }
}

impl SrmParams {
    pub fn validate(&self) -> Result<(), Error> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.swelling_rate) {
            return Err(invalid("swelling_rate must be finite and >= 0"));
        }
        if !finite_nonneg(self.migration_rate) {
            return Err(invalid("migration_rate must be finite and >= 0"));
        }
        if !finite_nonneg(self.rotation_rate) {
            return Err(invalid("rotation_rate must be finite and >= 0"));
        }
        if self.outer_attempts == 0 || self.move_attempts == 0 {
            return Err(invalid("outer_attempts and move_attempts must be at least 1"));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction < 1.0) {
            return Err(invalid("target_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A complete configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<const D: usize, S> {
    pub periodic_box: PeriodicBox<D>,
    pub particles: Vec<S>,
    pub volume_fraction: f64,
    /// Outer iterations spent producing this configuration.
    pub iteration_count: u64,
    pub params: SrmParams,
    pub seed: u64,
}

impl<const D: usize, S: Shape<D>> Snapshot<D, S> {
    pub fn new(periodic_box: PeriodicBox<D>, particles: Vec<S>, params: SrmParams, seed: u64) -> Self {
        let volume_fraction = volume_fraction(&particles, &periodic_box);
        Self {
            periodic_box,
            particles,
            volume_fraction,
            iteration_count: 0,
            params,
            seed,
        }
    }

    pub fn refresh_volume_fraction(&mut self) {
        self.volume_fraction = volume_fraction(&self.particles, &self.periodic_box);
    }

    pub fn max_bounding_radius(&self) -> f64 {
        max_bounding_radius(&self.particles)
    }

    /// Same configuration with every length (box, positions, particle sizes)
    /// multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, Error> {
        let bx = self.periodic_box.scaled(factor)?;
        let particles = self
            .particles
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.scale(factor);
                q.set_position(bx.wrap(core::array::from_fn(|k| p.position()[k] * factor)));
                q
            })
            .collect();
        Ok(Self {
            periodic_box: bx,
            particles,
            ..self.clone()
        })
    }
}

pub fn max_bounding_radius<const D: usize, S: Shape<D>>(particles: &[S]) -> f64 {
    particles.iter().map(Shape::bounding_radius).fold(0.0, f64::max)
}

/// Result of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationOutcome {
    /// The swollen configuration was accepted after `rounds` migrate/check rounds.
    Accepted { rounds: u32 },
    /// Every round left an overlap; the previous configuration was shaken.
    Shaken,
    /// A no-swell relaxation sweep after the target was reached.
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub volume_fraction: f64,
    pub swell_factor: f64,
    pub outcome: IterationOutcome,
    /// Particles whose last migration sweep ended in an accepted move.
    pub moved: usize,
}

/// Receives one record per outer iteration.
pub trait Observer {
    fn on_iteration(&mut self, record: &IterationRecord);
}

impl Observer for () {
    fn on_iteration(&mut self, _record: &IterationRecord) {}
}

impl<F: FnMut(&IterationRecord)> Observer for F {
    fn on_iteration(&mut self, record: &IterationRecord) {
        self(record)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub iterations: u64,
    pub accepted: u64,
    pub shaken: u64,
    pub reorders: u64,
}

/// Multiplies every particle size by `1 + c_w`; positions are untouched.
pub fn swell_all<const D: usize, S: Shape<D>>(particles: &mut [S], swelling_rate: f64) {
    scale_all(particles, 1.0 + swelling_rate);
}

fn scale_all<const D: usize, S: Shape<D>>(particles: &mut [S], factor: f64) {
    if factor != 1.0 {
        for p in particles {
            p.scale(factor);
        }
    }
}

/// One migration sweep over all particles in storage order.
///
/// Each particle gets up to `move_attempts` trial moves from its pre-sweep
/// placement; the first overlap-free trial is kept, otherwise the particle is
/// left exactly as it was. Checks see the live state of particles already
/// processed in this sweep. `on_result(i, moved)` is called for every
/// particle. Returns the number of particles that moved.
pub fn migrate_with<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    particles: &mut [S],
    grid: &CellGrid<D>,
    migration_rate: f64,
    rotation_rate: f64,
    move_attempts: u32,
    rng: &mut R,
    mut on_result: impl FnMut(usize, bool),
) -> usize {
    let bx = *grid.periodic_box();
    let mut moved = 0;
    for q in 0..particles.len() {
        let mut accepted = false;
        for _ in 0..move_attempts {
            let trial = particles[q].propose_move(migration_rate, rotation_rate, &bx, rng);
            if !grid.check_candidate(particles, &trial, Some(q)) {
                particles[q] = trial;
                accepted = true;
                break;
            }
        }
        moved += usize::from(accepted);
        on_result(q, accepted);
    }
    moved
}

/// [`migrate_with`] returning per-particle accepted flags.
pub fn migrate<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    particles: &mut [S],
    grid: &CellGrid<D>,
    migration_rate: f64,
    rotation_rate: f64,
    move_attempts: u32,
    rng: &mut R,
) -> Vec<bool> {
    let mut flags = alloc::vec![false; particles.len()];
    migrate_with(
        particles,
        grid,
        migration_rate,
        rotation_rate,
        move_attempts,
        rng,
        |i, ok| flags[i] = ok,
    );
    flags
}

/// Global relaxation: `N_k` migration sweeps at unchanged size, rebuilding
/// the cells before every sweep. Returns the particles moved in the last sweep.
pub fn shake<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    particles: &mut [S],
    grid: &mut CellGrid<D>,
    params: &SrmParams,
    rng: &mut R,
) -> usize {
    let mut moved = 0;
    for _ in 0..params.outer_attempts {
        grid.build(particles);
        moved = migrate_with(
            particles,
            grid,
            params.migration_rate,
            params.rotation_rate,
            params.move_attempts,
            rng,
            |_, _| {},
        );
    }
    moved
}

/// Sorts particles by cell (x fastest, then y, then z) using a grid built
/// over them; order within a cell is kept. Returns `old_index` for every new
/// position. Ids travel with the particles.
pub fn reorder_by_locality<const D: usize, S: Shape<D>>(particles: &mut Vec<S>, grid: &CellGrid<D>) -> Vec<u32> {
    let mut order: Vec<u32> = Vec::with_capacity(particles.len());
    for c in 0..grid.cell_count() {
        order.extend(grid.cell(c).map(|i| i as u32));
    }
    assert_eq!(order.len(), particles.len(), "grid was not built over these particles");
    let mut sorted = Vec::with_capacity(particles.len());
    sorted.extend(order.iter().map(|&i| particles[i as usize].clone()));
    *particles = sorted;
    order
}

// Relative slack on the termination test so that a clamped final swell that
// lands a few ulps short of the target is not followed by a no-op iteration.
const TARGET_SLACK: f64 = 1e-12;

struct GridCache<const D: usize> {
    grid: Option<CellGrid<D>>,
}

impl<const D: usize> GridCache<D> {
    fn get(&mut self, bx: &PeriodicBox<D>, cell_size: f64, range: f64) -> Result<&mut CellGrid<D>, Error> {
        let dims = grid_dims(bx, cell_size);
        let stale = self.grid.as_ref().is_none_or(|g| g.dims() != dims);
        if stale {
            self.grid = Some(CellGrid::new(bx, cell_size)?);
        }
        let grid = self.grid.as_mut().expect("grid just set");
        grid.ensure_covers(range)?;
        Ok(grid)
    }
}

fn check_min_image<const D: usize>(bx: &PeriodicBox<D>, max_r: f64, c_m: f64) -> Result<(), Error> {
    let span = 2.0 * max_r + c_m;
    if span >= 0.5 * bx.min_length() {
        return Err(Error::BoxTooSmall {
            required: 2.0 * span,
            available: bx.min_length(),
        });
    }
    Ok(())
}

/// Grows `snapshot` to `params.target_fraction`.
///
/// The snapshot is updated in place; ids are restored to ascending order at
/// the end. If `f_0 ≥ f_target` only the final relaxation sweeps (if any) run.
/// On [`Error::IterationLimitExceeded`] the snapshot holds the last accepted
/// configuration.
pub fn srm_generate<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    snapshot: &mut Snapshot<D, S>,
    params: &SrmParams,
    rng: &mut R,
    observer: &mut impl Observer,
) -> Result<RunStats, Error> {
    params.validate()?;
    let bx = snapshot.periodic_box;
    let target = params.target_fraction;
    let c_m = params.migration_rate;
    let mut stats = RunStats::default();
    let mut cache = GridCache { grid: None };
    let mut p = core::mem::take(&mut snapshot.particles);
    let mut q: Vec<S> = Vec::with_capacity(p.len());
    let mut stuck: Vec<usize> = Vec::new();
    let mut f = volume_fraction(&p, &bx);
    let mut outcome = Ok(());

    while f < target * (1.0 - TARGET_SLACK) && !p.is_empty() {
        if stats.iterations >= params.max_iterations {
            outcome = Err(Error::IterationLimitExceeded {
                iterations: stats.iterations,
                volume_fraction: f,
            });
            break;
        }
        stats.iterations += 1;
        let mut factor = 1.0 + params.swelling_rate;
        if f * (0..D).fold(1.0, |a, _| a * factor) > target {
            factor = math::powf(target / f, 1.0 / D as f64);
        }
        if factor <= 1.0 && params.swelling_rate > 0.0 {
            // the target is closer than one ulp of the radii
            break;
        }
        let max_r = max_bounding_radius(&p) * factor;
        if let Err(e) = check_min_image(&bx, max_r, c_m) {
            outcome = Err(e);
            break;
        }
        let grid = match cache.get(&bx, generator_cell_size(max_r, c_m), 2.0 * max_r + c_m) {
            Ok(g) => g,
            Err(e) => {
                outcome = Err(e);
                break;
            }
        };

        if params.reorder_period > 0 && stats.iterations % u64::from(params.reorder_period) == 1 % u64::from(params.reorder_period) {
            grid.build(&p);
            reorder_by_locality(&mut p, grid);
            stats.reorders += 1;
        }

        q.clone_from(&p);
        scale_all(&mut q, factor);
        let mut accepted_round = None;
        let mut moved = 0;
        for k in 1..=params.outer_attempts {
            grid.build(&q);
            stuck.clear();
            moved = migrate_with(
                &mut q,
                grid,
                c_m,
                params.rotation_rate,
                params.move_attempts,
                rng,
                |i, ok| {
                    if !ok {
                        stuck.push(i)
                    }
                },
            );
            // A particle that accepted a move was checked against the final
            // placement of everyone else, so any remaining overlap involves
            // two particles that kept their old placement. Checking those
            // is equivalent to the full sweep of `check_any_collision`.
            if !stuck.iter().any(|&i| grid.check_particle_collision(&q, i)) {
                accepted_round = Some(k);
                break;
            }
        }
        let outcome_kind = match accepted_round {
            Some(rounds) => {
                core::mem::swap(&mut p, &mut q);
                f = volume_fraction(&p, &bx);
                stats.accepted += 1;
                IterationOutcome::Accepted { rounds }
            }
            None => {
                moved = shake(&mut p, grid, params, rng);
                stats.shaken += 1;
                IterationOutcome::Shaken
            }
        };
        observer.on_iteration(&IterationRecord {
            iteration: stats.iterations,
            volume_fraction: f,
            swell_factor: factor,
            outcome: outcome_kind,
            moved,
        });
    }

    if outcome.is_ok() && params.final_relaxation_sweeps > 0 && !p.is_empty() {
        let max_r = max_bounding_radius(&p);
        outcome = check_min_image(&bx, max_r, c_m).and_then(|_| {
            let grid = cache.get(&bx, generator_cell_size(max_r, c_m), 2.0 * max_r + c_m)?;
            for sweep in 0..params.final_relaxation_sweeps {
                grid.build(&p);
                let moved = migrate_with(
                    &mut p,
                    grid,
                    c_m,
                    params.rotation_rate,
                    params.move_attempts,
                    rng,
                    |_, _| {},
                );
                observer.on_iteration(&IterationRecord {
                    iteration: stats.iterations + u64::from(sweep) + 1,
                    volume_fraction: f,
                    swell_factor: 1.0,
                    outcome: IterationOutcome::Relaxed,
                    moved,
                });
            }
            Ok(())
        });
    }

    p.sort_unstable_by_key(|s| s.id());
    snapshot.particles = p;
    snapshot.volume_fraction = f;
    snapshot.iteration_count += stats.iterations;
    snapshot.params = *params;
    outcome.map(|_| stats)
}

/// Migration sweeps at fixed size, rebuilding the cells before each sweep.
/// `keep_going` is called after every sweep with the sweep number, the
/// number of particles moved and the current particles; relaxation stops when it returns `false` or after
/// `max_sweeps`. Returns the number of sweeps run.
pub fn relax<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    snapshot: &mut Snapshot<D, S>,
    migration_rate: f64,
    rotation_rate: f64,
    move_attempts: u32,
    max_sweeps: u64,
    rng: &mut R,
    mut keep_going: impl FnMut(u64, usize, &[S]) -> bool,
) -> Result<u64, Error> {
    if move_attempts == 0 {
        return Err(invalid("move_attempts must be at least 1"));
    }
    let bx = snapshot.periodic_box;
    let max_r = snapshot.max_bounding_radius();
    check_min_image(&bx, max_r, migration_rate)?;
    let mut grid = CellGrid::for_interaction(&bx, max_r, migration_rate)?;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        grid.build(&snapshot.particles);
        let moved = migrate_with(
            &mut snapshot.particles,
            &grid,
            migration_rate,
            rotation_rate,
            move_attempts,
            rng,
            |_, _| {},
        );
        sweeps += 1;
        if !keep_going(sweeps, moved, &snapshot.particles) {
            break;
        }
    }
    Ok(sweeps)
}
