//! Random sequential adsorption: particles are dropped one at a time at
//! uniformly random positions (and orientations), rejecting any that overlap
//! an already placed particle.

use alloc::vec::Vec;

use rand::Rng;

use crate::cell_grid::CellGrid;
use crate::error::{invalid, Error};
use crate::geometry::PeriodicBox;
use crate::shape::{random_point, Shape, Sphere};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 10_000;

/// Places every template in order. Ids are reassigned to the placement index.
pub fn rsa_place<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    templates: Vec<S>,
    bx: &PeriodicBox<D>,
    max_attempts_per_particle: u32,
    rng: &mut R,
) -> Result<Vec<S>, Error> {
    if templates.is_empty() {
        return Err(invalid("RSA needs at least one particle"));
    }
    if max_attempts_per_particle == 0 {
        return Err(invalid("max_attempts_per_particle must be at least 1"));
    }
    let max_r = templates.iter().map(Shape::bounding_radius).fold(0.0, f64::max);
    if !(max_r > 0.0) || max_r >= bx.min_length() / 4.0 {
        return Err(invalid("RSA radius must be positive and below a quarter of the shortest box side"));
    }
    let mut grid = CellGrid::for_interaction(bx, max_r, 0.0)?;
    grid.clear(templates.len());
    let mut placed: Vec<S> = Vec::with_capacity(templates.len());
    for (index, mut candidate) in templates.into_iter().enumerate() {
        candidate.set_id(index as u32);
        let mut ok = false;
        for _ in 0..max_attempts_per_particle {
            candidate.set_position(random_point(bx, rng));
            candidate.randomize_orientation(rng);
            if !grid.check_candidate(&placed, &candidate, None) {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::PlacementFailure {
                index,
                attempts: max_attempts_per_particle,
            });
        }
        grid.insert(index, candidate.position());
        placed.push(candidate);
    }
    Ok(placed)
}

/// Monodisperse disks or spheres.
pub fn rsa_spheres<const D: usize, R: Rng + ?Sized>(
    count: usize,
    radius: f64,
    bx: &PeriodicBox<D>,
    max_attempts_per_particle: u32,
    rng: &mut R,
) -> Result<Vec<Sphere<D>>, Error> {
    let templates = (0..count).map(|i| Sphere::new(i as u32, [0.0; D], radius)).collect();
    rsa_place(templates, bx, max_attempts_per_particle, rng)
}

/// One particle per entry of `radii`, placed in the given order.
pub fn rsa_spheres_polydisperse<const D: usize, R: Rng + ?Sized>(
    radii: &[f64],
    bx: &PeriodicBox<D>,
    max_attempts_per_particle: u32,
    rng: &mut R,
) -> Result<Vec<Sphere<D>>, Error> {
    let templates = radii
        .iter()
        .enumerate()
        .map(|(i, r)| Sphere::new(i as u32, [0.0; D], *r))
        .collect();
    rsa_place(templates, bx, max_attempts_per_particle, rng)
}

/// Radius giving volume fraction `f` for `count` equal disks or spheres.
pub fn radius_for_fraction<const D: usize>(count: usize, f: f64, bx: &PeriodicBox<D>) -> f64 {
    let per = f * bx.measure() / count as f64;
    if D == 2 {
        crate::math::sqrt(per / core::f64::consts::PI)
    } else {
        crate::math::cbrt(per * 3.0 / (4.0 * core::f64::consts::PI))
    }
}
