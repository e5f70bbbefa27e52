//! Linked-cell neighbor structure.
//!
//! The box is tiled by `dims[k]` cells per axis (at least three), each of edge
//! `L_k / dims[k]`. Every particle index sits in the list of the cell holding
//! its center. An overlap query for a particle scans the 3×3 (3×3×3) block of
//! cells around its current position.
//!
//! The grid stores indices, not positions, so queries read the live particle
//! array. A query stays exact while every particle is within `c_m` of the
//! position it was indexed at, provided the cell edge is at least
//! `2·max_bounding_radius + c_m` (or the axis has only three cells, in which
//! case the block covers the whole axis).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::geometry::{PeriodicBox, Vector};
use crate::math;
use crate::shape::Shape;

const NONE: u32 = u32::MAX;

/// Cell edge used by the generator: `2.5·max_radius + c_m`.
pub fn generator_cell_size(max_bounding_radius: f64, c_m: f64) -> f64 {
    2.5 * max_bounding_radius + c_m
}

/// Cells per axis: `max(3, floor(L / cell_size))`.
pub fn grid_dims<const D: usize>(bx: &PeriodicBox<D>, cell_size: f64) -> [usize; D] {
    core::array::from_fn(|k| {
        let n = math::floor(bx.lengths()[k] / cell_size);
        // cap keeps absurdly small cell sizes from exhausting memory
        let n = if n.is_finite() { n.min(1.0e7) } else { 1.0e7 };
        (n as usize).max(3)
    })
}

#[derive(Debug, Clone)]
pub struct CellGrid<const D: usize> {
    bx: PeriodicBox<D>,
    dims: [usize; D],
    edge: Vector<D>,
    inv_edge: Vector<D>,
    strides: [usize; D],
    head: Vec<u32>,
    next: Vec<u32>,
}

impl<const D: usize> CellGrid<D> {
    /// Empty grid with cells no smaller than `cell_size`.
    pub fn new(bx: &PeriodicBox<D>, cell_size: f64) -> Result<Self, Error> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(invalid("cell size must be finite and positive"));
        }
        let dims = grid_dims(bx, cell_size);
        let total: usize = dims.iter().product();
        if total > u32::MAX as usize {
            return Err(invalid("cell grid too large"));
        }
        let mut strides = [1usize; D];
        for k in 1..D {
            strides[k] = strides[k - 1] * dims[k - 1];
        }
        let edge: Vector<D> = core::array::from_fn(|k| bx.lengths()[k] / dims[k] as f64);
        Ok(Self {
            bx: *bx,
            dims,
            edge,
            inv_edge: core::array::from_fn(|k| dims[k] as f64 / bx.lengths()[k]),
            strides,
            head: vec![NONE; total],
            next: Vec::new(),
        })
    }

    /// Grid sized for overlap queries with the given largest bounding radius
    /// and migration step, using the generator's cell-size rule.
    ///
    /// Fails if an axis with more than three cells would end up with an edge
    /// below `2·max_bounding_radius + c_m`.
    pub fn for_interaction(bx: &PeriodicBox<D>, max_bounding_radius: f64, c_m: f64) -> Result<Self, Error> {
        let grid = Self::new(bx, generator_cell_size(max_bounding_radius, c_m))?;
        grid.ensure_covers(2.0 * max_bounding_radius + c_m)?;
        Ok(grid)
    }

    /// Checks that a 3-cell block along every axis reaches `range`.
    pub fn ensure_covers(&self, range: f64) -> Result<(), Error> {
        for k in 0..D {
            if self.dims[k] > 3 && self.edge[k] < range {
                return Err(Error::BoxTooSmall {
                    required: range,
                    available: self.edge[k],
                });
            }
        }
        Ok(())
    }

    pub fn periodic_box(&self) -> &PeriodicBox<D> {
        &self.bx
    }

    pub fn dims(&self) -> [usize; D] {
        self.dims
    }

    /// Effective per-axis cell edge `L_k / dims[k]`.
    pub fn edge(&self) -> Vector<D> {
        self.edge
    }

    pub fn cell_count(&self) -> usize {
        self.head.len()
    }

    /// Integer cell coordinates of a position, wrapped into `[0, dims)`.
    #[inline(always)]
    pub fn cell_index(&self, p: &Vector<D>) -> [usize; D] {
        let mut c = [0usize; D];
        for k in 0..D {
            c[k] = axis_cell(p[k] * self.inv_edge[k], self.dims[k]);
        }
        c
    }

    /// Row-major linear index (x fastest).
    #[inline(always)]
    pub fn linear_index(&self, c: &[usize; D]) -> usize {
        let mut lin = 0;
        for k in 0..D {
            lin += c[k] * self.strides[k];
        }
        lin
    }

    #[inline(always)]
    pub fn cell_of(&self, p: &Vector<D>) -> usize {
        self.linear_index(&self.cell_index(p))
    }

    /// Empties every cell and resizes the per-particle link table.
    pub fn clear(&mut self, particle_count: usize) {
        self.head.fill(NONE);
        self.next.clear();
        self.next.resize(particle_count, NONE);
    }

    /// Rebuilds the lists from scratch. Within a cell, indices appear in
    /// ascending order.
    pub fn build<S: Shape<D>>(&mut self, particles: &[S]) {
        assert!(particles.len() < NONE as usize, "too many particles for the cell grid");
        self.clear(particles.len());
        for i in (0..particles.len()).rev() {
            let c = self.cell_of(particles[i].position());
            self.next[i] = self.head[c];
            self.head[c] = i as u32;
        }
    }

    /// Adds particle `index` at `p` to the front of its cell list.
    pub fn insert(&mut self, index: usize, p: &Vector<D>) {
        if index >= self.next.len() {
            self.next.resize(index + 1, NONE);
        }
        let c = self.cell_of(p);
        self.next[index] = self.head[c];
        self.head[c] = index as u32;
    }

    /// Indices stored in cell `linear`, in list order.
    pub fn cell(&self, linear: usize) -> CellIter<'_> {
        CellIter {
            next: &self.next,
            cur: self.head[linear],
        }
    }

    /// Number of indices currently stored.
    pub fn len(&self) -> usize {
        (0..self.head.len()).map(|c| self.cell(c).count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.head.iter().all(|h| *h == NONE)
    }

    /// Calls `f` on every index in the 3^D block around `p` until it returns
    /// `true`. Returns whether it stopped early.
    #[inline(always)]
    pub fn any_near(&self, p: &Vector<D>, mut f: impl FnMut(usize) -> bool) -> bool {
        let c = self.cell_index(p);
        let mut axis = [[0usize; 3]; D];
        for k in 0..D {
            let n = self.dims[k];
            let ck = c[k];
            let lo = if ck == 0 { n - 1 } else { ck - 1 };
            let hi = if ck + 1 == n { 0 } else { ck + 1 };
            let s = self.strides[k];
            axis[k] = [lo * s, ck * s, hi * s];
        }
        let zs: &[usize] = match axis.get(2) {
            Some(z) => &z[..],
            None => &[0],
        };
        for &z in zs {
            for &y in &axis[1] {
                let base = y + z;
                for &x in &axis[0] {
                    let mut t = self.head[base + x];
                    while t != NONE {
                        if f(t as usize) {
                            return true;
                        }
                        t = self.next[t as usize];
                    }
                }
            }
        }
        false
    }

    /// Visits every index in the cells at Chebyshev index distance exactly
    /// `ring` from the cell holding `p`. Each cell is visited once, even when
    /// the ring wraps around a small grid.
    pub fn for_each_in_ring(&self, p: &Vector<D>, ring: usize, mut f: impl FnMut(usize)) {
        let c = self.cell_index(p);
        let r = ring as i64;
        let span = 2 * r + 1;
        let mut offsets = [0i64; D];
        let total = (span as usize).pow(D as u32);
        let mut seen: Vec<usize> = Vec::new();
        let wraps = (0..D).any(|k| span as usize > self.dims[k]);
        for combo in 0..total {
            let mut m = combo;
            for o in offsets.iter_mut() {
                *o = (m % span as usize) as i64 - r;
                m /= span as usize;
            }
            if offsets.iter().map(|o| o.abs()).max() != Some(r) {
                continue;
            }
            let mut lin = 0;
            for k in 0..D {
                let n = self.dims[k] as i64;
                let ck = ((c[k] as i64 + offsets[k]) % n + n) % n;
                lin += ck as usize * self.strides[k];
            }
            if wraps {
                if seen.contains(&lin) {
                    continue;
                }
                seen.push(lin);
            }
            for t in self.cell(lin) {
                f(t);
            }
        }
    }

    /// Alg. "collision check for one particle": does particle `q` (at its
    /// current position) overlap any other indexed particle?
    #[inline]
    pub fn check_particle_collision<S: Shape<D>>(&self, particles: &[S], q: usize) -> bool {
        self.check_candidate(particles, &particles[q], Some(q))
    }

    /// Overlap test of a free-standing candidate against the indexed
    /// particles, optionally ignoring index `skip`.
    #[inline]
    pub fn check_candidate<S: Shape<D>>(&self, particles: &[S], candidate: &S, skip: Option<usize>) -> bool {
        let skip = skip.unwrap_or(usize::MAX);
        let p = candidate.position();
        let bx = &self.bx;
        self.any_near(p, |t| {
            if t == skip {
                return false;
            }
            let other = &particles[t];
            let d = bx.min_image_delta(other.position(), p);
            candidate.overlaps_at(other, &d)
        })
    }

    /// True if any indexed particle overlaps another; stops at the first hit.
    pub fn check_any_collision<S: Shape<D>>(&self, particles: &[S]) -> bool {
        (0..particles.len()).any(|q| self.check_particle_collision(particles, q))
    }
}

// `floor(x) mod n` with a fast path for wrapped coordinates, where `x` lies
// in `[0, n]` (it can round up to exactly `n`).
#[inline(always)]
fn axis_cell(x: f64, n: usize) -> usize {
    if x >= 0.0 && x < n as f64 + 1.0 {
        let c = x as usize;
        return if c >= n { c - n } else { c };
    }
    let n = n as i64;
    let c = math::floor(x) as i64;
    (((c % n) + n) % n) as usize
}

pub struct CellIter<'a> {
    next: &'a [u32],
    cur: u32,
}

impl Iterator for CellIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.cur == NONE {
            return None;
        }
        let t = self.cur as usize;
        self.cur = self.next[t];
        Some(t)
    }
}

impl core::fmt::Debug for CellIter<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CellIter").field("cur", &self.cur).finish()
    }
}

/// O(N²) minimum-image overlap search. Reference for tests and audits.
pub fn brute_force_any_collision<const D: usize, S: Shape<D>>(particles: &[S], bx: &PeriodicBox<D>) -> bool {
    (0..particles.len()).any(|i| brute_force_particle_collision(particles, bx, i))
}

/// O(N) check of particle `q` against every other particle.
pub fn brute_force_particle_collision<const D: usize, S: Shape<D>>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    q: usize,
) -> bool {
    (0..particles.len()).any(|t| t != q && particles[q].overlaps(&particles[t], bx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::shape::{random_point, Sphere};
    use rand::Rng;

    fn disks(pts: &[([f64; 2], f64)]) -> Vec<Sphere<2>> {
        pts.iter()
            .enumerate()
            .map(|(i, (p, r))| Sphere::new(i as u32, *p, *r))
            .collect()
    }

    #[test]
    fn dims_examples() {
        let unit = PeriodicBox::<2>::unit();
        let cs = generator_cell_size(0.01, 0.005);
        assert!((cs - 0.03).abs() < 1e-15);
        assert_eq!(grid_dims(&unit, cs), [33, 33]);
        assert_eq!(grid_dims(&unit, 0.5), [3, 3]);
        let rect = PeriodicBox::new([2.0, 1.0]).unwrap();
        assert_eq!(grid_dims(&rect, 0.1), [20, 10]);
        let g = CellGrid::new(&rect, 0.1).unwrap();
        assert_eq!(g.edge(), [0.1, 0.1]);
    }

    #[test]
    fn cell_index_examples() {
        let g = CellGrid::new(&PeriodicBox::<2>::unit(), 0.1).unwrap();
        assert_eq!(g.dims(), [10, 10]);
        assert_eq!(g.cell_index(&[0.0, 0.0]), [0, 0]);
        assert_eq!(g.cell_index(&[-1e-9, 0.0])[0], 9);
        assert_eq!(g.cell_index(&[0.999, 0.0])[0], 9);
        assert_eq!(g.cell_index(&[1.0, 0.0])[0], 0);
    }

    #[test]
    fn build_examples() {
        let bx = PeriodicBox::<2>::unit();
        let mut g = CellGrid::new(&bx, 0.1).unwrap();
        let one = disks(&[([0.05, 0.05], 0.01)]);
        g.build(&one);
        assert_eq!(g.cell(0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(g.len(), 1);
        let two = disks(&[([0.05, 0.05], 0.01), ([0.06, 0.07], 0.01)]);
        g.build(&two);
        assert_eq!(g.cell(0).collect::<Vec<_>>(), vec![0, 1]);
        let mut rng = rng_from_seed(3);
        let many: Vec<Sphere<2>> = (0..1000)
            .map(|i| Sphere::new(i, random_point(&bx, &mut rng), 0.001))
            .collect();
        g.build(&many);
        assert_eq!(g.len(), 1000);
        let mut seen = vec![0u8; 1000];
        for c in 0..g.cell_count() {
            for i in g.cell(c) {
                seen[i] += 1;
                assert_eq!(g.cell_of(&many[i].position), c);
            }
        }
        assert!(seen.iter().all(|s| *s == 1));
        // deterministic rebuild
        let snapshot: Vec<Vec<usize>> = (0..g.cell_count()).map(|c| g.cell(c).collect()).collect();
        g.build(&many);
        let again: Vec<Vec<usize>> = (0..g.cell_count()).map(|c| g.cell(c).collect()).collect();
        assert_eq!(snapshot, again);
    }

    #[test]
    fn collision_examples() {
        let bx = PeriodicBox::<2>::unit();
        let mut g = CellGrid::for_interaction(&bx, 0.1, 0.0).unwrap();
        let close = disks(&[([0.3, 0.5], 0.1), ([0.45, 0.5], 0.1)]);
        g.build(&close);
        assert!(g.check_particle_collision(&close, 0));
        let far = disks(&[([0.3, 0.5], 0.1), ([0.55, 0.5], 0.1)]);
        g.build(&far);
        assert!(!g.check_particle_collision(&far, 0));
        assert!(!g.check_any_collision(&far));
        let across = disks(&[([0.05, 0.5], 0.1), ([0.95, 0.5], 0.1)]);
        g.build(&across);
        assert!(g.check_particle_collision(&across, 0));
        // a lone particle never collides with itself
        let lone = disks(&[([0.5, 0.5], 0.1)]);
        g.build(&lone);
        assert!(!g.check_any_collision(&lone));
        // exact contact is a collision
        let touch = disks(&[([0.25, 0.5], 0.125), ([0.5, 0.5], 0.125)]);
        g.build(&touch);
        assert!(g.check_particle_collision(&touch, 1));
        let coincident = disks(&[([0.2, 0.2], 0.01), ([0.7, 0.7], 0.01), ([0.2, 0.2], 0.01)]);
        g.build(&coincident);
        assert!(g.check_any_collision(&coincident));
    }

    #[test]
    fn matches_all_pairs_on_random_configs() {
        let mut rng = rng_from_seed(11);
        for trial in 0..40 {
            let bx = PeriodicBox::<2>::new([1.0, 0.5 + rng.random::<f64>()]).unwrap();
            let n = 200;
            let r = 0.01 + 0.02 * rng.random::<f64>();
            let ps: Vec<Sphere<2>> = (0..n)
                .map(|i| Sphere::new(i, random_point(&bx, &mut rng), r * (0.5 + rng.random::<f64>())))
                .collect();
            let maxr = ps.iter().map(|p| p.radius).fold(0.0, f64::max);
            let mut g = CellGrid::for_interaction(&bx, maxr, 0.0).unwrap();
            g.build(&ps);
            for q in 0..ps.len() {
                assert_eq!(
                    g.check_particle_collision(&ps, q),
                    brute_force_particle_collision(&ps, &bx, q),
                    "trial {trial} particle {q}"
                );
            }
            assert_eq!(g.check_any_collision(&ps), brute_force_any_collision(&ps, &bx));
        }
    }

    #[test]
    fn matches_all_pairs_in_3d() {
        let mut rng = rng_from_seed(12);
        for _ in 0..10 {
            let bx = PeriodicBox::<3>::new([1.0, 1.3, 0.9]).unwrap();
            let ps: Vec<Sphere<3>> = (0..300)
                .map(|i| Sphere::new(i, random_point(&bx, &mut rng), 0.03 + 0.02 * rng.random::<f64>()))
                .collect();
            let mut g = CellGrid::for_interaction(&bx, 0.05, 0.0).unwrap();
            g.build(&ps);
            for q in 0..ps.len() {
                assert_eq!(
                    g.check_particle_collision(&ps, q),
                    brute_force_particle_collision(&ps, &bx, q)
                );
            }
        }
    }

    // Particles indexed at one place, then each moved by exactly c_m, must
    // still be found by the neighborhood scan.
    #[test]
    fn stale_cells_within_migration_step_are_safe() {
        let bx = PeriodicBox::<2>::unit();
        let r = 0.02;
        let c_m = 0.015;
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let mut ps: Vec<Sphere<2>> = (0..120)
                .map(|i| Sphere::new(i, random_point(&bx, &mut rng), r))
                .collect();
            let mut g = CellGrid::for_interaction(&bx, r, c_m).unwrap();
            // snap some centers right next to cell boundaries so the move
            // crosses them
            let e = g.edge()[0];
            for p in ps.iter_mut().step_by(3) {
                let k = (p.position[0] / e).round();
                p.position[0] = bx.wrap([k * e - 1e-9, 0.0])[0];
            }
            g.build(&ps);
            for p in ps.iter_mut() {
                let u = crate::shape::random_unit_vector::<2, _>(&mut rng);
                p.position = bx.wrap([p.position[0] + c_m * u[0], p.position[1] + c_m * u[1]]);
            }
            for q in 0..ps.len() {
                assert_eq!(
                    g.check_particle_collision(&ps, q),
                    brute_force_particle_collision(&ps, &bx, q)
                );
            }
        }
    }

    #[test]
    fn ring_visits_each_cell_once() {
        let bx = PeriodicBox::<2>::unit();
        let mut g = CellGrid::new(&bx, 0.2).unwrap();
        let ps: Vec<Sphere<2>> = (0..25)
            .map(|i| Sphere::new(i, [0.1 + 0.2 * (i % 5) as f64, 0.1 + 0.2 * (i / 5) as f64], 0.01))
            .collect();
        g.build(&ps);
        let mut all = Vec::new();
        for ring in 0..4 {
            g.for_each_in_ring(&[0.1, 0.1], ring, |t| all.push(t));
        }
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 25);
        let mut ring1 = Vec::new();
        g.for_each_in_ring(&[0.1, 0.1], 1, |t| ring1.push(t));
        assert_eq!(ring1.len(), 8);
    }
}
