//! Hard-core/soft-shell connectivity: two particles are connected at
//! tunneling distance `delta` when their surface gap is at most `delta`.
//! A configuration percolates when a connected cluster wraps the periodic
//! box; the critical distance is the smallest `delta` at which that happens.

use alloc::vec::Vec;

use crate::cell_grid::CellGrid;
use crate::engine::max_bounding_radius;
use crate::error::{invalid, Error};
use crate::geometry::{self, PeriodicBox, Vector};
use crate::math;
use crate::shape::Shape;

/// `N·D³/L³` for a cubic box (`N·D²/L²` in 2D).
pub fn number_density<const D: usize>(n: usize, diameter: f64, bx: &PeriodicBox<D>) -> Result<f64, Error> {
    if !bx.is_cubic() {
        return Err(Error::NonCubicBox);
    }
    let ratio = diameter / bx.lengths()[0];
    Ok(n as f64 * (0..D).fold(1.0, |a, _| a * ratio))
}

/// Edge length of the cubic box holding `n` particles of diameter `diameter` at density `rho`.
pub fn box_length_for_density<const D: usize>(n: usize, diameter: f64, rho: f64) -> f64 {
    diameter * math::powf(n as f64 / rho, 1.0 / D as f64)
}

/// A pair within tunneling range. The image of `j` shifted by
/// `image_shift` box lengths sits at gap `gap` from `i`. `i == j` marks a
/// particle close to its own periodic image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEdge<const D: usize> {
    pub i: u32,
    pub j: u32,
    pub gap: f64,
    pub image_shift: [i32; D],
}

/// Displacement from `b` to the image of `a` shifted by `shift` box lengths.
#[inline]
pub fn image_delta<const D: usize>(bx: &PeriodicBox<D>, a: &Vector<D>, b: &Vector<D>, shift: &[i32; D]) -> Vector<D> {
    let l = bx.lengths();
    core::array::from_fn(|k| (a[k] - b[k]) + f64::from(shift[k]) * l[k])
}

fn validate_delta(delta: f64) -> Result<(), Error> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(invalid("tunneling distance must be finite and non-negative"))
    }
}

/// All pairs (and self-images) with surface gap `≤ delta_max`, sorted by
/// gap, then `i`, `j` and shift.
///
/// When `2·R_max + delta_max` is below half the shortest box length each
/// pair has at most one image in range, and a cell search finds it.
/// Otherwise every pair is tested against all `3^D` neighboring images,
/// which is complete as long as `2·R_max + delta_max ≤ L_min`; beyond that
/// the call fails with [`Error::DeltaMaxTooLarge`].
pub fn gap_edges<const D: usize, S: Shape<D>>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    delta_max: f64,
) -> Result<Vec<GapEdge<D>>, Error> {
    validate_delta(delta_max)?;
    let core = 2.0 * max_bounding_radius(particles);
    let range = core + delta_max;
    let l_min = bx.min_length();
    let mut edges = if range < 0.5 * l_min {
        let grid = CellGrid::new(bx, range)?;
        if grid.ensure_covers(range).is_ok() && grid.dims().iter().all(|&n| n >= 3) {
            edges_by_cells(particles, bx, delta_max, grid)
        } else {
            edges_by_images(particles, bx, delta_max)
        }
    } else if range <= l_min {
        edges_by_images(particles, bx, delta_max)
    } else {
        return Err(Error::DeltaMaxTooLarge {
            delta_max,
            limit: l_min - core,
        });
    };
    edges.sort_unstable_by(|a, b| {
        a.gap
            .total_cmp(&b.gap)
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
            .then(a.image_shift.cmp(&b.image_shift))
    });
    Ok(edges)
}

// Pushes the edge for `i` and the image of `j` at `shift` if in range.
#[inline]
fn try_edge<const D: usize, S: Shape<D>>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    delta_max: f64,
    i: usize,
    j: usize,
    shift: [i32; D],
    out: &mut Vec<GapEdge<D>>,
) {
    let (a, b) = (&particles[i], &particles[j]);
    let d = image_delta(bx, b.position(), a.position(), &shift);
    let reach = a.bounding_radius() + b.bounding_radius() + delta_max;
    if geometry::norm2(&d) > reach * reach {
        return;
    }
    let gap = a.surface_gap(b, &d);
    if gap <= delta_max {
        out.push(GapEdge {
            i: i as u32,
            j: j as u32,
            gap,
            image_shift: shift,
        });
    }
}

fn edges_by_cells<const D: usize, S: Shape<D>>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    delta_max: f64,
    mut grid: CellGrid<D>,
) -> Vec<GapEdge<D>> {
    grid.build(particles);
    let l = *bx.lengths();
    let mut out = Vec::new();
    for i in 0..particles.len() {
        let pi = *particles[i].position();
        for ring in 0..=1 {
            grid.for_each_in_ring(&pi, ring, |j| {
                if j <= i {
                    return;
                }
                let pj = particles[j].position();
                let m = bx.min_image_delta(pj, &pi);
                let shift: [i32; D] =
                    core::array::from_fn(|k| math::round((m[k] - (pj[k] - pi[k])) / l[k]) as i32);
                try_edge(particles, bx, delta_max, i, j, shift, &mut out);
            });
        }
    }
    out
}

fn edges_by_images<const D: usize, S: Shape<D>>(particles: &[S], bx: &PeriodicBox<D>, delta_max: f64) -> Vec<GapEdge<D>> {
    let mut out = Vec::new();
    let images = 3usize.pow(D as u32);
    for i in 0..particles.len() {
        for j in i..particles.len() {
            for m in 0..images {
                let mut c = m;
                let shift: [i32; D] = core::array::from_fn(|_| {
                    let s = (c % 3) as i32 - 1;
                    c /= 3;
                    s
                });
                if i == j {
                    // each self-image pair once: the lexicographically positive shift
                    if shift.iter().find(|&&s| s != 0).is_none_or(|&s| s < 0) {
                        continue;
                    }
                }
                try_edge(particles, bx, delta_max, i, j, shift, &mut out);
            }
        }
    }
    out
}

/// Union-find whose nodes carry their lattice offset relative to the root,
/// so that closing a loop with a net shift reveals a wrapping cluster.
#[derive(Debug, Clone)]
pub struct WrappingUnionFind<const D: usize> {
    parent: Vec<u32>,
    size: Vec<u32>,
    offset: Vec<[i32; D]>,
}

impl<const D: usize> WrappingUnionFind<D> {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: alloc::vec![1; n],
            offset: alloc::vec![[0; D]; n],
        }
    }

    /// Root of `x` and the offset of `x` relative to it.
    pub fn find(&mut self, x: usize) -> (usize, [i32; D]) {
        let mut root = x;
        let mut acc = [0i32; D];
        while self.parent[root] as usize != root {
            for k in 0..D {
                acc[k] += self.offset[root][k];
            }
            root = self.parent[root] as usize;
        }
        // compress: every node on the path now points at the root
        let mut cur = x;
        let mut rem = acc;
        while self.parent[cur] as usize != root && cur != root {
            let next = self.parent[cur] as usize;
            let own = self.offset[cur];
            self.parent[cur] = root as u32;
            self.offset[cur] = rem;
            for k in 0..D {
                rem[k] -= own[k];
            }
            cur = next;
        }
        (root, acc)
    }

    /// Records that the image of `j` shifted by `shift` touches `i`. Returns
    /// the net winding vector if this closes a loop that wraps the box.
    pub fn union(&mut self, i: usize, j: usize, shift: &[i32; D]) -> Option<[i32; D]> {
        let (ri, oi) = self.find(i);
        let (rj, oj) = self.find(j);
        // offset of j's root relative to i's root implied by this contact
        let rel: [i32; D] = core::array::from_fn(|k| oi[k] + shift[k] - oj[k]);
        if ri == rj {
            return rel.iter().any(|&w| w != 0).then_some(rel);
        }
        if self.size[ri] >= self.size[rj] {
            self.parent[rj] = ri as u32;
            self.offset[rj] = rel;
            self.size[ri] += self.size[rj];
        } else {
            self.parent[ri] = rj as u32;
            self.offset[ri] = core::array::from_fn(|k| -rel[k]);
            self.size[rj] += self.size[ri];
        }
        None
    }
}

/// Bit `k` set for every axis along which `winding` is nonzero.
pub fn axis_mask<const D: usize>(winding: &[i32; D]) -> u8 {
    winding
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0)
        .fold(0, |m, (k, _)| m | (1 << k))
}

/// Outcome of the critical-distance search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percolation {
    /// Gap of the edge whose insertion first produced a wrapping cluster.
    pub delta_c: f64,
    /// Axes wrapped by that first cluster (bit `k` for axis `k`).
    pub axis_mask: u8,
}

/// Inserts `edges` in order and reports the first one that makes a cluster wrap.
pub fn first_wrapping_edge<const D: usize>(n: usize, edges: &[GapEdge<D>]) -> Option<Percolation> {
    let mut uf = WrappingUnionFind::<D>::new(n);
    edges.iter().find_map(|e| {
        uf.union(e.i as usize, e.j as usize, &e.image_shift)
            .map(|w| Percolation {
                delta_c: e.gap,
                axis_mask: axis_mask(&w),
            })
    })
}

/// Does the contact graph at tunneling distance `delta` contain a wrapping cluster?
pub fn spans<const D: usize, S: Shape<D>>(particles: &[S], bx: &PeriodicBox<D>, delta: f64) -> Result<bool, Error> {
    let edges = gap_edges(particles, bx, delta)?;
    Ok(first_wrapping_edge(particles.len(), &edges).is_some())
}

/// Smallest tunneling distance at which a cluster wraps the box, searched up
/// to `delta_max`. It is always the gap of one particular pair.
pub fn critical_percolation_distance<const D: usize, S: Shape<D>>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    delta_max: f64,
) -> Result<Percolation, Error> {
    let edges = gap_edges(particles, bx, delta_max)?;
    first_wrapping_edge(particles.len(), &edges).ok_or(Error::NotPercolating { delta_max })
}
