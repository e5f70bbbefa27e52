//! Statistical descriptors of a configuration: nearest-neighbor distances,
//! local volume fractions from Monte Carlo Voronoi cells, local platelet
//! alignment, and histograms.

use alloc::vec::Vec;

use rand::Rng;

use crate::cell_grid::CellGrid;
use crate::error::{invalid, Error};
use crate::geometry::{dot, PeriodicBox, Vector};
use crate::math;
use crate::platelet::Spherodisk;
use crate::shape::{random_point, Shape};

/// Fewest Monte Carlo hits a Voronoi cell needs for its estimate to count as reliable.
pub const MIN_RELIABLE_HITS: u64 = 100;

/// Nearest-center queries over a fixed set of particles, by cell search with
/// outward ring expansion.
#[derive(Debug)]
pub struct NearestCenter<'a, const D: usize, S> {
    particles: &'a [S],
    grid: CellGrid<D>,
    rings: usize,
}

impl<'a, const D: usize, S: Shape<D>> NearestCenter<'a, D, S> {
    pub fn new(particles: &'a [S], bx: &PeriodicBox<D>) -> Result<Self, Error> {
        if particles.is_empty() {
            return Err(invalid("nearest-center search needs at least one particle"));
        }
        // about one particle per cell
        let spacing = math::powf(bx.measure() / particles.len() as f64, 1.0 / D as f64);
        let mut grid = CellGrid::new(bx, spacing)?;
        grid.build(particles);
        let rings = grid.dims().iter().map(|&n| n / 2).max().unwrap_or(0);
        Ok(Self {
            particles,
            grid,
            rings,
        })
    }

    /// Index and squared minimum-image distance of the particle center
    /// nearest to `p`, skipping index `exclude`. Equal distances resolve to
    /// the lower particle id.
    pub fn nearest(&self, p: &Vector<D>, exclude: Option<usize>) -> Option<(usize, f64)> {
        let bx = self.grid.periodic_box();
        let edge = self.grid.edge().iter().copied().fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=self.rings {
            self.grid.for_each_in_ring(p, ring, |t| {
                if Some(t) == exclude {
                    return;
                }
                let d2 = bx.min_image_distance2(p, self.particles[t].position());
                let better = match best {
                    None => true,
                    Some((b, bd2)) => d2 < bd2 || (d2 == bd2 && self.particles[t].id() < self.particles[b].id()),
                };
                if better {
                    best = Some((t, d2));
                }
            });
            // everything outside the scanned block is at least `ring` whole cells away
            if let Some((_, bd2)) = best {
                let reach = ring as f64 * edge;
                if bd2 < reach * reach {
                    break;
                }
            }
        }
        best
    }
}

/// Per-particle distance from each center to the nearest other center.
pub fn nearest_neighbor_distances<const D: usize, S: Shape<D>>(
    particles: &[S],
    bx: &PeriodicBox<D>,
) -> Result<Vec<f64>, Error> {
    if particles.len() < 2 {
        return Err(invalid("nearest-neighbor distances need at least two particles"));
    }
    let search = NearestCenter::new(particles, bx)?;
    Ok((0..particles.len())
        .map(|i| {
            let (_, d2) = search
                .nearest(particles[i].position(), Some(i))
                .expect("at least one other particle");
            math::sqrt(d2)
        })
        .collect())
}

/// Assigns `samples` uniform random points to their nearest particle center
/// and returns the hit count of every particle.
pub fn voronoi_hits<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    samples: u64,
    rng: &mut R,
) -> Result<Vec<u64>, Error> {
    let search = NearestCenter::new(particles, bx)?;
    let mut hits = alloc::vec![0u64; particles.len()];
    for _ in 0..samples {
        let p = random_point(bx, rng);
        let (i, _) = search.nearest(&p, None).expect("non-empty");
        hits[i] += 1;
    }
    Ok(hits)
}

/// Monte Carlo Voronoi cells and the local volume fractions derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVolumeFractions {
    pub hits: Vec<u64>,
    pub samples: u64,
    pub box_measure: f64,
    /// `measure(particle) / measure(cell)`; `None` for cells with no hits.
    pub lvf: Vec<Option<f64>>,
}

impl LocalVolumeFractions {
    /// Builds the estimate from per-particle hit counts, which may have been
    /// accumulated in several independent batches.
    pub fn from_hits<const D: usize, S: Shape<D>>(particles: &[S], bx: &PeriodicBox<D>, hits: Vec<u64>) -> Result<Self, Error> {
        if hits.len() != particles.len() {
            return Err(invalid("one hit count per particle is required"));
        }
        let samples: u64 = hits.iter().sum();
        let box_measure = bx.measure();
        let lvf = particles
            .iter()
            .zip(&hits)
            .map(|(p, &h)| (h > 0).then(|| p.measure() * samples as f64 / (box_measure * h as f64)))
            .collect();
        Ok(Self {
            hits,
            samples,
            box_measure,
            lvf,
        })
    }

    /// Estimated measure of cell `i`.
    pub fn cell_measure(&self, i: usize) -> f64 {
        self.box_measure * (self.hits[i] as f64 / self.samples as f64)
    }

    /// Binomial standard error of [`cell_measure`](Self::cell_measure).
    pub fn cell_measure_std_error(&self, i: usize) -> f64 {
        let n = self.samples as f64;
        let p = self.hits[i] as f64 / n;
        self.box_measure * math::sqrt(p * (1.0 - p) / n)
    }

    /// Sum of all cell measures. Every sample is assigned to exactly one
    /// cell, so this is the box measure.
    pub fn total_measure(&self) -> f64 {
        let assigned: u64 = self.hits.iter().sum();
        self.box_measure * (assigned as f64 / self.samples as f64)
    }

    pub fn min_hits(&self) -> u64 {
        self.hits.iter().copied().min().unwrap_or(0)
    }

    pub fn is_reliable(&self) -> bool {
        self.min_hits() >= MIN_RELIABLE_HITS
    }

    /// Fails with [`Error::InsufficientSampling`] if some cell has fewer than
    /// [`MIN_RELIABLE_HITS`] hits.
    pub fn check_reliable(&self) -> Result<(), Error> {
        if self.is_reliable() {
            Ok(())
        } else {
            Err(Error::InsufficientSampling {
                min_hits: self.min_hits(),
                required: MIN_RELIABLE_HITS,
            })
        }
    }
}

/// Local volume fractions from `samples` Monte Carlo points.
pub fn local_volume_fractions<const D: usize, S: Shape<D>, R: Rng + ?Sized>(
    particles: &[S],
    bx: &PeriodicBox<D>,
    samples: u64,
    rng: &mut R,
) -> Result<LocalVolumeFractions, Error> {
    if samples == 0 {
        return Err(invalid("sample count must be positive"));
    }
    let hits = voronoi_hits(particles, bx, samples, rng)?;
    LocalVolumeFractions::from_hits(particles, bx, hits)
}

/// Per platelet, the mean `|n_i · n_j|` over platelets whose centers lie
/// within `cutoff` (minimum image); `None` for platelets without neighbors.
pub fn local_nematic_order(platelets: &[Spherodisk], bx: &PeriodicBox<3>, cutoff: f64) -> Result<Vec<Option<f64>>, Error> {
    if !(cutoff > 0.0 && cutoff < 0.5 * bx.min_length()) {
        return Err(invalid("alignment cutoff must be positive and below half the box"));
    }
    let mut grid = CellGrid::new(bx, cutoff)?;
    grid.build(platelets);
    let c2 = cutoff * cutoff;
    let mut sums = alloc::vec![(0.0f64, 0u32); platelets.len()];
    for (i, p) in platelets.iter().enumerate() {
        let mut acc = (0.0, 0u32);
        // ring 1 spans every center within one edge ≥ cutoff; cells are
        // deduplicated when the grid wraps
        for ring in 0..=1 {
            grid.for_each_in_ring(&p.center, ring, |j| {
                if j != i && bx.min_image_distance2(&p.center, &platelets[j].center) <= c2 {
                    acc.0 += dot(&p.normal, &platelets[j].normal).abs();
                    acc.1 += 1;
                }
            });
        }
        sums[i] = acc;
    }
    Ok(sums
        .into_iter()
        .map(|(s, n)| (n > 0).then(|| s / f64::from(n)))
        .collect())
}

/// Mean of the present entries, `None` if there are none.
pub fn mean_present(values: &[Option<f64>]) -> Option<f64> {
    let (s, n) = values
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// `count / (total values · bin width)`: integrates to the in-range fraction.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lo + k as f64 * w, if k + 1 == self.counts.len() { self.hi } else { self.lo + (k + 1) as f64 * w })
    }
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed. Values
/// outside the range are counted only in the density normalization.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram, Error> {
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(invalid("histogram range must be finite with hi > lo"));
    }
    let mut counts = alloc::vec![0u64; bins];
    let w = (hi - lo) / bins as f64;
    for &v in values {
        if v >= lo && v <= hi {
            let k = (((v - lo) / w) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let total = values.len() as f64;
    let density = counts
        .iter()
        .map(|&c| if total > 0.0 { c as f64 / (total * w) } else { 0.0 })
        .collect();
    Ok(Histogram { lo, hi, counts, density })
}
