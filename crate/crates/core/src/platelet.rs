//! Thin circular platelets modeled as spherodisks: the set of points within
//! `t/2` of a flat medial disk. `D` is the outer diameter, so the medial disk
//! has radius `(D - t)/2` and the aspect ratio is `D/t`.

use core::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Error};
use crate::geometry::{self, cross, dot, norm2, PeriodicBox, Vector};
use crate::math;
use crate::shape::{random_unit_vector, Shape};

pub mod recipe;

pub use recipe::{generate_platelets, generate_platelets_staged, Recipe, RecipeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spherodisk {
    pub id: u32,
    pub center: Vector<3>,
    /// Unit normal of the medial disk.
    pub normal: Vector<3>,
    /// Outer diameter.
    pub diameter: f64,
    pub thickness: f64,
}

impl Spherodisk {
    /// Builds a platelet, normalizing `normal`. Requires `diameter ≥ thickness > 0`.
    pub fn new(id: u32, center: Vector<3>, normal: Vector<3>, diameter: f64, thickness: f64) -> Result<Self, Error> {
        if !(thickness > 0.0 && thickness.is_finite() && diameter >= thickness && diameter.is_finite()) {
            return Err(invalid("platelet needs diameter >= thickness > 0"));
        }
        let n2 = norm2(&normal);
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(invalid("platelet normal must be a nonzero finite vector"));
        }
        Ok(Self {
            id,
            center,
            normal: geometry::scale(&normal, 1.0 / math::sqrt(n2)),
            diameter,
            thickness,
        })
    }

    pub fn medial_radius(&self) -> f64 {
        0.5 * (self.diameter - self.thickness)
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.diameter / self.thickness
    }
}

/// Volume of a spherodisk with outer diameter `d` and thickness `t`: a slab
/// of radius `a = (d - t)/2`, a half-torus rim, and (for `a = 0`) a ball.
pub fn spherodisk_volume(d: f64, t: f64) -> f64 {
    let a = 0.5 * (d - t);
    let s = 0.5 * t;
    2.0 * PI * a * a * s + PI * PI * a * s * s + 4.0 / 3.0 * PI * s * s * s
}

/// Two unit vectors completing `n` to a right-handed orthonormal frame.
pub fn orthonormal_frame(n: &Vector<3>) -> (Vector<3>, Vector<3>) {
    let h = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = geometry::sub(&h, &geometry::scale(n, dot(&h, n)));
    let u = geometry::scale(&u, 1.0 / geometry::norm(&u));
    let v = cross(n, &u);
    (u, v)
}

/// Squared distance from `p` to the closed disk of radius `r` centered at the
/// origin with unit normal `n`.
#[inline]
fn point_disk_distance2(p: &Vector<3>, n: &Vector<3>, r: f64) -> f64 {
    let h = dot(p, n);
    let q = [p[0] - h * n[0], p[1] - h * n[1], p[2] - h * n[2]];
    let rho2 = norm2(&q);
    if rho2 <= r * r {
        h * h
    } else {
        let e = math::sqrt(rho2) - r;
        h * h + e * e
    }
}

// Both disks are closed and non-degenerate. `d` is the center of disk 2
// relative to disk 1.
fn disks_intersect(d: &Vector<3>, n1: &Vector<3>, r1: f64, n2: &Vector<3>, r2: f64) -> bool {
    let m = cross(n1, n2);
    let m2 = norm2(&m);
    if m2 < 1e-20 {
        // (nearly) parallel planes: the boundary search below measures
        // their separation exactly enough
        return false;
    }
    // Point on the line where the two planes meet, closest to disk 1's center.
    let h2 = dot(n2, d);
    let x = geometry::scale(&cross(&m, n1), h2 / m2);
    let d1 = norm2(&x);
    if d1 > r1 * r1 {
        return false;
    }
    let inv_m = 1.0 / math::sqrt(m2);
    let s2 = dot(d, &m) * inv_m;
    let off = geometry::sub(d, &x);
    let d2 = (norm2(&off) - s2 * s2).max(0.0);
    if d2 > r2 * r2 {
        return false;
    }
    let w1 = math::sqrt(r1 * r1 - d1);
    let w2 = math::sqrt(r2 * r2 - d2);
    s2.abs() <= w1 + w2
}

const INITIAL_ARCS: usize = 16;
const MAX_DEPTH: u32 = 56;
/// Rim evaluations allowed per rim. Only reached in degenerate
/// near-plateau geometries; the search then answers conservatively.
const EVAL_BUDGET: u32 = 20_000;

/// What the rim search is after.
#[derive(Clone, Copy)]
enum Goal {
    /// The minimum distance, to within an absolute tolerance.
    Minimum { tol: f64 },
    /// Whether any point is within `tau`.
    Within { tau: f64 },
}

#[derive(Clone, Copy)]
struct RimPoint {
    /// (cos, sin) of the rim angle.
    dir: (f64, f64),
    /// Height above the other disk's plane.
    h: f64,
    /// In-plane distance of the projection from the other disk's center.
    rho: f64,
    /// Distance to the other disk.
    g: f64,
}

#[derive(Clone, Copy)]
struct Arc {
    a: RimPoint,
    b: RimPoint,
    width: f64,
    depth: u32,
}

// The rim of a circle (center `c`, frame `u`, `v`, radius `rc`) seen from a
// disk at the origin with normal `n` and radius `rd`. The height of a rim
// point is `h0 + ha·cos + hb·sin`; its projection is `q0 + rc·(cos·qu + sin·qv)`.
struct Rim {
    h0: f64,
    ha: f64,
    hb: f64,
    q0: Vector<3>,
    qu: Vector<3>,
    qv: Vector<3>,
    rc: f64,
    rd: f64,
    amp: f64,
    /// Bound on the second derivative of the squared distance along the rim.
    curvature: f64,
}

impl Rim {
    fn new(c: &Vector<3>, u: &Vector<3>, v: &Vector<3>, rc: f64, n: &Vector<3>, rd: f64) -> Self {
        let flat = |x: &Vector<3>| geometry::sub(x, &geometry::scale(n, dot(x, n)));
        let (h0, ha, hb) = (dot(c, n), rc * dot(u, n), rc * dot(v, n));
        let q0 = flat(c);
        let amp = math::sqrt(ha * ha + hb * hb);
        // squared distance = height² + excess², and excess² has a Lipschitz
        // derivative even where the projection crosses the disk's rim
        let height = 2.0 * amp * amp + 2.0 * (h0.abs() + amp) * amp;
        let excess_max = math::sqrt(norm2(&q0)) + rc - rd;
        let excess = if excess_max > 0.0 {
            2.0 * rc * rc + 2.0 * excess_max * (2.0 * rc * rc / rd + rc)
        } else {
            0.0
        };
        Self {
            h0,
            ha,
            hb,
            q0,
            qu: flat(u),
            qv: flat(v),
            rc,
            rd,
            amp,
            curvature: height + excess,
        }
    }

    #[inline]
    fn at(&self, dir: (f64, f64)) -> RimPoint {
        let (cs, sn) = dir;
        let h = self.h0 + self.ha * cs + self.hb * sn;
        let q: Vector<3> = core::array::from_fn(|k| self.q0[k] + self.rc * (cs * self.qu[k] + sn * self.qv[k]));
        let rho = math::sqrt(norm2(&q));
        let e = (rho - self.rd).max(0.0);
        RimPoint {
            dir,
            h,
            rho,
            g: math::sqrt(h * h + e * e),
        }
    }

    // Lower bound of the distance over an arc. Rim points move `rc` per
    // radian and distances to convex sets are 1-Lipschitz, which bounds the
    // distance and the in-plane excess; the height is a sinusoid whose range
    // over the arc is known exactly. Near a smooth minimum the squared
    // distance bound is the one that converges quadratically.
    fn lower_bound(&self, arc: &Arc) -> f64 {
        let slack = self.rc * arc.width;
        let lipschitz = 0.5 * (arc.a.g + arc.b.g - slack);
        let (mut lo, mut hi) = (arc.a.h.min(arc.b.h), arc.a.h.max(arc.b.h));
        let amp = self.amp;
        if amp > 0.0 {
            let peak = (self.ha / amp, self.hb / amp);
            let inside = |p: (f64, f64)| {
                let (a, b) = (arc.a.dir, arc.b.dir);
                a.0 * p.1 - a.1 * p.0 >= 0.0 && p.0 * b.1 - p.1 * b.0 >= 0.0
            };
            if inside(peak) {
                hi = hi.max(self.h0 + amp);
            }
            if inside((-peak.0, -peak.1)) {
                lo = lo.min(self.h0 - amp);
            }
        }
        let height = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
        let excess = (0.5 * (arc.a.rho + arc.b.rho - slack) - self.rd).max(0.0);
        let g = arc.a.g.min(arc.b.g);
        let g2 = g * g - 0.125 * self.curvature * arc.width * arc.width;
        lipschitz
            .max(math::sqrt(height * height + excess * excess))
            .max(math::sqrt(g2.max(0.0)))
    }
}

// Branch and bound over the rim against the disk. Lowers `best` to the
// smallest distance seen; returns `true` once a point within `tau` is found
// in `Within` mode, or (conservatively) when the budget runs out there.
fn rim_to_disk(rim: &Rim, goal: Goal, best: &mut f64, mut budget: u32) -> bool {
    let keep = |arc: &Arc, best: f64| -> bool {
        let lower = rim.lower_bound(arc);
        match goal {
            Goal::Minimum { tol } => lower < best - tol,
            Goal::Within { tau } => lower <= tau,
        }
    };
    let found = |p: &RimPoint, best: &mut f64| -> bool {
        if p.g < *best {
            *best = p.g;
        }
        matches!(goal, Goal::Within { tau } if p.g <= tau)
    };
    let mut pts = [rim.at((1.0, 0.0)); INITIAL_ARCS];
    for (k, p) in pts.iter_mut().enumerate() {
        let (sn, cs) = math::sin_cos(k as f64 * (2.0 * PI / INITIAL_ARCS as f64));
        *p = rim.at((cs, sn));
        if found(p, best) {
            return true;
        }
    }
    const CAP: usize = INITIAL_ARCS + MAX_DEPTH as usize + 2;
    let empty = Arc {
        a: pts[0],
        b: pts[0],
        width: 0.0,
        depth: 0,
    };
    let mut stack = [empty; CAP];
    let mut top = 0;
    // push the most promising arcs last so they are refined first
    let mut order: [usize; INITIAL_ARCS] = core::array::from_fn(|k| k);
    let sum = |k: usize| pts[k].g + pts[(k + 1) % INITIAL_ARCS].g;
    order.sort_unstable_by(|&x, &y| sum(y).total_cmp(&sum(x)));
    for &k in &order {
        let arc = Arc {
            a: pts[k],
            b: pts[(k + 1) % INITIAL_ARCS],
            width: 2.0 * PI / INITIAL_ARCS as f64,
            depth: 0,
        };
        if keep(&arc, *best) {
            stack[top] = arc;
            top += 1;
        }
    }
    while top > 0 {
        top -= 1;
        let arc = stack[top];
        if arc.depth >= MAX_DEPTH || !keep(&arc, *best) {
            continue;
        }
        if budget == 0 {
            if let Goal::Within { tau } = goal {
                *best = best.min(tau);
                return true;
            }
            return false;
        }
        budget -= 1;
        // midpoint direction: the normalized bisector of the end directions
        let (mx, my) = (arc.a.dir.0 + arc.b.dir.0, arc.a.dir.1 + arc.b.dir.1);
        let inv = 1.0 / math::sqrt(mx * mx + my * my);
        let m = rim.at((mx * inv, my * inv));
        if found(&m, best) {
            return true;
        }
        let half = 0.5 * arc.width;
        let depth = arc.depth + 1;
        let left = Arc {
            a: arc.a,
            b: m,
            width: half,
            depth,
        };
        let right = Arc {
            a: m,
            b: arc.b,
            width: half,
            depth,
        };
        let (first, second) = if arc.a.g < arc.b.g { (right, left) } else { (left, right) };
        for child in [first, second] {
            if keep(&child, *best) {
                stack[top] = child;
                top += 1;
            }
        }
    }
    false
}

// Shared search behind `disk_disk_distance` and `disks_within`. Exact when
// the disks meet or a medial radius is zero; otherwise the minimum over both
// rims against the other disk, which is where the closest pair of separated
// disks always lies.
fn disk_disk_search(d: &Vector<3>, n1: &Vector<3>, r1: f64, n2: &Vector<3>, r2: f64, goal: Goal) -> f64 {
    let back = geometry::scale(d, -1.0);
    if r1 == 0.0 && r2 == 0.0 {
        return math::sqrt(norm2(d));
    }
    if r1 == 0.0 {
        return math::sqrt(point_disk_distance2(&back, n2, r2));
    }
    if r2 == 0.0 {
        return math::sqrt(point_disk_distance2(d, n1, r1));
    }
    if disks_intersect(d, n1, r1, n2, r2) {
        return 0.0;
    }
    // centers are points of the disks too, and often the closest ones for
    // stacked platelets
    let mut best = math::sqrt(point_disk_distance2(d, n1, r1)).min(math::sqrt(point_disk_distance2(&back, n2, r2)));
    if matches!(goal, Goal::Within { tau } if best <= tau) {
        return best;
    }
    let (u1, v1) = orthonormal_frame(n1);
    let (u2, v2) = orthonormal_frame(n2);
    if rim_to_disk(&Rim::new(&back, &u1, &v1, r1, n2, r2), goal, &mut best, EVAL_BUDGET) {
        return best;
    }
    rim_to_disk(&Rim::new(d, &u2, &v2, r2, n1, r1), goal, &mut best, EVAL_BUDGET);
    best
}

/// Minimum Euclidean distance between two closed flat disks; `d` is the
/// center of disk 2 relative to disk 1 (already minimum-imaged if periodic).
/// Zero iff the disks intersect.
pub fn disk_disk_distance(d: &Vector<3>, n1: &Vector<3>, r1: f64, n2: &Vector<3>, r2: f64) -> f64 {
    let tol = 1e-13 * (r1 + r2 + math::sqrt(norm2(d)));
    disk_disk_search(d, n1, r1, n2, r2, Goal::Minimum { tol })
}

/// Whether the disks come within `tau` of each other: cheap exact
/// rejections first, then the rim search, stopping at the first pair of
/// points within `tau`.
pub fn disks_within(d: &Vector<3>, n1: &Vector<3>, r1: f64, n2: &Vector<3>, r2: f64, tau: f64) -> bool {
    let reach = r1 + r2 + tau;
    let c2 = norm2(d);
    if c2 > reach * reach {
        return false;
    }
    // disk 1 lies in a slab of half-width r1·sin(angle) about its center
    // along the other normal, and vice versa
    let c = dot(n1, n2);
    let sin = math::sqrt((1.0 - c * c).max(0.0));
    if dot(d, n2).abs() - r1 * sin > tau || dot(d, n1).abs() - r2 * sin > tau {
        return false;
    }
    disk_disk_search(d, n1, r1, n2, r2, Goal::Within { tau }) <= tau
}

/// Rotates `v` by `angle` about the unit `axis`.
pub fn rotate(v: &Vector<3>, axis: &Vector<3>, angle: f64) -> Vector<3> {
    let (s, c) = math::sin_cos(angle);
    let kxv = cross(axis, v);
    let kv = dot(axis, v) * (1.0 - c);
    core::array::from_fn(|k| v[k] * c + kxv[k] * s + axis[k] * kv)
}

impl Shape<3> for Spherodisk {
    fn id(&self) -> u32 {
        self.id
    }
    fn set_id(&mut self, id: u32) {
        self.id = id;
    }
    #[inline(always)]
    fn position(&self) -> &Vector<3> {
        &self.center
    }
    fn set_position(&mut self, p: Vector<3>) {
        self.center = p;
    }
    #[inline]
    fn bounding_radius(&self) -> f64 {
        0.5 * self.diameter
    }
    fn measure(&self) -> f64 {
        spherodisk_volume(self.diameter, self.thickness)
    }
    fn scale(&mut self, factor: f64) {
        self.diameter *= factor;
        self.thickness *= factor;
    }
    #[inline]
    fn overlaps_at(&self, other: &Self, d: &Vector<3>) -> bool {
        disks_within(
            d,
            &self.normal,
            self.medial_radius(),
            &other.normal,
            other.medial_radius(),
            0.5 * (self.thickness + other.thickness),
        )
    }
    fn surface_gap(&self, other: &Self, d: &Vector<3>) -> f64 {
        disk_disk_distance(d, &self.normal, self.medial_radius(), &other.normal, other.medial_radius())
            - 0.5 * (self.thickness + other.thickness)
    }
    fn propose_move<R: Rng + ?Sized>(&self, c_m: f64, c_r: f64, bx: &PeriodicBox<3>, rng: &mut R) -> Self {
        let u = random_unit_vector::<3, R>(rng);
        let center = bx.wrap(core::array::from_fn(|k| self.center[k] + c_m * u[k]));
        let normal = if c_r > 0.0 {
            let axis = random_unit_vector::<3, R>(rng);
            let n = rotate(&self.normal, &axis, c_r);
            geometry::scale(&n, 1.0 / geometry::norm(&n))
        } else {
            self.normal
        };
        Self {
            center,
            normal,
            ..*self
        }
    }
    fn randomize_orientation<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.normal = random_unit_vector::<3, R>(rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    const Z: Vector<3> = [0.0, 0.0, 1.0];
    const X: Vector<3> = [1.0, 0.0, 0.0];

    #[test]
    fn distance_examples() {
        assert!((disk_disk_distance(&[0.0, 0.0, 0.3], &Z, 0.5, &Z, 0.5) - 0.3).abs() < 1e-15);
        assert!((disk_disk_distance(&[1.4, 0.0, 0.0], &Z, 0.5, &Z, 0.5) - 0.4).abs() < 1e-9);
        // perpendicular, crossing
        assert_eq!(disk_disk_distance(&[0.2, 0.0, 0.0], &Z, 0.5, &X, 0.5), 0.0);
        // perpendicular T: edge of the vertical disk 0.1 above the face
        let d = disk_disk_distance(&[0.0, 0.0, 0.6], &Z, 0.5, &X, 0.5);
        assert!((d - 0.1).abs() < 1e-9, "{d}");
    }

    #[test]
    fn overlap_examples() {
        let bx = PeriodicBox::cube(10.0).unwrap();
        let a = Spherodisk::new(0, [5.0; 3], Z, 1.0, 0.01).unwrap();
        assert!(a.overlaps(&a, &bx));
        let mut b = a;
        b.center[2] += 0.01;
        assert!(a.overlaps(&b, &bx) && b.overlaps(&a, &bx));
        b.center[2] += 1e-9;
        assert!(!a.overlaps(&b, &bx));
        let far = Spherodisk::new(1, [6.5, 5.0, 5.0], X, 1.0, 0.01).unwrap();
        assert!(!a.overlaps(&far, &bx));
    }

    #[test]
    fn volume_limits() {
        // ball when the medial radius vanishes
        assert!((spherodisk_volume(1.0, 1.0) - PI / 6.0).abs() < 1e-15);
        // thin-slab limit approaches π D² t / 4
        let v = spherodisk_volume(1.0, 1e-6);
        assert!((v / (PI / 4.0 * 1e-6) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn moves() {
        let bx = PeriodicBox::cube(4.0).unwrap();
        let p = Spherodisk::new(3, [1.0, 2.0, 3.0], [1.0, 1.0, 0.0], 1.0, 0.01).unwrap();
        let mut rng = rng_from_seed(5);
        assert_eq!(p.propose_move(0.0, 0.0, &bx, &mut rng), p);
        for _ in 0..100 {
            let q = p.propose_move(0.3, 0.0, &bx, &mut rng);
            assert_eq!(q.normal, p.normal);
            assert!((bx.min_image_distance(&q.center, &p.center) - 0.3).abs() < 1e-12);
            let r = p.propose_move(0.0, 0.2, &bx, &mut rng);
            assert!((geometry::norm(&r.normal) - 1.0).abs() < 1e-12);
            assert!(dot(&r.normal, &p.normal) >= 0.2f64.cos() - 1e-12);
            assert_eq!((r.diameter, r.thickness), (p.diameter, p.thickness));
        }
    }

    #[test]
    fn repeated_rotation_is_isotropic() {
        let bx = PeriodicBox::cube(4.0).unwrap();
        let mut rng = rng_from_seed(11);
        let mut mean = 0.0;
        let chains = 20;
        let steps = 10_000;
        for _ in 0..chains {
            let mut p = Spherodisk::new(0, [1.0; 3], Z, 1.0, 0.01).unwrap();
            for _ in 0..steps {
                p = p.propose_move(0.0, 0.5, &bx, &mut rng);
                mean += p.normal[2].abs();
            }
        }
        mean /= (chains * steps) as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn rejects_bad_platelets() {
        assert!(Spherodisk::new(0, [0.0; 3], Z, 0.5, 1.0).is_err());
        assert!(Spherodisk::new(0, [0.0; 3], [0.0; 3], 1.0, 0.1).is_err());
        assert!(Spherodisk::new(0, [0.0; 3], Z, 1.0, 0.0).is_err());
    }
}
