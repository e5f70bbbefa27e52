//! The shape contract shared by the generator, RSA, the descriptors and the
//! percolation solver, plus its disk/sphere instance.

use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{self, PeriodicBox, Vector};
use crate::math;

/// A rigid particle that can be moved, swollen and tested for overlap.
///
/// Implementations must keep `overlaps_at` symmetric, report contact as
/// overlap, leave the particle unchanged under `scale(1.0)`, and keep the
/// translation of `propose_move` no longer than `c_m`.
pub trait Shape<const D: usize>: Clone + core::fmt::Debug {
    fn id(&self) -> u32;
    fn set_id(&mut self, id: u32);
    fn position(&self) -> &Vector<D>;
    fn set_position(&mut self, p: Vector<D>);

    /// Radius of the smallest centered ball containing the particle.
    fn bounding_radius(&self) -> f64;

    /// Area (2D) or volume (3D).
    fn measure(&self) -> f64;

    /// Isotropic scaling about the center.
    fn scale(&mut self, factor: f64);

    /// Overlap test with `other` placed at `self.position() + d`.
    fn overlaps_at(&self, other: &Self, d: &Vector<D>) -> bool;

    /// Surface-to-surface distance to `other` placed at `self.position() + d`.
    fn surface_gap(&self, other: &Self, d: &Vector<D>) -> f64;

    /// Trial placement: translated by `c_m` along a random direction (and
    /// rotated by up to `c_r` for oriented shapes), then wrapped.
    fn propose_move<R: Rng + ?Sized>(
        &self,
        c_m: f64,
        c_r: f64,
        bx: &PeriodicBox<D>,
        rng: &mut R,
    ) -> Self;

    /// Draws a uniformly random orientation. No-op for isotropic shapes.
    fn randomize_orientation<R: Rng + ?Sized>(&mut self, _rng: &mut R) {}

    /// Minimum-image overlap test.
    #[inline]
    fn overlaps(&self, other: &Self, bx: &PeriodicBox<D>) -> bool {
        let d = bx.min_image_delta(other.position(), self.position());
        self.overlaps_at(other, &d)
    }
}

/// Uniformly distributed unit vector: a uniform direction in the plane
/// (rejection from the unit square, then normalized) in 2D, a normalized
/// Gaussian triple in 3D.
#[inline]
pub fn random_unit_vector<const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Vector<D> {
    if D == 2 {
        loop {
            let x = 2.0 * rng.random::<f64>() - 1.0;
            let y = 2.0 * rng.random::<f64>() - 1.0;
            let n2 = x * x + y * y;
            if n2 <= 1.0 && n2 > 1e-200 {
                let inv = 1.0 / math::sqrt(n2);
                return core::array::from_fn(|k| if k == 0 { x * inv } else { y * inv });
            }
        }
    } else {
        loop {
            let v: Vector<D> = core::array::from_fn(|_| StandardNormal.sample(rng));
            let n2 = geometry::norm2(&v);
            if n2 > 1e-200 {
                return geometry::scale(&v, 1.0 / math::sqrt(n2));
            }
        }
    }
}

/// Uniform random point in the box.
pub fn random_point<const D: usize, R: Rng + ?Sized>(bx: &PeriodicBox<D>, rng: &mut R) -> Vector<D> {
    let l = bx.lengths();
    let p: Vector<D> = core::array::from_fn(|k| rng.random::<f64>() * l[k]);
    bx.wrap(p)
}

/// Disk (`D = 2`) or sphere (`D = 3`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sphere<const D: usize> {
    pub id: u32,
    #[cfg_attr(feature = "serde", serde(with = "crate::shape::serde_array"))]
    pub position: Vector<D>,
    pub radius: f64,
}

impl<const D: usize> Sphere<D> {
    pub fn new(id: u32, position: Vector<D>, radius: f64) -> Self {
        Self {
            id,
            position,
            radius,
        }
    }
}

/// Area of a disk or volume of a sphere of radius `r`.
#[inline]
pub fn ball_measure<const D: usize>(r: f64) -> f64 {
    if D == 2 {
        PI * r * r
    } else {
        4.0 / 3.0 * PI * r * r * r
    }
}

impl<const D: usize> Shape<D> for Sphere<D> {
    #[inline(always)]
    fn id(&self) -> u32 {
        self.id
    }
    fn set_id(&mut self, id: u32) {
        self.id = id;
    }
    #[inline(always)]
    fn position(&self) -> &Vector<D> {
        &self.position
    }
    #[inline(always)]
    fn set_position(&mut self, p: Vector<D>) {
        self.position = p;
    }
    #[inline(always)]
    fn bounding_radius(&self) -> f64 {
        self.radius
    }
    fn measure(&self) -> f64 {
        ball_measure::<D>(self.radius)
    }
    #[inline]
    fn scale(&mut self, factor: f64) {
        self.radius *= factor;
    }
    #[inline(always)]
    fn overlaps_at(&self, other: &Self, d: &Vector<D>) -> bool {
        let s = self.radius + other.radius;
        geometry::norm2(d) <= s * s
    }
    fn surface_gap(&self, other: &Self, d: &Vector<D>) -> f64 {
        geometry::norm(d) - self.radius - other.radius
    }
    #[inline]
    fn propose_move<R: Rng + ?Sized>(
        &self,
        c_m: f64,
        _c_r: f64,
        bx: &PeriodicBox<D>,
        rng: &mut R,
    ) -> Self {
        let u = random_unit_vector::<D, R>(rng);
        let p = bx.wrap(core::array::from_fn(|k| self.position[k] + c_m * u[k]));
        Self {
            position: p,
            ..*self
        }
    }
}

// `[f64; D]` for generic D is not covered by serde's array impls.
#[cfg(feature = "serde")]
pub(crate) mod serde_array {
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const D: usize>(v: &[f64; D], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, const D: usize>(d: De) -> Result<[f64; D], De::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("wrong vector length"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn unit_vectors_are_unit_and_isotropic() {
        let mut rng = rng_from_seed(7);
        let n = 200_000;
        let mut mean3 = [0.0; 3];
        let mut abs_z = 0.0;
        for _ in 0..n {
            let v = random_unit_vector::<3, _>(&mut rng);
            assert!((geometry::norm(&v) - 1.0).abs() < 1e-12);
            for k in 0..3 {
                mean3[k] += v[k] / n as f64;
            }
            abs_z += v[2].abs() / n as f64;
        }
        // uniform on the sphere: |z| is uniform on [0, 1]
        assert!((abs_z - 0.5).abs() < 0.005);
        assert!(mean3.iter().all(|m| m.abs() < 0.01));
        let mut mean2 = [0.0; 2];
        for _ in 0..n {
            let v = random_unit_vector::<2, _>(&mut rng);
            assert!((geometry::norm(&v) - 1.0).abs() < 1e-12);
            mean2[0] += v[0] / n as f64;
            mean2[1] += v[1] / n as f64;
        }
        assert!(mean2.iter().all(|m| m.abs() < 0.01));
    }

    #[test]
    fn sphere_contract() {
        let bx = PeriodicBox::<2>::unit();
        let a = Sphere::new(0, [0.25, 0.5], 0.125);
        let mut b = a;
        b.scale(1.0);
        assert_eq!(a, b);
        assert!(a.overlaps(&a, &bx));
        // exact contact counts
        let c = Sphere::new(1, [0.5, 0.5], 0.125);
        assert!(a.overlaps(&c, &bx) && c.overlaps(&a, &bx));
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            let m = a.propose_move(0.01, 0.0, &bx, &mut rng);
            assert!((bx.min_image_distance(&m.position, &a.position) - 0.01).abs() < 1e-12);
            assert_eq!(m.radius, a.radius);
        }
    }
}
