//! Periodic-domain primitives: small fixed-size vector helpers, the periodic
//! box with its wrapping and minimum-image rules, and volume-fraction
//! accounting.
//!
//! Positions are `[f64; D]` with `D` = 2 or 3 and are always stored wrapped
//! into `[0, L)` on every axis.

use crate::error::Error;
use crate::math;
use crate::shape::Shape;

/// A point or displacement in `D` dimensions.
pub type Vector<const D: usize> = [f64; D];

#[inline(always)]
pub fn sub<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    core::array::from_fn(|k| a[k] - b[k])
}

#[inline(always)]
pub fn add<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    core::array::from_fn(|k| a[k] + b[k])
}

#[inline(always)]
pub fn scale<const D: usize>(a: &Vector<D>, s: f64) -> Vector<D> {
    core::array::from_fn(|k| a[k] * s)
}

#[inline(always)]
pub fn dot<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        s += a[k] * b[k];
    }
    s
}

#[inline(always)]
pub fn norm2<const D: usize>(a: &Vector<D>) -> f64 {
    dot(a, a)
}

#[inline(always)]
pub fn norm<const D: usize>(a: &Vector<D>) -> f64 {
    math::sqrt(norm2(a))
}

#[inline]
pub fn cross(a: &Vector<3>, b: &Vector<3>) -> Vector<3> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Rectangular (2D) or cuboid (3D) periodic domain anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "BoxRepr", into = "BoxRepr"))]
pub struct PeriodicBox<const D: usize> {
    lengths: Vector<D>,
    half: Vector<D>,
}

impl<const D: usize> PeriodicBox<D> {
    pub fn new(lengths: Vector<D>) -> Result<Self, Error> {
        if !(D == 2 || D == 3) {
            return Err(Error::InvalidParameter("box dimension must be 2 or 3".into()));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidBox);
        }
        Ok(Self {
            lengths,
            half: core::array::from_fn(|k| 0.5 * lengths[k]),
        })
    }

    /// Box with every side equal to `length`.
    pub fn cube(length: f64) -> Result<Self, Error> {
        Self::new([length; D])
    }

    pub fn unit() -> Self {
        Self::cube(1.0).expect("unit box is valid")
    }

    #[inline(always)]
    pub fn lengths(&self) -> &Vector<D> {
        &self.lengths
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Area (2D) or volume (3D).
    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn is_cubic(&self) -> bool {
        self.lengths.iter().all(|l| *l == self.lengths[0])
    }

    /// Same box with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, Error> {
        Self::new(scale(&self.lengths, factor))
    }

    /// Maps a coordinate back into `[0, L)`.
    ///
    /// A single conditional shift handles anything within one box length of
    /// the domain; the boundary value `L` maps to `0`.
    #[inline(always)]
    pub fn wrap(&self, mut p: Vector<D>) -> Vector<D> {
        for k in 0..D {
            let l = self.lengths[k];
            if p[k] < 0.0 {
                p[k] += l;
            }
            if p[k] >= l {
                p[k] -= l;
            }
            if !(p[k] >= 0.0 && p[k] < l) {
                p[k] = wrap_far(p[k], l);
            }
        }
        p
    }

    /// Shortest periodic displacement `a - b`.
    ///
    /// Uses one conditional shift per axis, which is exact for wrapped inputs.
    #[inline(always)]
    pub fn min_image_delta(&self, a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
        let mut d = sub(a, b);
        for k in 0..D {
            if d[k] > self.half[k] {
                d[k] -= self.lengths[k];
            }
            if d[k] < -self.half[k] {
                d[k] += self.lengths[k];
            }
        }
        d
    }

    #[inline(always)]
    pub fn min_image_distance2(&self, a: &Vector<D>, b: &Vector<D>) -> f64 {
        norm2(&self.min_image_delta(a, b))
    }

    pub fn min_image_distance(&self, a: &Vector<D>, b: &Vector<D>) -> f64 {
        math::sqrt(self.min_image_distance2(a, b))
    }

    /// Lattice translation `shift ∘ L`.
    #[inline]
    pub fn lattice_vector(&self, shift: &[i32; D]) -> Vector<D> {
        core::array::from_fn(|k| f64::from(shift[k]) * self.lengths[k])
    }
}

// Out-of-precondition fallback for coordinates more than one box length away.
#[cold]
fn wrap_far(x: f64, l: f64) -> f64 {
    if !x.is_finite() {
        return 0.0;
    }
    let w = x - l * math::floor(x / l);
    if w >= l || w < 0.0 {
        0.0
    } else {
        w
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct BoxRepr {
    lengths: alloc::vec::Vec<f64>,
}

#[cfg(feature = "serde")]
impl<const D: usize> TryFrom<BoxRepr> for PeriodicBox<D> {
    type Error = alloc::string::String;

    fn try_from(r: BoxRepr) -> Result<Self, Self::Error> {
        let lengths: Vector<D> = r
            .lengths
            .try_into()
            .map_err(|_| alloc::format!("expected {D} box lengths"))?;
        PeriodicBox::new(lengths).map_err(|e| alloc::format!("{e}"))
    }
}

#[cfg(feature = "serde")]
impl<const D: usize> From<PeriodicBox<D>> for BoxRepr {
    fn from(b: PeriodicBox<D>) -> Self {
        BoxRepr {
            lengths: b.lengths.to_vec(),
        }
    }
}

/// Total particle measure over box measure. Overlaps are not discounted.
pub fn volume_fraction<const D: usize, S: Shape<D>>(particles: &[S], bx: &PeriodicBox<D>) -> f64 {
    let total: f64 = particles.iter().map(Shape::measure).sum();
    total / bx.measure()
}
