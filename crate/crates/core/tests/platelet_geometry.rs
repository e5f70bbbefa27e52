mod support;

use proptest::prelude::*;
use rand::Rng;
use srm_core::geometry::{self, PeriodicBox, Vector};
use srm_core::platelet::{disk_disk_distance, rotate};
use srm_core::rng::rng_from_seed;
use srm_core::shape::{random_unit_vector, Shape};
use srm_core::{Sphere, Spherodisk};

#[test]
fn distance_matches_sampling_oracle() {
    let mut rng = rng_from_seed(2024);
    let r = 0.5;
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let (d, n1, n2) = support::disks::random_pair(case, &mut rng);
        let got = disk_disk_distance(&d, &n1, r, &n2, r);
        let want = support::disks::distance(&d, &n1, r, &n2, r);
        worst = worst.max((got - want).abs());
        assert!((got - want).abs() <= 1e-4 * 2.0 * r, "case {case}: {got} vs {want}");
        // the search returns the distance of an actual pair of points
        assert!(got >= want - 1e-9, "case {case}: {got} below {want}");
    }
    println!("worst deviation {worst:e}");
}

#[test]
fn zero_medial_radius_is_a_sphere() {
    let bx = PeriodicBox::cube(3.0).unwrap();
    let mut rng = rng_from_seed(99);
    for _ in 0..10_000 {
        let da = rng.random_range(0.1..1.0);
        let db = rng.random_range(0.1..1.0);
        let ca = srm_core::shape::random_point(&bx, &mut rng);
        let cb = srm_core::shape::random_point(&bx, &mut rng);
        let a = Spherodisk::new(0, ca, random_unit_vector::<3, _>(&mut rng), da, da).unwrap();
        let b = Spherodisk::new(1, cb, random_unit_vector::<3, _>(&mut rng), db, db).unwrap();
        let sa = Sphere::new(0, ca, 0.5 * da);
        let sb = Sphere::new(1, cb, 0.5 * db);
        assert_eq!(a.overlaps(&b, &bx), sa.overlaps(&sb, &bx));
        assert!((a.measure() - sa.measure()).abs() < 1e-15);
    }
}

#[test]
fn overlap_agrees_with_distance() {
    let mut rng = rng_from_seed(5);
    let bx = PeriodicBox::cube(10.0).unwrap();
    for _ in 0..20_000 {
        let t = rng.random_range(0.005..0.05);
        let a = Spherodisk::new(0, [5.0; 3], random_unit_vector::<3, _>(&mut rng), 1.0, t).unwrap();
        let off = geometry::scale(&random_unit_vector::<3, _>(&mut rng), rng.random_range(0.0..1.1));
        let b = Spherodisk::new(1, geometry::add(&a.center, &off), random_unit_vector::<3, _>(&mut rng), 1.0, t).unwrap();
        let gap = a.surface_gap(&b, &off);
        // away from the threshold both routes must agree
        if gap.abs() > 1e-9 {
            assert_eq!(a.overlaps(&b, &bx), gap <= 0.0, "gap {gap}");
        }
    }
}

fn unit() -> impl Strategy<Value = Vector<3>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| {
            let l = (x * x + y * y + z * z).sqrt();
            [x / l, y / l, z / l]
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn symmetric_bounded_and_rigid(
        n1 in unit(), n2 in unit(), dir in unit(), axis in unit(),
        dist in 0.0..1.5f64, r1 in 0.05..0.6f64, r2 in 0.05..0.6f64, angle in -3.0..3.0f64,
        shift in (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64),
    ) {
        let d = geometry::scale(&dir, dist);
        let g = disk_disk_distance(&d, &n1, r1, &n2, r2);
        let back = geometry::scale(&d, -1.0);
        prop_assert!((g - disk_disk_distance(&back, &n2, r2, &n1, r1)).abs() < 1e-10);
        prop_assert!(g >= (dist - r1 - r2).max(0.0) - 1e-12);
        prop_assert!(g <= dist + 1e-12);
        // rigid motion of both disks: rotate everything, translate both centers
        let c1: Vector<3> = [shift.0, shift.1, shift.2];
        let c2 = geometry::add(&c1, &rotate(&d, &axis, angle));
        let moved = disk_disk_distance(
            &geometry::sub(&c2, &c1),
            &rotate(&n1, &axis, angle), r1,
            &rotate(&n2, &axis, angle), r2,
        );
        prop_assert!((g - moved).abs() < 1e-10, "{} vs {}", g, moved);
    }
}
