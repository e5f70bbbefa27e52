mod support;

use proptest::prelude::*;
use srm_core::percolation::{critical_percolation_distance, gap_edges, number_density, Percolation};
use srm_core::{Error, PeriodicBox, Sphere};
use support::tiling::{oracle, random_snapshot, x_chain};

#[test]
fn critical_distance_matches_tiling_oracle() {
    let mut percolating = 0;
    for seed in 0..50 {
        let (ps, bx, delta_max) = random_snapshot(seed);
        let got = critical_percolation_distance(&ps, &bx, delta_max);
        match (got, oracle(&ps, &bx, delta_max)) {
            (Ok(p), Some((dc, mask))) => {
                assert_eq!(p.delta_c.to_bits(), dc.to_bits(), "seed {seed}: {} vs {dc}", p.delta_c);
                assert_eq!(p.axis_mask, mask, "seed {seed}");
                percolating += 1;
            }
            (Err(Error::NotPercolating { .. }), None) => {}
            (got, want) => panic!("seed {seed}: solver {got:?}, oracle {want:?}"),
        }
    }
    assert!(percolating >= 40, "only {percolating} of 50 snapshots percolate");
}

#[test]
fn x_chain_critical_distance_is_the_spacing_gap() {
    for k in [1, 2, 3, 7, 16] {
        for (s, r) in [(0.25, 0.0625), (1.0, 0.375), (0.125, 0.046875)] {
            let (ps, bx) = x_chain(k, s, r);
            let p = critical_percolation_distance(&ps, &bx, s - 2.0 * r).unwrap();
            assert_eq!(p, Percolation { delta_c: s - 2.0 * r, axis_mask: 0b001 }, "k={k} s={s} r={r}");
        }
    }
}

#[test]
fn isolated_particles_do_not_percolate() {
    let (ps, bx) = x_chain(4, 1.0, 0.1);
    assert_eq!(
        critical_percolation_distance(&ps, &bx, 0.5),
        Err(Error::NotPercolating { delta_max: 0.5 })
    );
    assert!(matches!(critical_percolation_distance(&ps, &bx, 3.9), Err(Error::DeltaMaxTooLarge { .. })));
}

#[test]
fn density_of_a_chain() {
    let bx = PeriodicBox::<3>::cube(2.0).unwrap();
    assert_eq!(number_density(16, 0.5, &bx).unwrap(), 0.25);
}

fn scaled(ps: &[Sphere<3>], bx: &PeriodicBox<3>, lambda: f64) -> (Vec<Sphere<3>>, PeriodicBox<3>) {
    let sb = bx.scaled(lambda).unwrap();
    let sp = ps
        .iter()
        .map(|p| Sphere::new(p.id, std::array::from_fn(|k| p.position[k] * lambda), p.radius * lambda))
        .collect();
    (sp, sb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn critical_distance_scales_with_the_configuration(seed in 0u64..10_000, lambda in 0.01f64..100.0) {
        let (ps, bx, delta_max) = random_snapshot(seed);
        let (sp, sb) = scaled(&ps, &bx, lambda);
        match (critical_percolation_distance(&ps, &bx, delta_max), critical_percolation_distance(&sp, &sb, delta_max * lambda)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((b.delta_c - lambda * a.delta_c).abs() <= 1e-12 * (lambda * a.delta_c).abs(),
                    "{} vs {}", b.delta_c, lambda * a.delta_c);
                prop_assert_eq!(a.axis_mask, b.axis_mask);
            }
            (Err(Error::NotPercolating { .. }), Err(Error::NotPercolating { .. })) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn edges_are_symmetric_in_relabeling(seed in 0u64..10_000) {
        let (ps, bx, delta_max) = random_snapshot(seed);
        let mut rev: Vec<Sphere<3>> = ps.iter().rev().cloned().collect();
        for (k, p) in rev.iter_mut().enumerate() {
            p.id = k as u32;
        }
        let a = gap_edges(&ps, &bx, delta_max).unwrap();
        let b = gap_edges(&rev, &bx, delta_max).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.gap - y.gap).abs() <= 1e-15);
        }
        let pa = critical_percolation_distance(&ps, &bx, delta_max).ok().map(|p| p.delta_c);
        let pb = critical_percolation_distance(&rev, &bx, delta_max).ok().map(|p| p.delta_c);
        match (pa, pb) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-15),
            (x, y) => prop_assert_eq!(x, y),
        }
    }
}
