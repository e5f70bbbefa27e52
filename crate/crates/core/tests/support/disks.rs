use rand::Rng;
use srm_core::geometry::{self, dot, norm, Vector};
use srm_core::shape::random_unit_vector;
use srm_core::platelet::orthonormal_frame;

// Closest point of a disk (center c, unit normal n, radius r) to p.
fn project(p: &Vector<3>, c: &Vector<3>, n: &Vector<3>, r: f64) -> Vector<3> {
    let d = geometry::sub(p, c);
    let inplane = geometry::sub(&d, &geometry::scale(n, dot(&d, n)));
    let l = norm(&inplane);
    let inplane = if l > r { geometry::scale(&inplane, r / l) } else { inplane };
    geometry::add(c, &inplane)
}

// Brute-force reference: the best of ~10⁶ point pairs sampled on both disks
// (rim-heavy polar grids), then alternating projections from that pair.
// Disk-disk distance is a convex problem, so the descent cannot stall in a
// non-global minimum.
pub fn distance(d: &Vector<3>, n1: &Vector<3>, r1: f64, n2: &Vector<3>, r2: f64) -> f64 {
    let grid = |c: &Vector<3>, n: &Vector<3>, r: f64| -> Vec<Vector<3>> {
        let (u, v) = orthonormal_frame(n);
        let mut pts = vec![*c];
        for ring in 1..=10 {
            let rr = r * ring as f64 / 10.0;
            let m = if ring == 10 { 500 } else { 50 };
            for k in 0..m {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                pts.push(std::array::from_fn(|i| c[i] + rr * (a.cos() * u[i] + a.sin() * v[i])));
            }
        }
        pts
    };
    let a = grid(&[0.0; 3], n1, r1);
    let b = grid(d, n2, r2);
    let mut best = (f64::INFINITY, [0.0; 3], [0.0; 3]);
    for p in &a {
        for q in &b {
            let dd = geometry::norm2(&geometry::sub(p, q));
            if dd < best.0 {
                best = (dd, *p, *q);
            }
        }
    }
    let (_, mut p, mut q) = best;
    for _ in 0..200_000 {
        let q2 = project(&p, d, n2, r2);
        let p2 = project(&q2, &[0.0; 3], n1, r1);
        let moved = norm(&geometry::sub(&p2, &p)) + norm(&geometry::sub(&q2, &q));
        p = p2;
        q = q2;
        if moved < 1e-15 {
            break;
        }
    }
    norm(&geometry::sub(&p, &q))
}

/// Center offset and normals of a pair of radius-0.5 disks. Cases cycle
/// through near-touching, deeply interpenetrating, perpendicular and generic
/// placements.
pub fn random_pair<R: Rng>(case: usize, rng: &mut R) -> (Vector<3>, Vector<3>, Vector<3>) {
    let n1: Vector<3> = random_unit_vector::<3, _>(rng);
    let mut n2: Vector<3> = random_unit_vector::<3, _>(rng);
    let dir: Vector<3> = random_unit_vector::<3, _>(rng);
    let dist = match case % 4 {
        0 => rng.random_range(0.9..1.05),
        1 => rng.random_range(0.0..0.6),
        2 => {
            let (u, _) = orthonormal_frame(&n1);
            n2 = u;
            rng.random_range(0.4..0.7)
        }
        _ => rng.random_range(0.3..1.2),
    };
    (geometry::scale(&dir, dist), n1, n2)
}
