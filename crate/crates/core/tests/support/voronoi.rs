use srm_core::{PeriodicBox, Sphere};

type P2 = [f64; 2];

/// Keeps the part of `poly` on the side of the bisector of `a` and `b`
/// closer to `a`.
fn clip(poly: &[P2], a: P2, b: P2) -> Vec<P2> {
    let n = [b[0] - a[0], b[1] - a[1]];
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let side = |p: &P2| (p[0] - mid[0]) * n[0] + (p[1] - mid[1]) * n[1];
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn area(poly: &[P2]) -> f64 {
    let mut s = 0.0;
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

/// Exact periodic Voronoi cell areas: the box-sized square around each
/// center clipped by the bisectors of every other center and every image
/// in the surrounding ring of boxes.
pub fn voronoi_areas(ps: &[Sphere<2>], bx: &PeriodicBox<2>) -> Vec<f64> {
    let l = *bx.lengths();
    ps.iter()
        .enumerate()
        .map(|(i, p)| {
            let a = p.position;
            let mut poly = vec![
                [a[0] - 0.5 * l[0], a[1] - 0.5 * l[1]],
                [a[0] + 0.5 * l[0], a[1] - 0.5 * l[1]],
                [a[0] + 0.5 * l[0], a[1] + 0.5 * l[1]],
                [a[0] - 0.5 * l[0], a[1] + 0.5 * l[1]],
            ];
            for (j, q) in ps.iter().enumerate() {
                for kx in -1..=1 {
                    for ky in -1..=1 {
                        if i == j && kx == 0 && ky == 0 {
                            continue;
                        }
                        let b = [q.position[0] + f64::from(kx) * l[0], q.position[1] + f64::from(ky) * l[1]];
                        poly = clip(&poly, a, b);
                    }
                }
            }
            area(&poly)
        })
        .collect()
}
