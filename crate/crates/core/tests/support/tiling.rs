use rand::Rng;
use srm_core::rng::rng_from_seed;
use srm_core::rsa::{rsa_spheres_polydisperse, DEFAULT_MAX_ATTEMPTS};
use srm_core::{PeriodicBox, Sphere};

/// Copies of the box per axis in the oracle's supercell.
const TILES: usize = 5;

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

// Gap between sphere i and the image of sphere j shifted by `k` box
// lengths. Written out by hand with the same operation order as the solver
// so that the two agree to the last bit.
fn gap(ps: &[Sphere<3>], l: &[f64; 3], i: usize, j: usize, k: [i32; 3]) -> f64 {
    let d: [f64; 3] = std::array::from_fn(|a| (ps[j].position[a] - ps[i].position[a]) + f64::from(k[a]) * l[a]);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() - ps[i].radius - ps[j].radius
}

/// Brute-force critical distance: every pair and image within reach is an
/// edge of a 5×5×5 periodic tiling of the box; a cluster wraps the original
/// box iff some particle's copy in the base tile is connected to one of its
/// own copies in another tile. The smallest wrapping threshold among the
/// pair gaps is found by bisection.
pub fn oracle(ps: &[Sphere<3>], bx: &PeriodicBox<3>, delta_max: f64) -> Option<(f64, u8)> {
    let l = *bx.lengths();
    let n = ps.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i..n {
            for m in 0..27i32 {
                let k = [m % 3 - 1, (m / 3) % 3 - 1, m / 9 - 1];
                if i == j && k == [0, 0, 0] {
                    continue;
                }
                let g = gap(ps, &l, i, j, k);
                if g <= delta_max {
                    edges.push((g, i, j, k));
                }
            }
        }
    }
    let tiles = TILES * TILES * TILES;
    let node = |i: usize, t: [usize; 3]| i * tiles + (t[0] * TILES + t[1]) * TILES + t[2];
    let wrapped_tiles = |delta: f64| -> Vec<[usize; 3]> {
        let mut dsu = Dsu((0..n * tiles).collect());
        for &(g, i, j, k) in &edges {
            if g > delta {
                continue;
            }
            for t in 0..tiles {
                let s = [t / (TILES * TILES), (t / TILES) % TILES, t % TILES];
                let u: [usize; 3] = std::array::from_fn(|a| (s[a] as i32 + k[a]).rem_euclid(TILES as i32) as usize);
                dsu.union(node(i, s), node(j, u));
            }
        }
        let mut found = Vec::new();
        for i in 0..n {
            let base = dsu.find(node(i, [0, 0, 0]));
            for t in 1..tiles {
                let s = [t / (TILES * TILES), (t / TILES) % TILES, t % TILES];
                if dsu.find(node(i, s)) == base {
                    found.push(s);
                }
            }
        }
        found
    };
    let mut thresholds: Vec<f64> = edges.iter().map(|e| e.0).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    if thresholds.is_empty() || wrapped_tiles(*thresholds.last().unwrap()).is_empty() {
        return None;
    }
    let (mut lo, mut hi) = (0usize, thresholds.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if wrapped_tiles(thresholds[mid]).is_empty() {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let mask = wrapped_tiles(thresholds[lo])
        .iter()
        .fold(0u8, |m, s| (0..3).fold(m, |m, a| if s[a] != 0 { m | 1 << a } else { m }));
    Some((thresholds[lo], mask))
}

pub fn random_snapshot(seed: u64) -> (Vec<Sphere<3>>, PeriodicBox<3>, f64) {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(2..=50);
    let bx = PeriodicBox::new([rng.random_range(0.8..1.2), rng.random_range(0.8..1.2), rng.random_range(0.8..1.2)]).unwrap();
    let radii: Vec<f64> = (0..n).map(|_| rng.random_range(0.03..0.1)).collect();
    let ps = rsa_spheres_polydisperse(&radii, &bx, DEFAULT_MAX_ATTEMPTS, &mut rng).unwrap();
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    // alternate between the cell search and the all-images search
    let delta_max = if seed.is_multiple_of(2) {
        0.45 * bx.min_length() - 2.0 * r_max
    } else {
        0.99 * (bx.min_length() - 2.0 * r_max)
    };
    (ps, bx, delta_max)
}


pub fn x_chain(k: usize, s: f64, r: f64) -> (Vec<Sphere<3>>, PeriodicBox<3>) {
    let bx = PeriodicBox::new([k as f64 * s, 4.0 * s, 4.0 * s]).unwrap();
    let ps = (0..k).map(|i| Sphere::new(i as u32, [i as f64 * s + 0.5 * s, 2.0 * s, 2.0 * s], r)).collect();
    (ps, bx)
}
