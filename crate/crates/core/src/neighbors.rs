//! Nearest-neighbour distances and pair enumeration.
//!
//! Below [`BRUTE_FORCE_LIMIT`] points every pair is visited. Above it a uniform
//! cell grid prunes the search; distances are computed by the same expression
//! so both paths return identical values.

use crate::Vec3;

pub const BRUTE_FORCE_LIMIT: usize = 10_000;

#[inline]
fn dist(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Distance from every point to its nearest other point (`+∞` if alone).
pub fn nearest_neighbor_distances(points: &[Vec3]) -> Vec<f64> {
    if points.len() < BRUTE_FORCE_LIMIT {
        nearest_brute_force(points)
    } else {
        CellGrid::new(points).nearest_distances(points)
    }
}

pub fn nearest_brute_force(points: &[Vec3]) -> Vec<f64> {
    let n = points.len();
    let mut best = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&points[i], &points[j]);
            if d < best[i] {
                best[i] = d;
            }
            if d < best[j] {
                best[j] = d;
            }
        }
    }
    best
}

/// Calls `visit(i, j, d)` for every unordered pair with `d < cutoff`.
pub fn for_each_pair_within(
    points: &[Vec3],
    cutoff: f64,
    mut visit: impl FnMut(usize, usize, f64),
) {
    if points.len() < BRUTE_FORCE_LIMIT || !(cutoff.is_finite()) {
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = dist(&points[i], &points[j]);
                if d < cutoff {
                    visit(i, j, d);
                }
            }
        }
        return;
    }
    let grid = CellGrid::with_cell(points, cutoff);
    for (i, p) in points.iter().enumerate() {
        let c = grid.cell_of(p);
        grid.for_each_in_ring_block(c, 1, |j| {
            if j > i {
                let d = dist(p, &points[j]);
                if d < cutoff {
                    visit(i, j, d);
                }
            }
        });
    }
}

struct CellGrid {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl CellGrid {
    fn new(points: &[Vec3]) -> Self {
        let (lo, hi) = bounds(points);
        let vol = (0..3).map(|a| (hi[a] - lo[a]).max(1e-12)).product::<f64>();
        let cell = (vol / points.len() as f64).cbrt().max(1e-12);
        Self::with_cell(points, cell)
    }

    fn with_cell(points: &[Vec3], cell: f64) -> Self {
        let (lo, hi) = bounds(points);
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).min(1 << 20));
        let mut grid = Self {
            origin: lo,
            cell,
            dims,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let ncell = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; ncell + 1];
        let keys: Vec<usize> = points.iter().map(|p| grid.key(grid.cell_of(p))).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for c in 0..ncell {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k]] = i;
            fill[k] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        grid
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let s = ((p[a] - self.origin[a]) / self.cell).floor();
            (s.max(0.0) as usize).min(self.dims[a] - 1)
        })
    }

    fn key(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    fn for_each_in_cell(&self, c: [usize; 3], f: &mut impl FnMut(usize)) {
        let k = self.key(c);
        for &i in &self.items[self.starts[k]..self.starts[k + 1]] {
            f(i);
        }
    }

    /// Visits all cells within Chebyshev distance `ring` of `c`.
    fn for_each_in_ring_block(&self, c: [usize; 3], ring: usize, mut f: impl FnMut(usize)) {
        let lo = c.map(|v| v.saturating_sub(ring));
        let hi = [0, 1, 2].map(|a| (c[a] + ring).min(self.dims[a] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    self.for_each_in_cell([x, y, z], &mut f);
                }
            }
        }
    }

    /// Visits only the shell of cells at Chebyshev distance exactly `ring`.
    fn for_each_on_ring(&self, c: [usize; 3], ring: usize, f: &mut impl FnMut(usize)) {
        let r = ring as isize;
        let ci = c.map(|v| v as isize);
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    let q = [ci[0] + dx, ci[1] + dy, ci[2] + dz];
                    if (0..3).any(|a| q[a] < 0 || q[a] >= self.dims[a] as isize) {
                        continue;
                    }
                    self.for_each_in_cell(q.map(|v| v as usize), f);
                }
            }
        }
    }

    fn nearest_distances(&self, points: &[Vec3]) -> Vec<f64> {
        let max_ring = *self.dims.iter().max().unwrap();
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let c = self.cell_of(p);
                let mut best = f64::INFINITY;
                for ring in 0..=max_ring {
                    self.for_each_on_ring(c, ring, &mut |j| {
                        if j != i {
                            let d = dist(p, &points[j]);
                            if d < best {
                                best = d;
                            }
                        }
                    });
                    // anything beyond this ring is at least `ring * cell` away
                    if best <= ring as f64 * self.cell {
                        break;
                    }
                }
                best
            })
            .collect()
    }
}

fn bounds(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    #[test]
    fn cell_grid_matches_brute_force() {
        let pts = random_points(3000, 7);
        let grid = CellGrid::new(&pts).nearest_distances(&pts);
        assert_eq!(grid, nearest_brute_force(&pts));
    }

    #[test]
    fn pairs_within_cutoff_match() {
        let pts = random_points(500, 3);
        let mut brute = Vec::new();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let d = dist(&pts[i], &pts[j]);
                if d < 0.05 {
                    brute.push((i, j));
                }
            }
        }
        let grid = CellGrid::with_cell(&pts, 0.05);
        let mut found = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            grid.for_each_in_ring_block(grid.cell_of(p), 1, |j| {
                if j > i && dist(p, &pts[j]) < 0.05 {
                    found.push((i, j));
                }
            });
        }
        found.sort();
        assert_eq!(found, brute);
    }

    #[test]
    fn single_point_is_isolated() {
        assert_eq!(
            nearest_neighbor_distances(&[Vec3::zeros()]),
            vec![f64::INFINITY]
        );
    }
}
