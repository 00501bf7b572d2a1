//! Bucket-grid index for exact nearest-neighbour queries on planar point sets.

use num_complex::Complex64 as C64;

use crate::lattice::BBox;

#[derive(Debug, Clone)]
pub struct PointIndex {
    pts: Vec<C64>,
    bbox: BBox,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    order: Vec<u32>,
}

impl PointIndex {
    /// Panics on an empty point set.
    pub fn new(pts: Vec<C64>) -> Self {
        let bbox = BBox::of_points(&pts).expect("nonempty point set");
        let w = (bbox.xmax - bbox.xmin).max(1e-12);
        let hgt = (bbox.ymax - bbox.ymin).max(1e-12);
        // about two points per occupied cell for area-filling sets, and a
        // sensible cell for curves (points along a line)
        let cell = ((w * hgt / pts.len() as f64).sqrt() * 1.5)
            .max(w.max(hgt) / pts.len() as f64)
            .max(1e-12);
        let nx = ((w / cell) as usize + 1).min(2048);
        let ny = ((hgt / cell) as usize + 1).min(2048);
        let mut s = Self { pts, bbox, cell, nx, ny, start: Vec::new(), order: Vec::new() };
        let cells: Vec<usize> = s.pts.iter().map(|p| s.cell_index(*p)).collect();
        let mut count = vec![0u32; nx * ny + 1];
        for &c in &cells {
            count[c + 1] += 1;
        }
        for k in 0..nx * ny {
            count[k + 1] += count[k];
        }
        let mut fill = count.clone();
        let mut order = vec![0u32; s.pts.len()];
        for (k, &c) in cells.iter().enumerate() {
            order[fill[c] as usize] = k as u32;
            fill[c] += 1;
        }
        s.start = count;
        s.order = order;
        s
    }

    pub fn points(&self) -> &[C64] {
        &self.pts
    }

    fn cell_xy(&self, p: C64) -> (i64, i64) {
        let i = ((p.re - self.bbox.xmin) / self.cell).floor() as i64;
        let j = ((p.im - self.bbox.ymin) / self.cell).floor() as i64;
        (i.clamp(0, self.nx as i64 - 1), j.clamp(0, self.ny as i64 - 1))
    }

    fn cell_index(&self, p: C64) -> usize {
        let (i, j) = self.cell_xy(p);
        j as usize * self.nx + i as usize
    }

    /// Index of and distance to the nearest stored point.
    pub fn nearest(&self, z: C64) -> (usize, f64) {
        let (ci, cj) = self.cell_xy(z);
        // distance from z to the clamped cell, for points outside the box
        let dx = (self.bbox.xmin - z.re).max(z.re - self.bbox.xmax).max(0.0);
        let dy = (self.bbox.ymin - z.im).max(z.im - self.bbox.ymax).max(0.0);
        let outside = dx.hypot(dy);
        let mut best = (0usize, f64::INFINITY);
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            if ring > 0 && outside.max((ring as f64 - 1.0) * self.cell) > best.1 {
                break;
            }
            let (i0, i1, j0, j1) = (ci - ring, ci + ring, cj - ring, cj + ring);
            for j in j0.max(0)..=j1.min(self.ny as i64 - 1) {
                let full_row = j == j0 || j == j1;
                let step = if full_row { 1 } else { (i1 - i0).max(1) };
                let mut i = i0;
                while i <= i1 {
                    if i >= 0 && i < self.nx as i64 {
                        let c = j as usize * self.nx + i as usize;
                        for &k in &self.order[self.start[c] as usize..self.start[c + 1] as usize] {
                            let d = (self.pts[k as usize] - z).norm();
                            if d < best.1 {
                                best = (k as usize, d);
                            }
                        }
                    }
                    i += step;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let curve: Vec<C64> = (0..500)
            .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 500.0) * C64::new(2.0, 0.0))
            .collect();
        let blob: Vec<C64> = (0..300).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        for pts in [curve, blob] {
            let idx = PointIndex::new(pts.clone());
            for _ in 0..500 {
                let z = C64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let brute = pts.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min);
                assert_eq!(idx.nearest(z).1, brute);
            }
        }
    }
}
