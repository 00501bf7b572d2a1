//! Uniform lattices anchored at integer multiples of the spacing.
//!
//! Every grid in the crate is a window of the global lattice `h·ℤ²`, so grids
//! built for different domains share points exactly. That is what makes
//! "sup over the common grid" comparisons across a parameter family meaningful.

use num_complex::Complex64 as C64;

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self { xmin, xmax, ymin, ymax }
    }

    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a C64>) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        let mut b = Self::new(first.re, first.re, first.im, first.im);
        for p in it {
            b.xmin = b.xmin.min(p.re);
            b.xmax = b.xmax.max(p.re);
            b.ymin = b.ymin.min(p.im);
            b.ymax = b.ymax.max(p.im);
        }
        Some(b)
    }

    pub fn expand(&self, m: f64) -> Self {
        Self::new(self.xmin - m, self.xmax + m, self.ymin - m, self.ymax + m)
    }

    pub fn union(&self, o: &Self) -> Self {
        Self::new(
            self.xmin.min(o.xmin),
            self.xmax.max(o.xmax),
            self.ymin.min(o.ymin),
            self.ymax.max(o.ymax),
        )
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.xmin && z.re <= self.xmax && z.im >= self.ymin && z.im <= self.ymax
    }

    pub fn diameter(&self) -> f64 {
        (self.xmax - self.xmin).hypot(self.ymax - self.ymin)
    }
}

/// A rectangular window `{ ((i0+i)h, (j0+j)h) : 0 ≤ i < nx, 0 ≤ j < ny }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    /// Smallest window covering `bbox`.
    pub fn covering(bbox: &BBox, h: f64) -> Self {
        assert!(h > 0.0, "lattice spacing must be positive");
        let i0 = (bbox.xmin / h).floor() as i64;
        let i1 = (bbox.xmax / h).ceil() as i64;
        let j0 = (bbox.ymin / h).floor() as i64;
        let j1 = (bbox.ymax / h).ceil() as i64;
        Self {
            h,
            i0,
            j0,
            nx: (i1 - i0 + 1) as usize,
            ny: (j1 - j0 + 1) as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new((self.i0 + i as i64) as f64 * self.h, (self.j0 + j as i64) as f64 * self.h)
    }

    #[inline]
    pub fn point_at(&self, k: usize) -> C64 {
        self.point(k % self.nx, k / self.nx)
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.point_at(k)).collect()
    }

    pub fn bbox(&self) -> BBox {
        let a = self.point(0, 0);
        let b = self.point(self.nx - 1, self.ny - 1);
        BBox::new(a.re, b.re, a.im, b.im)
    }

    /// Global integer coordinates of a lattice point, if `z` is (numerically) one.
    pub fn global_index(h: f64, z: C64) -> (i64, i64) {
        ((z.re / h).round() as i64, (z.im / h).round() as i64)
    }
}

/// Complex values sampled on a lattice window.
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub lattice: Lattice,
    pub values: Vec<C64>,
}

impl LatticeField {
    pub fn from_fn(lattice: Lattice, f: impl Fn(C64) -> C64 + Sync) -> Self {
        use rayon::prelude::*;
        let values = (0..lattice.len())
            .into_par_iter()
            .map(|k| f(lattice.point_at(k)))
            .collect();
        Self { lattice, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[self.lattice.index(i, j)]
    }

    /// Tensor-product cubic Lagrange interpolation. Exact at lattice points;
    /// points outside the window are clamped onto the outermost stencil.
    pub fn interpolate(&self, z: C64) -> C64 {
        let lat = &self.lattice;
        let u = z.re / lat.h - lat.i0 as f64;
        let v = z.im / lat.h - lat.j0 as f64;
        let (iu, tu) = stencil_origin(u, lat.nx);
        let (iv, tv) = stencil_origin(v, lat.ny);
        let wu = cubic_weights(tu);
        let wv = cubic_weights(tv);
        let mut acc = C64::new(0.0, 0.0);
        for (b, wvb) in wv.iter().enumerate() {
            let row = (iv + b) * lat.nx + iu;
            let mut racc = C64::new(0.0, 0.0);
            for (a, wua) in wu.iter().enumerate() {
                racc += self.values[row + a] * wua;
            }
            acc += racc * wvb;
        }
        acc
    }
}

// Returns the first index of a 4-point stencil and the local coordinate
// relative to it (in [1,2] for interior points).
fn stencil_origin(u: f64, n: usize) -> (usize, f64) {
    assert!(n >= 4, "lattice window too small for cubic interpolation");
    let base = u.floor() as i64 - 1;
    let base = base.clamp(0, n as i64 - 4) as usize;
    (base, u - base as f64)
}

fn cubic_weights(t: f64) -> [f64; 4] {
    // Lagrange basis on nodes 0,1,2,3.
    let d0 = t;
    let d1 = t - 1.0;
    let d2 = t - 2.0;
    let d3 = t - 3.0;
    [
        -d1 * d2 * d3 / 6.0,
        d0 * d2 * d3 / 2.0,
        -d0 * d1 * d3 / 2.0,
        d0 * d1 * d2 / 6.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_share_global_points() {
        let h = 0.1;
        let a = Lattice::covering(&BBox::new(-1.0, 1.0, -1.0, 1.0), h);
        let b = Lattice::covering(&BBox::new(-0.53, 0.7, 0.02, 1.3), h);
        let pa = a.points();
        for p in b.points() {
            assert!(pa.iter().any(|q| (*q - p).norm() < 1e-12) || !a.bbox().contains(p));
        }
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let lat = Lattice::covering(&BBox::new(-1.0, 1.0, -1.0, 1.0), 0.05);
        let f = |z: C64| z * z * z - C64::new(0.0, 2.0) * z + 1.0;
        let field = LatticeField::from_fn(lat, f);
        for z in [C64::new(0.013, -0.377), C64::new(0.9, 0.91), C64::new(-0.99, 0.5)] {
            assert!((field.interpolate(z) - f(z)).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolation_is_fourth_order() {
        let f = |z: C64| (z * 1.7).exp();
        let probes: Vec<C64> =
            (0..50).map(|k| C64::new(-0.3 + 0.0123 * k as f64, 0.25 - 0.0097 * k as f64)).collect();
        let err = |h: f64| {
            let lat = Lattice::covering(&BBox::new(-0.5, 0.5, -0.5, 0.5), h);
            let field = LatticeField::from_fn(lat, f);
            probes.iter().map(|z| (field.interpolate(*z) - f(*z)).norm()).fold(0.0, f64::max)
        };
        let slope = (err(0.04) / err(0.02)).log2();
        assert!(slope > 3.5, "slope {slope}");
    }
}
