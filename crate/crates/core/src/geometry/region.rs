//! Regions: a membership predicate backed by an exact distance function,
//! plus a finite lattice sample used by every "for all points" check.

use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::curve::JordanDomain;
use super::index::PointIndex;
use crate::error::{Error, Result};
use crate::lattice::{BBox, Lattice};

/// A planar set known through its distance function.
pub trait Shape: Send + Sync + Debug {
    /// Euclidean distance from `z` to the set (0 on the set).
    fn distance(&self, z: C64) -> f64;

    fn contains(&self, z: C64) -> bool {
        self.distance(z) <= 0.0
    }

    /// Signed distance to the boundary (negative inside) when available.
    fn signed_distance(&self, _z: C64) -> Option<f64> {
        None
    }

    fn bbox(&self) -> BBox;
}

/// Finite point set.
#[derive(Debug, Clone)]
pub struct PointSet(pub Vec<C64>);

impl Shape for PointSet {
    fn distance(&self, z: C64) -> f64 {
        self.0.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
    }
    fn bbox(&self) -> BBox {
        BBox::of_points(&self.0).unwrap_or(BBox::new(0.0, 0.0, 0.0, 0.0))
    }
}

/// Closed disc.
#[derive(Debug, Clone, Copy)]
pub struct Disc {
    pub center: C64,
    pub radius: f64,
}

impl Shape for Disc {
    fn distance(&self, z: C64) -> f64 {
        ((z - self.center).norm() - self.radius).max(0.0)
    }
    fn signed_distance(&self, z: C64) -> Option<f64> {
        Some((z - self.center).norm() - self.radius)
    }
    fn bbox(&self) -> BBox {
        let c = self.center;
        BBox::new(c.re - self.radius, c.re + self.radius, c.im - self.radius, c.im + self.radius)
    }
}

/// Closure of a Jordan domain, optionally cut to the slab `lo ≤ Re z ≤ hi`.
///
/// Exact (up to Newton refinement) for convex domains, which is the only
/// case the Cartan-pair constructor admits.
#[derive(Debug, Clone)]
pub struct Slab {
    pub domain: Arc<JordanDomain>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    lo_chords: Vec<(f64, f64)>,
    hi_chords: Vec<(f64, f64)>,
}

impl Slab {
    pub fn new(domain: Arc<JordanDomain>, lo: Option<f64>, hi: Option<f64>) -> Self {
        let lo_chords = lo.map(|x| domain.vertical_chords(x)).unwrap_or_default();
        let hi_chords = hi.map(|x| domain.vertical_chords(x)).unwrap_or_default();
        Self { domain, lo, hi, lo_chords, hi_chords }
    }

    pub fn whole(domain: Arc<JordanDomain>) -> Self {
        Self::new(domain, None, None)
    }

    fn in_slab(&self, x: f64) -> bool {
        self.lo.is_none_or(|l| x >= l) && self.hi.is_none_or(|h| x <= h)
    }

    fn chord_distance(x: f64, chords: &[(f64, f64)], z: C64) -> f64 {
        chords
            .iter()
            .map(|&(y0, y1)| {
                let y = z.im.clamp(y0, y1);
                (z - C64::new(x, y)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn outside_distance(&self, z: C64, t: f64, sd: f64) -> f64 {
        let p = self.domain.curve().point(t);
        // the nearest arc point counts only if it lies in the slab; otherwise
        // the nearest point of the set is on one of the cut chords
        let mut d = if self.in_slab(p.re) && sd >= 0.0 { (z - p).norm() } else { f64::INFINITY };
        if let Some(x) = self.lo {
            d = d.min(Self::chord_distance(x, &self.lo_chords, z));
        }
        if let Some(x) = self.hi {
            d = d.min(Self::chord_distance(x, &self.hi_chords, z));
        }
        if d.is_infinite() {
            d = sd.max(0.0);
        }
        d
    }
}

impl Shape for Slab {
    fn distance(&self, z: C64) -> f64 {
        let (t, sd) = self.domain.closest(z);
        if sd <= 0.0 && self.in_slab(z.re) {
            return 0.0;
        }
        self.outside_distance(z, t, sd)
    }

    fn signed_distance(&self, z: C64) -> Option<f64> {
        let (t, sd) = self.domain.closest(z);
        if sd <= 0.0 && self.in_slab(z.re) {
            let mut depth = sd;
            if let Some(l) = self.lo {
                depth = depth.max(l - z.re);
            }
            if let Some(h) = self.hi {
                depth = depth.max(z.re - h);
            }
            Some(depth)
        } else {
            Some(self.outside_distance(z, t, sd))
        }
    }

    fn bbox(&self) -> BBox {
        let mut b = self.domain.bbox();
        if let Some(l) = self.lo {
            b.xmin = b.xmin.max(l);
        }
        if let Some(h) = self.hi {
            b.xmax = b.xmax.min(h);
        }
        b
    }
}

/// The boundary curve of a domain as a compact set.
#[derive(Debug, Clone)]
pub struct Boundary(pub Arc<JordanDomain>);

impl Shape for Boundary {
    fn distance(&self, z: C64) -> f64 {
        self.0.signed_distance(z).abs()
    }
    fn contains(&self, z: C64) -> bool {
        self.distance(z) <= 1e-12
    }
    fn bbox(&self) -> BBox {
        self.0.bbox()
    }
}

/// Open `r`-neighbourhood of a set; `r < 0` erodes via the signed distance.
#[derive(Debug, Clone)]
pub struct Dilated {
    pub inner: Arc<dyn Shape>,
    pub r: f64,
}

impl Shape for Dilated {
    fn distance(&self, z: C64) -> f64 {
        if self.r >= 0.0 {
            (self.inner.distance(z) - self.r).max(0.0)
        } else {
            self.signed_distance(z).map(|s| s.max(0.0)).unwrap_or(f64::INFINITY)
        }
    }
    fn contains(&self, z: C64) -> bool {
        if self.r > 0.0 {
            self.inner.distance(z) < self.r
        } else {
            self.inner.signed_distance(z).is_some_and(|s| s < self.r)
        }
    }
    fn signed_distance(&self, z: C64) -> Option<f64> {
        self.inner.signed_distance(z).map(|s| s - self.r)
    }
    fn bbox(&self) -> BBox {
        self.inner.bbox().expand(self.r.max(0.0))
    }
}

/// Set known only through a finite sample.
#[derive(Debug, Clone)]
pub struct Sampled(pub Vec<C64>);

impl Shape for Sampled {
    fn distance(&self, z: C64) -> f64 {
        PointSet(self.0.clone()).distance(z)
    }
    fn contains(&self, z: C64) -> bool {
        self.0.iter().any(|p| (p - z).norm() <= 1e-12)
    }
    fn bbox(&self) -> BBox {
        PointSet(self.0.clone()).bbox()
    }
}

/// A planar region with its lattice sample.
#[derive(Debug, Clone)]
pub struct Region {
    shape: Arc<dyn Shape>,
    samples: Arc<Vec<C64>>,
    spacing: f64,
}

impl Region {
    /// Samples every point of the global `h`-lattice inside the shape.
    pub fn new(shape: Arc<dyn Shape>, h: f64) -> Self {
        let lat = Lattice::covering(&shape.bbox(), h);
        let samples: Vec<C64> = (0..lat.len())
            .into_par_iter()
            .map(|k| lat.point_at(k))
            .filter(|z| shape.contains(*z))
            .collect();
        Self { shape, samples: Arc::new(samples), spacing: h }
    }

    /// Region with an explicit sample (e.g. boundary points of a curve).
    pub fn with_samples(shape: Arc<dyn Shape>, samples: Vec<C64>, h: f64) -> Self {
        Self { shape, samples: Arc::new(samples), spacing: h }
    }

    pub fn points(points: Vec<C64>) -> Self {
        let shape: Arc<dyn Shape> = Arc::new(PointSet(points.clone()));
        Self::with_samples(shape, points, 0.0)
    }

    pub fn shape(&self) -> &Arc<dyn Shape> {
        &self.shape
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn contains(&self, z: C64) -> bool {
        self.shape.contains(z)
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.shape.distance(z)
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.samples.iter()).unwrap_or_else(|| self.shape.bbox())
    }

    /// Same set, resampled at spacing `h`.
    pub fn resampled(&self, h: f64) -> Self {
        Self::new(self.shape.clone(), h)
    }

    /// Closed contour of a set that is star-shaped about `center`, found by
    /// bisection along `n` rays.
    pub fn star_contour(&self, center: C64, n: usize) -> Result<Vec<C64>> {
        if !self.contains(center) {
            return Err(Error::InvalidInput("contour center outside region".into()));
        }
        let reach = self.shape.bbox().diameter() + 1.0;
        Ok((0..n)
            .map(|k| {
                let dir = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64);
                let (mut lo, mut hi) = (0.0, reach);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.contains(center + dir * mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                center + dir * (0.5 * (lo + hi))
            })
            .collect())
    }
}

/// Open `r`-neighbourhood `M(r)` of a region, resampled at the region's spacing.
pub fn dilate(region: &Region, r: f64) -> Result<Region> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("dilation radius {r} must be positive")));
    }
    Ok(offset(region, r))
}

/// Dilation for `r > 0`, erosion for `r < 0` (needs a signed distance), identity for 0.
pub fn offset(region: &Region, r: f64) -> Region {
    if r == 0.0 {
        return region.clone();
    }
    let shape: Arc<dyn Shape> = Arc::new(Dilated { inner: region.shape.clone(), r });
    let h = if region.spacing > 0.0 { region.spacing } else { r.abs() / 4.0 };
    Region::new(shape, h)
}

/// Hausdorff distance between the sample sets of two regions.
pub fn hausdorff_distance(k1: &Region, k2: &Region) -> Result<f64> {
    hausdorff_samples(k1.samples(), k2.samples())
}

pub fn hausdorff_samples(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Hausdorff distance of an empty sample set".into()));
    }
    let ia = PointIndex::new(a.to_vec());
    let ib = PointIndex::new(b.to_vec());
    let d1 = a.par_iter().map(|p| ib.nearest(*p).1).reduce(|| 0.0, f64::max);
    let d2 = b.par_iter().map(|p| ia.nearest(*p).1).reduce(|| 0.0, f64::max);
    Ok(d1.max(d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_disc() -> Arc<JordanDomain> {
        Arc::new(JordanDomain::disc(1.0, c(0.0, 0.0), 256).unwrap())
    }

    #[test]
    fn dilate_point_gives_open_disc() {
        let r = dilate(&Region::points(vec![c(0.0, 0.0)]), 1.0).unwrap();
        assert!(r.contains(c(0.5, 0.0)));
        assert!(!r.contains(c(1.5, 0.0)));
        assert!(dilate(&Region::points(vec![c(0.0, 0.0)]), 0.0).is_err());
        assert!(dilate(&Region::points(vec![c(0.0, 0.0)]), -1.0).is_err());
    }

    #[test]
    fn dilated_circle_is_annulus() {
        let b = Region::new(Arc::new(Boundary(unit_disc())), 0.05);
        let ann = dilate(&b, 0.1).unwrap();
        assert!(ann.contains(c(1.0, 0.0)));
        assert!(ann.contains(c(0.0, 1.05)));
        assert!(!ann.contains(c(0.5, 0.0)));
        assert!(!ann.contains(c(0.0, 0.0)));
        assert!(ann.samples().iter().all(|z| (z.norm() - 1.0).abs() < 0.1));
    }

    #[test]
    fn ellipse_dilation_against_dense_boundary() {
        let e = Arc::new(JordanDomain::ellipse(2.0, 1.0, c(0.0, 0.0), 512).unwrap());
        let r = dilate(&Region::new(Arc::new(Slab::whole(e)), 0.05), 0.3).unwrap();
        let z = c(2.2, 0.0);
        let oracle = (0..100_000)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 100_000.0;
                (c(2.0 * t.cos(), t.sin()) - z).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(oracle < 0.3);
        assert!(r.contains(z));
    }

    #[test]
    fn hausdorff_basic_cases() {
        let d = Arc::new(Slab::whole(unit_disc()));
        let k = Region::new(d.clone(), 0.05);
        assert_eq!(hausdorff_distance(&k, &k).unwrap(), 0.0);
        let shifted: Vec<C64> = k.samples().iter().map(|z| z + 0.5).collect();
        let hd = hausdorff_samples(k.samples(), &shifted).unwrap();
        assert!((hd - 0.5).abs() < 0.05, "{hd}");
        assert!(hausdorff_samples(&[], &shifted).is_err());
    }

    #[test]
    fn hausdorff_matches_brute_force_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let a: Vec<C64> = (0..20).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let b: Vec<C64> = (0..20).map(|_| c(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..1.0))).collect();
            let directed = |x: &[C64], y: &[C64]| {
                x.iter()
                    .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max)
            };
            let brute = directed(&a, &b).max(directed(&b, &a));
            assert!((hausdorff_samples(&a, &b).unwrap() - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn slab_distance_matches_brute_force() {
        let e = Arc::new(JordanDomain::ellipse(2.0, 1.0, c(0.0, 0.0), 512).unwrap());
        let slab = Slab::new(e, Some(-0.3), Some(0.3));
        // brute force over a dense sample of the closed slab set
        let mut pts = Vec::new();
        let n = 600;
        for i in 0..=n {
            for j in 0..=n {
                let z = c(-0.3 + 0.6 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
                if z.re * z.re / 4.0 + z.im * z.im <= 1.0 {
                    pts.push(z);
                }
            }
        }
        for z in [c(1.0, 0.2), c(0.0, 1.5), c(-0.9, -1.3), c(0.31, 0.0)] {
            let brute = PointSet(pts.clone()).distance(z);
            assert!((slab.distance(z) - brute).abs() < 4e-3, "{z}: {} vs {}", slab.distance(z), brute);
        }
        assert_eq!(slab.distance(c(0.1, 0.1)), 0.0);
    }
}
