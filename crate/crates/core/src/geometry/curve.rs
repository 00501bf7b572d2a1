//! Smooth closed boundary curves and the domains they bound.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::index::PointIndex;
use crate::error::{Error, Result};
use crate::lattice::BBox;

/// A periodic C² parameterization `t ↦ z(t)`, `t ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Ellipse { a: f64, b: f64, center: C64 },
    /// `z(t) = center + Σ c_k e^{2πikt}` over the listed `(k, c_k)` modes.
    Fourier { modes: Vec<(i32, C64)>, center: C64 },
}

impl Curve {
    pub fn point(&self, t: f64) -> C64 {
        match self {
            Curve::Ellipse { a, b, center } => {
                let th = TAU * t;
                center + C64::new(a * th.cos(), b * th.sin())
            }
            Curve::Fourier { modes, center } => {
                modes.iter().fold(*center, |acc, (k, c)| {
                    acc + c * C64::from_polar(1.0, TAU * (*k as f64) * t)
                })
            }
        }
    }

    pub fn d1(&self, t: f64) -> C64 {
        match self {
            Curve::Ellipse { a, b, .. } => {
                let th = TAU * t;
                C64::new(-a * th.sin(), b * th.cos()) * TAU
            }
            Curve::Fourier { modes, .. } => modes.iter().fold(C64::new(0.0, 0.0), |acc, (k, c)| {
                let w = TAU * (*k as f64);
                acc + c * C64::new(0.0, w) * C64::from_polar(1.0, w * t)
            }),
        }
    }

    pub fn d2(&self, t: f64) -> C64 {
        match self {
            Curve::Ellipse { a, b, .. } => {
                let th = TAU * t;
                C64::new(-a * th.cos(), -b * th.sin()) * (TAU * TAU)
            }
            Curve::Fourier { modes, .. } => modes.iter().fold(C64::new(0.0, 0.0), |acc, (k, c)| {
                let w = TAU * (*k as f64);
                acc - c * (w * w) * C64::from_polar(1.0, w * t)
            }),
        }
    }

    /// Signed curvature (positive for a counterclockwise convex arc).
    pub fn curvature(&self, t: f64) -> f64 {
        let d1 = self.d1(t);
        let d2 = self.d2(t);
        (d1.re * d2.im - d1.im * d2.re) / d1.norm().powi(3)
    }

    pub fn translated(&self, v: C64) -> Curve {
        match self {
            Curve::Ellipse { a, b, center } => Curve::Ellipse { a: *a, b: *b, center: center + v },
            Curve::Fourier { modes, center } => Curve::Fourier { modes: modes.clone(), center: center + v },
        }
    }
}

/// A bounded domain with smooth, positively oriented Jordan boundary.
#[derive(Debug, Clone)]
pub struct JordanDomain {
    curve: Curve,
    polyline: Vec<C64>,
    index: PointIndex,
    bbox: BBox,
    centroid: C64,
    min_radius_of_curvature: f64,
    convex: bool,
}

impl JordanDomain {
    pub fn new(curve: Curve, resolution: usize) -> Result<Self> {
        if resolution < 16 {
            return Err(Error::InvalidParameter(format!(
                "boundary resolution {resolution} below 16"
            )));
        }
        if let Curve::Ellipse { a, b, .. } = &curve {
            if !(*a > 0.0 && *b > 0.0) {
                return Err(Error::InvalidParameter("ellipse semi-axes must be positive".into()));
            }
        }
        let polyline: Vec<C64> =
            (0..resolution).map(|k| curve.point(k as f64 / resolution as f64)).collect();
        let area2 = shoelace2(&polyline);
        if area2 <= 0.0 {
            return Err(Error::GeometryInfeasible(
                "boundary must be positively oriented with nonzero area".into(),
            ));
        }
        if has_self_intersection(&polyline) {
            return Err(Error::GeometryInfeasible("boundary polyline self-intersects".into()));
        }
        let centroid = polygon_centroid(&polyline, area2);
        let mut min_roc = f64::INFINITY;
        let mut convex = true;
        for k in 0..resolution {
            let kappa = curve.curvature(k as f64 / resolution as f64);
            if kappa < -1e-12 {
                convex = false;
            }
            if kappa.abs() > 0.0 {
                min_roc = min_roc.min(1.0 / kappa.abs());
            }
        }
        let bbox = BBox::of_points(&polyline).expect("nonempty polyline");
        let index = PointIndex::new(polyline.clone());
        let dom = Self {
            curve,
            polyline,
            index,
            bbox,
            centroid,
            min_radius_of_curvature: min_roc,
            convex,
        };
        if dom.winding_number(dom.centroid) != 1 {
            return Err(Error::GeometryInfeasible("centroid is not enclosed by the boundary".into()));
        }
        Ok(dom)
    }

    pub fn ellipse(a: f64, b: f64, center: C64, resolution: usize) -> Result<Self> {
        Self::new(Curve::Ellipse { a, b, center }, resolution)
    }

    pub fn disc(radius: f64, center: C64, resolution: usize) -> Result<Self> {
        Self::ellipse(radius, radius, center, resolution)
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn polyline(&self) -> &[C64] {
        &self.polyline
    }

    pub fn resolution(&self) -> usize {
        self.polyline.len()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn centroid(&self) -> C64 {
        self.centroid
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    /// Reach estimated from the boundary curvature alone.
    pub fn reach_estimate(&self) -> f64 {
        self.min_radius_of_curvature
    }

    pub fn translated(&self, v: C64) -> Result<Self> {
        Self::new(self.curve.translated(v), self.resolution())
    }

    /// Largest distance between two boundary points (polyline resolution).
    pub fn diameter(&self) -> f64 {
        let p = &self.polyline;
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for q in &p[i + 1..] {
                d = d.max((p[i] - q).norm());
            }
        }
        d
    }

    /// Winding number of the boundary polyline around `z`.
    pub fn winding_number(&self, z: C64) -> i32 {
        polyline_winding(&self.polyline, z)
    }

    pub fn contains(&self, z: C64) -> bool {
        self.signed_distance(z) < 0.0
    }

    /// Nearest boundary parameter, refined by Newton on the smooth curve.
    pub fn nearest_parameter(&self, z: C64) -> f64 {
        let n = self.polyline.len();
        let (k, _) = self.index.nearest(z);
        let mut t = k as f64 / n as f64;
        let dt = 1.0 / n as f64;
        for _ in 0..30 {
            let p = self.curve.point(t);
            let d1 = self.curve.d1(t);
            let d2 = self.curve.d2(t);
            let diff = p - z;
            let g = diff.re * d1.re + diff.im * d1.im;
            let hss = d1.norm_sqr() + diff.re * d2.re + diff.im * d2.im;
            if hss <= 0.0 {
                break;
            }
            let step = (g / hss).clamp(-dt, dt);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        t.rem_euclid(1.0)
    }

    /// Distance to the boundary, negative inside.
    pub fn signed_distance(&self, z: C64) -> f64 {
        self.closest(z).1
    }

    /// Nearest boundary parameter together with the signed distance.
    pub fn closest(&self, z: C64) -> (f64, f64) {
        let t = self.nearest_parameter(z);
        let p = self.curve.point(t);
        let d = (z - p).norm();
        let tangent = self.curve.d1(t);
        // outward normal of a counterclockwise curve is tangent · (−i)
        let outward = tangent * C64::new(0.0, -1.0);
        let s = (z - p).re * outward.re + (z - p).im * outward.im;
        let sd = if d < 1e-300 {
            0.0
        } else if s.abs() > 1e-9 * d {
            d.copysign(s)
        } else if self.winding_number(z) != 0 {
            -d
        } else {
            d
        };
        (t, sd)
    }

    /// Sorted crossings of the boundary with the vertical line `Re z = x`,
    /// paired into the chord intervals `[y_lo, y_hi]` inside the closure.
    pub fn vertical_chords(&self, x: f64) -> Vec<(f64, f64)> {
        let n = self.polyline.len();
        let mut ys = Vec::new();
        for k in 0..n {
            let (p, q) = (self.polyline[k], self.polyline[(k + 1) % n]);
            if (p.re - x) * (q.re - x) <= 0.0 && p.re != q.re {
                // refine on the smooth curve by bisection in t
                let (mut ta, mut tb) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
                let fa = self.curve.point(ta).re - x;
                for _ in 0..60 {
                    let tm = 0.5 * (ta + tb);
                    let fm = self.curve.point(tm).re - x;
                    if (fm < 0.0) == (fa < 0.0) {
                        ta = tm;
                    } else {
                        tb = tm;
                    }
                }
                ys.push(self.curve.point(0.5 * (ta + tb)).im);
            }
        }
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ys.chunks_exact(2).map(|c| (c[0], c[1])).collect()
    }
}

fn shoelace2(p: &[C64]) -> f64 {
    let n = p.len();
    (0..n).map(|k| p[k].re * p[(k + 1) % n].im - p[(k + 1) % n].re * p[k].im).sum()
}

fn polygon_centroid(p: &[C64], area2: f64) -> C64 {
    let n = p.len();
    let mut c = C64::new(0.0, 0.0);
    for k in 0..n {
        let (a, b) = (p[k], p[(k + 1) % n]);
        let cross = a.re * b.im - b.re * a.im;
        c += (a + b) * cross;
    }
    c / (3.0 * area2)
}

/// Crossing-number winding count of a closed polyline around `z`.
pub fn polyline_winding(poly: &[C64], z: C64) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let cross = (b.re - a.re) * (z.im - a.im) - (z.re - a.re) * (b.im - a.im);
        if a.im <= z.im {
            if b.im > z.im && cross > 0.0 {
                w += 1;
            }
        } else if b.im <= z.im && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let orient = |p: C64, q: C64, r: C64| (q.re - p.re) * (r.im - p.im) - (q.im - p.im) * (r.re - p.re);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn has_self_intersection(p: &[C64]) -> bool {
    let n = p.len();
    // sweep over x-sorted segments keeps this near-linear for smooth curves
    let mut segs: Vec<(f64, f64, usize)> = (0..n)
        .map(|k| {
            let (a, b) = (p[k], p[(k + 1) % n]);
            (a.re.min(b.re), a.re.max(b.re), k)
        })
        .collect();
    segs.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (idx, &(_, hi, k)) in segs.iter().enumerate() {
        for &(lo2, _, l) in &segs[idx + 1..] {
            if lo2 > hi {
                break;
            }
            let adjacent = (k + 1) % n == l || (l + 1) % n == k || k == l;
            if !adjacent && segments_cross(p[k], p[(k + 1) % n], p[l], p[(l + 1) % n]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unit_disc_signed_distance() {
        let d = JordanDomain::disc(1.0, c(0.0, 0.0), 256).unwrap();
        assert!((d.signed_distance(c(0.5, 0.0)) + 0.5).abs() < 1e-12);
        assert!((d.signed_distance(c(2.0, 0.0)) - 1.0).abs() < 1e-12);
        assert_eq!(d.winding_number(d.centroid()), 1);
    }

    #[test]
    fn ellipse_center_distance_matches_dense_sampling() {
        let d = JordanDomain::ellipse(2.0, 1.0, c(0.0, 0.0), 512).unwrap();
        let oracle = (0..200_000)
            .map(|k| {
                let t = TAU * k as f64 / 200_000.0;
                c(2.0 * t.cos(), t.sin()).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((d.signed_distance(c(0.0, 0.0)) + oracle).abs() < 1e-9);
        assert!((oracle - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clockwise_and_self_intersecting_curves_are_rejected() {
        let cw = Curve::Ellipse { a: 1.0, b: -1.0, center: c(0.0, 0.0) };
        assert!(JordanDomain::new(cw, 64).is_err());
        // figure-eight (lemniscate-like) curve
        let eight = Curve::Fourier { modes: vec![(1, c(1.0, 0.0)), (2, c(0.0, 0.0)), (-1, c(0.0, 0.0)), (3, c(0.9, 0.0))], center: c(0.0, 0.0) };
        assert!(JordanDomain::new(eight, 256).is_err());
    }

    #[test]
    fn chords_of_unit_disc() {
        let d = JordanDomain::disc(1.0, c(0.0, 0.0), 256).unwrap();
        let ch = d.vertical_chords(0.6);
        assert_eq!(ch.len(), 1);
        assert!((ch[0].0 + 0.8).abs() < 1e-12 && (ch[0].1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn reach_of_ellipse_is_min_radius_of_curvature() {
        let d = JordanDomain::ellipse(2.0, 1.0, c(0.0, 0.0), 1024).unwrap();
        assert!((d.reach_estimate() - 0.5).abs() < 1e-6);
        assert!(d.is_convex());
    }
}
