//! Planar geometry: domains, regions and their dilations, defining
//! functions, the C² metric, and strip Cartan pairs.

pub mod curve;
pub mod defining;
mod index;
pub mod pair;
pub mod region;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub use curve::{Curve, JordanDomain};
pub use defining::{build_defining_function, DefiningFunction, Profile, ScalarField};
pub use index::PointIndex;
pub use pair::{make_cartan_pair, CartanPair, PairSet};
pub use region::{dilate, hausdorff_distance, Region, Shape};

use crate::error::{Error, Result};
use crate::lattice::{BBox, Lattice};

/// Signed distance to the boundary of `domain`, negative inside.
pub fn signed_distance(domain: &JordanDomain, z: C64) -> f64 {
    domain.signed_distance(z)
}

/// Grid spacing and difference step used by [`c2_metric`].
pub const C2_GRID: f64 = 0.05;
pub const C2_STEP: f64 = 1e-4;

/// `Σ_{j=1}^{J} 2^{−j}·n_j/(n_j + 1)` with `n_j` the C² norm of `r₂ − r₁` on
/// the closed ball of radius `j` about the origin.
pub fn c2_metric(r1: &dyn ScalarField, r2: &dyn ScalarField, j_max: u32) -> Result<f64> {
    if j_max == 0 {
        return Err(Error::InvalidParameter("J must be positive".into()));
    }
    let jf = j_max as f64;
    let ball_box = BBox::new(-jf, jf, -jf, jf);
    let (grid_box, far) = match (r1.far_field(), r2.far_field()) {
        (Some((b1, c1)), Some((b2, c2))) => {
            let b = b1.union(&b2).expand(2.0 * C2_GRID);
            let clipped = BBox::new(
                b.xmin.max(-jf),
                b.xmax.min(jf),
                b.ymin.max(-jf),
                b.ymax.min(jf),
            );
            (clipped, Some((b, (c2 - c1).abs())))
        }
        _ => (ball_box, None),
    };
    let diff = |z: C64| r2.value(z) - r1.value(z);
    let s = C2_STEP;
    let lat = Lattice::covering(&grid_box, C2_GRID);
    let mut local: Vec<(f64, f64)> = (0..lat.len())
        .into_par_iter()
        .filter_map(|k| {
            let z = lat.point_at(k);
            let rad = z.norm();
            if rad > jf {
                return None;
            }
            let f = |dx: f64, dy: f64| diff(z + C64::new(dx, dy));
            let f0 = f(0.0, 0.0);
            let (fe, fw, fn_, fs) = (f(s, 0.0), f(-s, 0.0), f(0.0, s), f(0.0, -s));
            let fxy = (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4.0 * s * s);
            let n = [
                f0,
                (fe - fw) / (2.0 * s),
                (fn_ - fs) / (2.0 * s),
                (fe - 2.0 * f0 + fw) / (s * s),
                (fn_ - 2.0 * f0 + fs) / (s * s),
                fxy,
            ]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
            Some((rad, n))
        })
        .collect();
    local.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut norm: f64 = 0.0;
    let mut idx = 0;
    for j in 1..=j_max {
        let r = j as f64;
        while idx < local.len() && local[idx].0 <= r {
            norm = norm.max(local[idx].1);
            idx += 1;
        }
        let mut nj = norm;
        if let Some((b, c)) = far {
            // the ball reaches outside the box where the difference is constant
            if r > b.xmax.min(-b.xmin).min(b.ymax).min(-b.ymin) {
                nj = nj.max(c);
            }
        }
        total += 0.5f64.powi(j as i32) * nj / (nj + 1.0);
    }
    Ok(total)
}
