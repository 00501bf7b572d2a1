//! Near-identity holomorphic maps: evaluation, norms, composition, Lipschitz
//! and injectivity certificates, inversion, and degree counts.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::region::{offset, Region};
use crate::lattice::{Lattice, LatticeField};

/// Residual an inverse must reach to count as converged, and the step cap.
pub const INVERSE_TOL: f64 = 1e-13;
pub const INVERSE_MAX_ITER: usize = 200;

/// Injectivity constant for `‖c‖_{D(r)} ≤ K·r`.
pub const K_INJECTIVE: f64 = 0.25;
/// Cauchy-estimate constant in one variable.
pub const CONST_1: f64 = 1.0;

type MapFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum Repr {
    /// `Σ coeffs[k]·z^k`.
    Polynomial(Vec<C64>),
    /// `z + field(z)` with the field interpolated from lattice values.
    Displacement(Arc<LatticeField>),
    Function(MapFn),
    /// Applied left to right: `maps[n-1] ∘ … ∘ maps[0]`.
    Composite(Vec<HoloMap>),
    /// Fixed-point inverse of a near-identity map.
    Inverse(HoloMap),
}

impl Repr {
    pub fn tag(&self) -> &'static str {
        match self {
            Repr::Polynomial(_) => "polynomial",
            Repr::Displacement(_) => "lattice",
            Repr::Function(_) => "function",
            Repr::Composite(_) => "composite",
            Repr::Inverse(_) => "inverse",
        }
    }
}

struct Inner {
    repr: Repr,
    domain: Region,
    deviation: OnceLock<f64>,
}

/// A map on a sampled region; `sup |f − Id|` over the samples is computed on first use.
#[derive(Clone)]
pub struct HoloMap {
    inner: Arc<Inner>,
}

impl fmt::Debug for HoloMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HoloMap")
            .field("repr", &self.inner.repr.tag())
            .field("samples", &self.inner.domain.samples().len())
            .finish()
    }
}

impl HoloMap {
    pub fn new(repr: Repr, domain: Region) -> Self {
        Self { inner: Arc::new(Inner { repr, domain, deviation: OnceLock::new() }) }
    }

    pub fn identity(domain: Region) -> Self {
        Self::polynomial(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], domain)
    }

    pub fn polynomial(coeffs: Vec<C64>, domain: Region) -> Self {
        Self::new(Repr::Polynomial(coeffs), domain)
    }

    pub fn displacement(field: Arc<LatticeField>, domain: Region) -> Self {
        Self::new(Repr::Displacement(field), domain)
    }

    pub fn from_fn(f: impl Fn(C64) -> C64 + Send + Sync + 'static, domain: Region) -> Self {
        Self::new(Repr::Function(Arc::new(f)), domain)
    }

    /// Same map on another region.
    pub fn restricted(&self, domain: Region) -> Self {
        Self::new(self.inner.repr.clone(), domain)
    }

    pub fn repr(&self) -> &Repr {
        &self.inner.repr
    }

    pub fn domain(&self) -> &Region {
        &self.inner.domain
    }

    /// `sup |f − Id|` over the domain samples.
    pub fn deviation(&self) -> f64 {
        *self.inner.deviation.get_or_init(|| {
            self.inner
                .domain
                .samples()
                .par_iter()
                .map(|z| (self.eval(*z) - z).norm())
                .reduce(|| 0.0, f64::max)
        })
    }

    pub fn degree(&self) -> Option<usize> {
        match &self.inner.repr {
            Repr::Polynomial(c) => Some(c.len().saturating_sub(1)),
            _ => None,
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        match &self.inner.repr {
            Repr::Polynomial(c) => c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a),
            Repr::Displacement(field) => z + field.interpolate(z),
            Repr::Function(f) => f(z),
            Repr::Composite(maps) => maps.iter().fold(z, |w, m| m.eval(w)),
            Repr::Inverse(map) => fixed_point_inverse(map, z).0,
        }
    }

    /// Like [`eval`](Self::eval) but reports non-convergence of inverses.
    pub fn try_eval(&self, z: C64) -> Result<C64> {
        match &self.inner.repr {
            Repr::Inverse(map) => {
                let (w, res) = fixed_point_inverse(map, z);
                if res > INVERSE_TOL || !res.is_finite() {
                    return Err(Error::NumericalFailure {
                        reason: format!("fixed-point inverse did not converge at {z}"),
                        residual: res,
                    });
                }
                Ok(w)
            }
            Repr::Composite(maps) => maps.iter().try_fold(z, |w, m| m.try_eval(w)),
            _ => Ok(self.eval(z)),
        }
    }

    pub fn values(&self, pts: &[C64]) -> Vec<C64> {
        pts.par_iter().map(|z| self.eval(*z)).collect()
    }
}

/// Solves `F(w) = y` for `F` near the identity by `w ← w − (F(w) − y)`.
/// Iterates down to rounding level or until the residual stops shrinking;
/// returns the best `(w, |F(w) − y|)`.
pub fn fixed_point_solve(f: impl Fn(C64) -> C64, y: C64) -> (C64, f64) {
    let floor = 4.0 * f64::EPSILON * (1.0 + y.norm());
    let mut w = y;
    let mut best = (y, f64::INFINITY);
    for _ in 0..INVERSE_MAX_ITER {
        let r = f(w) - y;
        let res = r.norm();
        if !res.is_finite() {
            return (w, res);
        }
        if res >= best.1 {
            break;
        }
        best = (w, res);
        if res <= floor {
            break;
        }
        w -= r;
    }
    best
}

fn fixed_point_inverse(map: &HoloMap, z: C64) -> (C64, f64) {
    fixed_point_solve(|w| map.eval(w), z)
}

/// `max |f|` over a nonempty sample.
pub fn sup_norm(values: &[C64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sup norm over an empty sample".into()));
    }
    Ok(values.iter().fold(0.0, |m, v| m.max(v.norm())))
}

/// `max |f(z)|` over the samples of `region`.
pub fn sup_norm_on(f: impl Fn(C64) -> C64 + Sync, region: &Region) -> Result<f64> {
    if region.samples().is_empty() {
        return Err(Error::InvalidInput("sup norm over an empty region".into()));
    }
    Ok(region.samples().par_iter().map(|z| f(*z).norm()).reduce(|| 0.0, f64::max))
}

fn domain_violation(bad: Vec<C64>) -> Error {
    Error::DomainViolation { count: bad.len(), first: format!("{}", bad[0]) }
}

/// `g ∘ f` on `domain`, after checking `f(domain) ⊂ dom(g)` on the samples.
pub fn compose(g: &HoloMap, f: &HoloMap, domain: Region) -> Result<HoloMap> {
    let bad: Vec<C64> = domain
        .samples()
        .par_iter()
        .map(|z| f.eval(*z))
        .filter(|w| !g.domain().contains(*w))
        .collect();
    if !bad.is_empty() {
        return Err(domain_violation(bad));
    }
    let mut maps = match f.repr() {
        Repr::Composite(m) => m.clone(),
        _ => vec![f.clone()],
    };
    match g.repr() {
        Repr::Composite(m) => maps.extend(m.iter().cloned()),
        _ => maps.push(g.clone()),
    }
    Ok(HoloMap::new(Repr::Composite(maps), domain))
}

/// Cauchy-estimate Lipschitz bound `(‖F‖_V/d)·|y − x|` and whether it holds.
pub fn lipschitz_bound(f: &HoloMap, v: &Region, d: f64, x: C64, y: C64) -> Result<(f64, bool)> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter("Lipschitz radius d must be positive".into()));
    }
    // the closed d-tube around [x, y] must lie in V: check the segment and circles around it
    let len = (y - x).norm();
    let step = if v.spacing() > 0.0 { v.spacing() } else { d / 8.0 };
    let n_seg = ((len / step).ceil() as usize).max(1);
    let n_ang = 64;
    for k in 0..=n_seg {
        let p = x + (y - x) * (k as f64 / n_seg as f64);
        for j in 0..n_ang {
            let q = p + C64::from_polar(d * (1.0 - 1e-12), TAU * j as f64 / n_ang as f64);
            if !v.contains(q) || !v.contains(p) {
                return Err(Error::PreconditionViolation(format!(
                    "d-tube around the segment leaves V near {q}"
                )));
            }
        }
    }
    let norm = sup_norm_on(|z| f.eval(z), v)?;
    let bound = CONST_1 * norm / d * len;
    Ok((bound, (f.eval(y) - f.eval(x)).norm() <= bound))
}

/// Certifies injectivity of `Id + c` on `D` when `‖c‖_{D(r)} ≤ r/4`.
pub fn injectivity_margin(c: &HoloMap, d: &Region, r: f64) -> Result<(bool, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("injectivity radius must be positive".into()));
    }
    let tube = offset(d, r);
    let bad: Vec<C64> =
        tube.samples().iter().copied().filter(|z| !c.domain().contains(*z)).collect();
    if !bad.is_empty() {
        return Err(domain_violation(bad));
    }
    let norm = sup_norm_on(|z| c.eval(z), &tube)?;
    Ok((norm <= K_INJECTIVE * r, K_INJECTIVE))
}

/// Inverse of `Φ` on `D(δ − ε)`, given `‖Φ − Id‖_{D(δ)} < ε < δ`.
pub fn invert_near_identity(phi: &HoloMap, d: &Region, delta: f64, eps: f64) -> Result<HoloMap> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter("δ and ε must be positive".into()));
    }
    if eps >= delta {
        return Err(Error::InvalidParameter(format!("need ε < δ (got ε={eps}, δ={delta})")));
    }
    let big = offset(d, delta);
    let dev = sup_norm_on(|z| phi.eval(z) - z, &big)?;
    if dev >= eps {
        return Err(Error::PreconditionViolation(format!(
            "‖Φ − Id‖ = {dev} on D(δ) is not below ε = {eps}"
        )));
    }
    let target = offset(d, delta - eps);
    let psi = HoloMap::new(Repr::Inverse(phi.clone()), target.clone());
    let worst = target
        .samples()
        .par_iter()
        .map(|w| match psi.try_eval(*w) {
            Ok(z) => (phi.eval(z) - w).norm(),
            Err(_) => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max);
    if !(worst <= INVERSE_TOL) {
        return Err(Error::NumericalFailure {
            reason: "fixed-point inversion failed on the guaranteed domain".into(),
            residual: worst,
        });
    }
    Ok(psi)
}

/// Winding number of `t ↦ Φ(contour(t)) − w` around 0, refining segments
/// whose argument jumps by more than π/2.
pub fn preimage_count(phi: &dyn Fn(C64) -> C64, contour: &[C64], w: C64) -> Result<i32> {
    if contour.len() < 3 {
        return Err(Error::InvalidInput("contour needs at least three points".into()));
    }
    let val = |z: C64| -> Result<C64> {
        let v = phi(z) - w;
        if v.norm() < 1e-10 {
            return Err(Error::IllConditionedContour(v.norm()));
        }
        Ok(v)
    };
    let n = contour.len();
    let mut total = 0.0;
    for k in 0..n {
        let (p, q) = (contour[k], contour[(k + 1) % n]);
        total += arg_change(&val, p, q, val(p)?, val(q)?, 0)?;
    }
    Ok((total / TAU).round() as i32)
}

fn arg_change(
    val: &dyn Fn(C64) -> Result<C64>,
    p: C64,
    q: C64,
    fp: C64,
    fq: C64,
    depth: u32,
) -> Result<f64> {
    let d = (fq / fp).arg();
    if d.abs() <= FRAC_PI_2 || depth >= 30 {
        return Ok(d);
    }
    let m = 0.5 * (p + q);
    let fm = val(m)?;
    Ok(arg_change(val, p, m, fp, fm, depth + 1)? + arg_change(val, m, q, fm, fq, depth + 1)?)
}

/// Pointwise `½(∂_x + i∂_y) f` at the sample points with all stencil
/// neighbours present. The stencil is the Richardson combination
/// `(4·D_h − D_{2h})/3` of central differences: O(h²) for C³ data and exact
/// up to rounding on polynomials in z of degree ≤ 6.
pub fn dbar_samples(points: &[C64], values: &[C64], h: f64) -> Result<Vec<(C64, C64)>> {
    if points.len() != values.len() {
        return Err(Error::InvalidInput("points and values differ in length".into()));
    }
    let map: HashMap<(i64, i64), C64> =
        points.iter().zip(values).map(|(p, v)| (Lattice::global_index(h, *p), *v)).collect();
    let get = |i: i64, j: i64| map.get(&(i, j)).copied();
    let dbar = |i: i64, j: i64, s: i64| -> Option<C64> {
        let dx = (get(i + s, j)? - get(i - s, j)?) / (2.0 * s as f64 * h);
        let dy = (get(i, j + s)? - get(i, j - s)?) / (2.0 * s as f64 * h);
        Some(0.5 * (dx + C64::new(0.0, 1.0) * dy))
    };
    let mut out: Vec<(C64, C64)> = points
        .iter()
        .filter_map(|p| {
            let (i, j) = Lattice::global_index(h, *p);
            let d1 = dbar(i, j, 1)?;
            let d2 = dbar(i, j, 2)?;
            Some((*p, (4.0 * d1 - d2) / 3.0))
        })
        .collect();
    out.sort_by(|a, b| (a.0.im, a.0.re).partial_cmp(&(b.0.im, b.0.re)).unwrap());
    if out.is_empty() {
        return Err(Error::InvalidGrid("no interior grid point".into()));
    }
    Ok(out)
}

/// `max |∂̄f|` over interior sample points, see [`dbar_samples`].
pub fn dbar_residual(points: &[C64], values: &[C64], h: f64) -> Result<f64> {
    Ok(dbar_samples(points, values, h)?.iter().fold(0.0, |m, (_, d)| m.max(d.norm())))
}

/// [`dbar_residual`] of a map over the samples of a lattice region.
pub fn dbar_residual_on(f: impl Fn(C64) -> C64 + Sync, region: &Region) -> Result<f64> {
    let pts = region.samples();
    let vals: Vec<C64> = pts.par_iter().map(|z| f(*z)).collect();
    dbar_residual(pts, &vals, region.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::region::{Disc, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn disc(r: f64, h: f64) -> Region {
        let s: Arc<dyn Shape> = Arc::new(Disc { center: c(0.0, 0.0), radius: r });
        Region::new(s, h)
    }

    fn open_disc(r: f64, h: f64) -> Region {
        offset(&Region::points(vec![c(0.0, 0.0)]), r).resampled(h)
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&[c(3.0, 4.0); 5]).unwrap(), 5.0);
        let d = disc(1.0, 1.0 / 64.0);
        let s = sup_norm(d.samples()).unwrap();
        assert!(s <= 1.0 && s > 0.99);
        assert!(sup_norm(&[]).is_err());
        // z² on the annulus 0.5 < |z| < 1, dense oracle
        let ann: Vec<C64> = d.samples().iter().copied().filter(|z| z.norm() > 0.5).collect();
        let v = sup_norm(&ann.iter().map(|z| z * z).collect::<Vec<_>>()).unwrap();
        assert!((v - 1.0).abs() < 0.02);
    }

    #[test]
    fn compose_examples() {
        let d = disc(1.0, 1.0 / 16.0);
        let big = disc(2.0, 1.0 / 16.0);
        let g = HoloMap::polynomial(vec![c(0.1, 0.0), c(1.0, 0.0)], big.clone());
        let f = HoloMap::polynomial(vec![c(0.2, 0.0), c(1.0, 0.0)], big.clone());
        let gf = compose(&g, &f, d.clone()).unwrap();
        for z in d.samples() {
            assert!((gf.eval(*z) - (z + 0.3)).norm() < 1e-15);
        }
        let id = HoloMap::identity(big.clone());
        let sq = HoloMap::from_fn(|z| z * z * 0.5, big.clone());
        let a = compose(&id, &sq, d.clone()).unwrap();
        let b = compose(&sq, &id, d.clone()).unwrap();
        for z in d.samples() {
            assert_eq!(a.eval(*z), z * z * 0.5);
            assert_eq!(b.eval(*z), z * z * 0.5);
        }
        let far = HoloMap::polynomial(vec![c(5.0, 0.0), c(1.0, 0.0)], big);
        assert!(matches!(compose(&g, &far, d), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn compose_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let big = disc(2.0, 0.1);
        let mid = disc(1.5, 0.1);
        let d = disc(1.0, 0.1);
        let mk = |rng: &mut ChaCha8Rng| {
            let a: Vec<C64> = (0..4).map(|_| c(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01))).collect();
            HoloMap::polynomial(vec![a[0], c(1.0, 0.0) + a[1], a[2], a[3]], big.clone())
        };
        for _ in 0..10 {
            let (f, g, h) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let left = compose(&h, &compose(&g, &f, mid.clone()).unwrap(), d.clone()).unwrap();
            let right = compose(&compose(&h, &g, mid.clone()).unwrap(), &f, d.clone()).unwrap();
            for z in d.samples() {
                assert!((left.eval(*z) - right.eval(*z)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn lipschitz_examples() {
        let v = open_disc(2.0, 1.0 / 64.0);
        let f = HoloMap::from_fn(|z| z * z, v.clone());
        let (bound, ok) = lipschitz_bound(&f, &v, 1.4, c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((bound - 4.0 / 1.4 * 0.5).abs() < 0.01, "{bound}");
        assert!(ok);
        let k = HoloMap::from_fn(|_| c(1.0, 2.0), v.clone());
        assert!(lipschitz_bound(&k, &v, 1.0, c(0.0, 0.0), c(0.5, 0.0)).unwrap().1);
        assert!(matches!(
            lipschitz_bound(&f, &v, 1.9, c(0.0, 0.0), c(0.5, 0.0)),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn lipschitz_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v = open_disc(2.0, 1.0 / 32.0);
        for _ in 0..100 {
            let deg = rng.gen_range(0..=5);
            let coeffs: Vec<C64> = (0..=deg).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f = HoloMap::polynomial(coeffs, v.clone());
            let d = rng.gen_range(0.1..1.0);
            let rmax = 2.0 - d - 0.05;
            let x = C64::from_polar(rng.gen_range(0.0..rmax), rng.gen_range(0.0..TAU));
            let y = C64::from_polar(rng.gen_range(0.0..rmax), rng.gen_range(0.0..TAU));
            let (_, ok) = lipschitz_bound(&f, &v, d, x, y).unwrap();
            assert!(ok);
        }
    }

    #[test]
    fn injectivity_examples() {
        let d = open_disc(1.0, 1.0 / 32.0);
        let everywhere = open_disc(3.0, 1.0 / 32.0);
        let zero = HoloMap::from_fn(|_| c(0.0, 0.0), everywhere.clone());
        assert_eq!(injectivity_margin(&zero, &d, 1.0).unwrap(), (true, 0.25));
        for (eps, expect) in [(0.1, true), (0.125, true), (0.13, false)] {
            let lin = HoloMap::from_fn(move |z| z * eps, everywhere.clone());
            assert_eq!(injectivity_margin(&lin, &d, 1.0).unwrap().0, expect, "{eps}");
        }
        let neg = HoloMap::from_fn(|z| -z, everywhere.clone());
        assert!(!injectivity_margin(&neg, &d, 1.0).unwrap().0);
        let small = HoloMap::from_fn(|_| c(0.0, 0.0), d.clone());
        assert!(matches!(injectivity_margin(&small, &d, 1.0), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn injectivity_certificate_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = open_disc(1.0, 0.02);
        let everywhere = open_disc(3.0, 0.05);
        for _ in 0..5 {
            let a: Vec<C64> = (0..3).map(|_| c(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05))).collect();
            let cmap = HoloMap::polynomial(vec![a[0], a[1], a[2]], everywhere.clone());
            if !injectivity_margin(&cmap, &d, 1.0).unwrap().0 {
                continue;
            }
            let imgs: Vec<C64> = d.samples().iter().map(|z| z + cmap.eval(*z)).collect();
            assert!(imgs.len() > 7000);
            let mut keys: Vec<(i64, i64)> =
                imgs.iter().map(|w| ((w.re * 1e9).round() as i64, (w.im * 1e9).round() as i64)).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), imgs.len());
        }
    }

    #[test]
    fn inversion_examples() {
        let d = open_disc(1.0, 1.0 / 32.0);
        let everywhere = open_disc(3.0, 1.0 / 32.0);
        let id = HoloMap::identity(everywhere.clone());
        let psi = invert_near_identity(&id, &d, 0.5, 0.05).unwrap();
        assert_eq!(psi.eval(c(0.3, 0.2)), c(0.3, 0.2));
        let a = c(0.01, -0.02);
        let shift = HoloMap::polynomial(vec![a, c(1.0, 0.0)], everywhere.clone());
        let psi = invert_near_identity(&shift, &d, 0.5, 0.05).unwrap();
        assert!((psi.eval(c(0.3, 0.2)) - (c(0.3, 0.2) - a)).norm() < 1e-15);
        let quad = HoloMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.01, 0.0)], everywhere.clone());
        let psi = invert_near_identity(&quad, &d, 0.5, 0.05).unwrap();
        for w in psi.domain().samples() {
            assert!((quad.eval(psi.eval(*w)) - w).norm() <= 1e-12);
        }
        assert!(matches!(invert_near_identity(&quad, &d, 0.05, 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn inversion_both_sides_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = open_disc(1.0, 0.05);
        let everywhere = open_disc(3.0, 0.05);
        for _ in 0..50 {
            let a: Vec<C64> = (0..4).map(|_| c(rng.gen_range(-0.004..0.004), rng.gen_range(-0.004..0.004))).collect();
            let phi = HoloMap::polynomial(vec![a[0], c(1.0, 0.0) + a[1], a[2], a[3]], everywhere.clone());
            let psi = invert_near_identity(&phi, &d, 0.5, 0.1).unwrap();
            for w in psi.domain().samples() {
                assert!((phi.eval(psi.eval(*w)) - w).norm() <= 1e-11);
                // Ψ∘Φ on points whose image stays in the inverse's domain
                if psi.domain().contains(phi.eval(*w)) {
                    assert!((psi.eval(phi.eval(*w)) - w).norm() <= 1e-11);
                }
            }
        }
    }

    #[test]
    fn preimage_examples() {
        let circle: Vec<C64> = (0..64).map(|k| C64::from_polar(1.0, TAU * k as f64 / 64.0)).collect();
        let id = |z: C64| z;
        assert_eq!(preimage_count(&id, &circle, c(0.3, 0.1)).unwrap(), 1);
        assert_eq!(preimage_count(&id, &circle, c(1.3, 0.1)).unwrap(), 0);
        let sq = |z: C64| z * z;
        assert_eq!(preimage_count(&sq, &circle, c(0.25, 0.0)).unwrap(), 2);
        assert!(matches!(
            preimage_count(&id, &circle, circle[3]),
            Err(Error::IllConditionedContour(_))
        ));
    }

    #[test]
    fn range_inclusion_by_degree() {
        let d = open_disc(1.0, 0.1);
        let everywhere = open_disc(3.0, 0.1);
        let phi = HoloMap::polynomial(vec![c(0.01, 0.0), c(1.0, 0.0), c(0.01, 0.01)], everywhere);
        let (delta, eps) = (0.5, 0.05);
        let contour: Vec<C64> = (0..256).map(|k| C64::from_polar(1.0 + delta, TAU * k as f64 / 256.0)).collect();
        for w in offset(&d, delta - eps).samples() {
            assert_eq!(preimage_count(&|z| phi.eval(z), &contour, *w).unwrap(), 1);
        }
    }

    #[test]
    fn dbar_residual_examples() {
        let d = disc(1.0, 1.0 / 64.0);
        assert!(dbar_residual_on(|z| z, &d).unwrap() <= 1e-12);
        assert!((dbar_residual_on(|z| z.conj(), &d).unwrap() - 1.0).abs() < 1e-12);
        let r = dbar_residual_on(|z| z * z.conj(), &d).unwrap();
        assert!((r - 1.0).abs() < 0.03, "{r}");
        assert!(matches!(dbar_residual(&[c(0.0, 0.0)], &[c(1.0, 0.0)], 0.1), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn polynomial_maps_have_tiny_residual() {
        let d = disc(1.0, 1e-2);
        let p = HoloMap::polynomial(vec![c(0.1, 0.2), c(1.0, 0.0), c(0.3, -0.1), c(0.05, 0.0)], d.clone());
        assert!(dbar_residual_on(|z| p.eval(z), &d).unwrap() <= 1e-10);
        let q = HoloMap::polynomial((0..7).map(|k| c(1.0 / (k + 1) as f64, 0.1 * k as f64)).collect(), d.clone());
        assert!(dbar_residual_on(|z| q.eval(z), &d).unwrap() <= 1e-10);
    }

    proptest::proptest! {
        #[test]
        fn fixed_point_inverts_near_identity(
            re in proptest::collection::vec(-1.0..1.0f64, 4),
            im in proptest::collection::vec(-1.0..1.0f64, 4),
            size in 1e-14..0.05f64,
            x in -0.4..0.4f64,
            y in -0.4..0.4f64,
        ) {
            let co: Vec<C64> = re.iter().zip(&im).enumerate()
                .map(|(k, (a, b))| if k == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) } + size * c(*a, *b) / 4.0)
                .collect();
            let phi = HoloMap::polynomial(co, Region::points(vec![]));
            let w = c(x, y);
            let (z, res) = fixed_point_solve(|z| phi.eval(z), w);
            proptest::prop_assert!(res <= INVERSE_TOL);
            proptest::prop_assert!((phi.eval(z) - w).norm() <= 1e-14);
        }
    }
}
