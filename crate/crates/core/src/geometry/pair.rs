//! Vertical-strip Cartan pairs `A = Ω̄ ∩ {Re ≤ s₂}`, `B = Ω̄ ∩ {Re ≥ s₁}`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::curve::JordanDomain;
use super::region::{Region, Shape, Slab};
use crate::error::{Error, Result};

/// The sets attached to a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSet {
    A,
    B,
    C,
    /// closure(A \ B) = Ω̄ ∩ {Re ≤ s₁}
    AMinusB,
    /// closure(B \ A) = Ω̄ ∩ {Re ≥ s₂}
    BMinusA,
    Omega,
}

#[derive(Debug, Clone)]
pub struct CartanPair {
    domain: Arc<JordanDomain>,
    s1: f64,
    s2: f64,
    sep: f64,
    admissible: [bool; 4],
    check_spacing: f64,
}

impl CartanPair {
    pub fn domain(&self) -> &Arc<JordanDomain> {
        &self.domain
    }

    pub fn strip(&self) -> (f64, f64) {
        (self.s1, self.s2)
    }

    /// `dist(closure(A\B), closure(B\A))`.
    pub fn sep(&self) -> f64 {
        self.sep
    }

    /// Flags for admissibility items 1–4.
    pub fn admissible(&self) -> [bool; 4] {
        self.admissible
    }

    pub fn check_spacing(&self) -> f64 {
        self.check_spacing
    }

    pub fn shape(&self, set: PairSet) -> Arc<dyn Shape> {
        let d = self.domain.clone();
        let (s1, s2) = (self.s1, self.s2);
        Arc::new(match set {
            PairSet::A => Slab::new(d, None, Some(s2)),
            PairSet::B => Slab::new(d, Some(s1), None),
            PairSet::C => Slab::new(d, Some(s1), Some(s2)),
            PairSet::AMinusB => Slab::new(d, None, Some(s1)),
            PairSet::BMinusA => Slab::new(d, Some(s2), None),
            PairSet::Omega => Slab::whole(d),
        })
    }

    /// `set(δ)` (open δ-neighbourhood, or the closed set for δ = 0) sampled at spacing `h`.
    pub fn region(&self, set: PairSet, delta: f64, h: f64) -> Region {
        let base = self.shape(set);
        if delta > 0.0 {
            Region::new(Arc::new(super::region::Dilated { inner: base, r: delta }), h)
        } else {
            Region::new(base, h)
        }
    }

    pub fn translated(&self, v: C64) -> Result<Self> {
        let dom = Arc::new(self.domain.translated(v)?);
        make_cartan_pair_with(dom, self.s1 + v.re, self.s2 + v.re, self.check_spacing)
    }
}

/// Builds and grid-verifies the pair with a default check spacing of 1/64.
pub fn make_cartan_pair(domain: Arc<JordanDomain>, s1: f64, s2: f64) -> Result<CartanPair> {
    make_cartan_pair_with(domain, s1, s2, 1.0 / 64.0)
}

pub fn make_cartan_pair_with(
    domain: Arc<JordanDomain>,
    s1: f64,
    s2: f64,
    h: f64,
) -> Result<CartanPair> {
    if !(s1 < s2) {
        return Err(Error::InvalidParameter(format!("strip bounds need s1 < s2 (got {s1}, {s2})")));
    }
    let bb = domain.bbox();
    if !domain.is_convex() {
        return Err(Error::NotAdmissible {
            item: 2,
            reason: "vertical-strip pairs need a convex domain".into(),
        });
    }
    if !(s2 > bb.xmin && s1 < bb.xmax) {
        return Err(Error::NotAdmissible { item: 1, reason: "strip misses the domain, C is empty".into() });
    }
    if !(bb.xmin < s1) {
        return Err(Error::NotAdmissible { item: 3, reason: "A \\ B is empty".into() });
    }
    if !(s2 < bb.xmax) {
        return Err(Error::NotAdmissible { item: 3, reason: "B \\ A is empty".into() });
    }

    let chords1 = domain.vertical_chords(s1);
    let chords2 = domain.vertical_chords(s2);
    let sep = chords1
        .iter()
        .flat_map(|&(a0, a1)| chords2.iter().map(move |&(b0, b1)| (a0, a1, b0, b1)))
        .map(|(a0, a1, b0, b1)| {
            let gap = (b0 - a1).max(a0 - b1).max(0.0);
            (s2 - s1).hypot(gap)
        })
        .fold(f64::INFINITY, f64::min);

    let mut pair = CartanPair { domain, s1, s2, sep, admissible: [false; 4], check_spacing: h };

    // item 1: C ≠ ∅ and A ∪ B = Ω̄ is the closure of its interior
    let c = pair.region(PairSet::C, 0.0, h);
    // every boundary point is a limit of interior points: step h/2 inward
    let dom = pair.domain.clone();
    let closure_ok = dom.polyline().par_iter().all(|&p| {
        let (t, _) = dom.closest(p);
        let inward = dom.curve().d1(t) * C64::new(0.0, 1.0);
        dom.signed_distance(p + inward / inward.norm() * (0.5 * h)) < 0.0
    });
    pair.admissible[0] = !c.samples().is_empty() && closure_ok;
    if c.samples().is_empty() {
        return Err(Error::NotAdmissible { item: 1, reason: "no grid point of C".into() });
    }
    if !closure_ok {
        return Err(Error::NotAdmissible { item: 1, reason: "A ∪ B is not the closure of its interior".into() });
    }

    // item 2: a bounded convex C² domain; in one variable that is all we need
    pair.admissible[1] = pair.domain.reach_estimate() > 0.0 && pair.domain.reach_estimate().is_finite();
    if !pair.admissible[1] {
        return Err(Error::NotAdmissible { item: 2, reason: "boundary curvature degenerate".into() });
    }

    // item 3: nonempty differences with disjoint closures
    let amb = pair.region(PairSet::AMinusB, 0.0, h);
    let bma = pair.region(PairSet::BMinusA, 0.0, h);
    let disjoint = amb.samples().iter().all(|z| z.re <= s1) && bma.samples().iter().all(|z| z.re >= s2);
    pair.admissible[2] = !amb.samples().is_empty() && !bma.samples().is_empty() && disjoint && sep > 0.0;
    if !pair.admissible[2] {
        return Err(Error::NotAdmissible { item: 3, reason: "difference sets empty or touching".into() });
    }

    // item 4: for a single pair the difference sets are nonempty compacts; family
    // continuity is measured on parameter grids
    pair.admissible[3] = true;
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::region::hausdorff_distance;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn disc_pair_separation() {
        let d = Arc::new(JordanDomain::disc(1.0, c(0.0, 0.0), 256).unwrap());
        let p = make_cartan_pair(d.clone(), -0.2, 0.2).unwrap();
        assert!((p.sep() - 0.4).abs() < 1e-12);
        assert_eq!(p.admissible(), [true; 4]);
        assert!(matches!(make_cartan_pair(d, 0.2, -0.2), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn ellipse_pair_lens() {
        let d = Arc::new(JordanDomain::ellipse(2.0, 1.0, c(0.0, 0.0), 512).unwrap());
        let p = make_cartan_pair(d, -0.3, 0.3).unwrap();
        let cset = p.region(PairSet::C, 0.0, 1.0 / 64.0);
        let bb = cset.bbox();
        assert!(bb.xmin >= -0.3 && bb.xmax <= 0.3);
        assert!(bb.xmax - bb.xmin > 0.6 - 2.0 / 64.0);
        for z in cset.samples() {
            assert!(z.re * z.re / 4.0 + z.im * z.im <= 1.0 + 1e-12);
        }
        assert!(p.sep() >= 0.6 - 1e-12);
    }

    #[test]
    fn empty_difference_rejected() {
        let d = Arc::new(JordanDomain::disc(1.0, c(0.0, 0.0), 256).unwrap());
        assert!(matches!(
            make_cartan_pair(d.clone(), -1.5, 0.2),
            Err(Error::NotAdmissible { item: 3, .. })
        ));
        assert!(matches!(make_cartan_pair(d, 1.5, 2.0), Err(Error::NotAdmissible { item: 1, .. })));
    }

    #[test]
    fn translated_family_difference_sets_move_continuously() {
        let d = Arc::new(JordanDomain::disc(1.0, c(0.0, 0.0), 256).unwrap());
        let p0 = make_cartan_pair(d, -0.2, 0.2).unwrap();
        let h = 1.0 / 32.0;
        let v = c(0.0, 1.0);
        let base = p0.region(PairSet::AMinusB, 0.0, h);
        for t in [0.05, 0.1, 0.2] {
            let pt = p0.translated(v * t).unwrap();
            let moved = pt.region(PairSet::AMinusB, 0.0, h);
            let hd = hausdorff_distance(&moved, &base).unwrap();
            assert!(hd <= t + 2.0 * h, "{t}: {hd}");
        }
    }
}
