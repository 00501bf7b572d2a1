//! Strip cutoffs `χ(z) = 1 − S((Re z − l)/w)` with S the quintic smoothstep.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::defining::{smoothstep5, smoothstep5_d1};
use crate::geometry::pair::{CartanPair, PairSet};
use crate::lattice::Lattice;

/// Largest slope of the quintic smoothstep on [0, 1].
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 15.0 / 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    l: f64,
    r: f64,
    tau_tilde: f64,
}

impl Cutoff {
    /// Transition interval `[l, r]` in Re z.
    pub fn transition(&self) -> (f64, f64) {
        (self.l, self.r)
    }

    pub fn width(&self) -> f64 {
        self.r - self.l
    }

    pub fn tau_tilde(&self) -> f64 {
        self.tau_tilde
    }

    pub fn profile_name(&self) -> &'static str {
        "quintic-smoothstep"
    }

    pub fn chi(&self, z: C64) -> f64 {
        1.0 - smoothstep5((z.re - self.l) / self.width())
    }

    /// `½(∂_x + i∂_y)χ`, real because χ depends on Re z only.
    pub fn dbar_chi(&self, z: C64) -> C64 {
        let w = self.width();
        C64::new(-0.5 * smoothstep5_d1((z.re - self.l) / w) / w, 0.0)
    }

    /// Whether `∂̄χ` may be nonzero at `z`.
    pub fn in_transition(&self, z: C64) -> bool {
        z.re > self.l && z.re < self.r
    }

    pub fn translated(&self, dx: f64) -> Self {
        Self { l: self.l + dx, r: self.r + dx, tau_tilde: self.tau_tilde }
    }
}

/// Default margin `τ̃ = (s₂ − s₁)/256`.
pub fn default_tau_tilde(pair: &CartanPair) -> f64 {
    let (s1, s2) = pair.strip();
    (s2 - s1) / 256.0
}

/// Builds χ with transition `[s₁ + 2τ̃, s₂ − 2τ̃]`, then checks on a grid that
/// `A(τ) ∩ B(τ) = C(τ)` for `τ ∈ {τ̃/2, τ̃}`.
pub fn build_cutoff(pair: &CartanPair, tau_tilde: f64) -> Result<Cutoff> {
    let (s1, s2) = pair.strip();
    if !(tau_tilde > 0.0) {
        return Err(Error::InvalidParameter("cutoff margin τ̃ must be positive".into()));
    }
    if tau_tilde > (s2 - s1) / 128.0 {
        return Err(Error::InvalidParameter(format!(
            "τ̃ = {tau_tilde} too large: item 3 needs the difference sets more than 64τ̃ apart (τ̃ ≤ (s₂−s₁)/128 = {})",
            (s2 - s1) / 128.0
        )));
    }
    let cut = Cutoff { l: s1 + 2.0 * tau_tilde, r: s2 - 2.0 * tau_tilde, tau_tilde };
    for tau in [0.5 * tau_tilde, tau_tilde] {
        if let Some(z) = overlap_mismatch(pair, tau, pair.check_spacing()) {
            return Err(Error::Geometry(format!("A(τ) ∩ B(τ) = C(τ) at τ = {tau}, point {z}")));
        }
    }
    Ok(cut)
}

/// A grid point where `A(τ) ∩ B(τ)` and `C(τ)` disagree, if any.
pub fn overlap_mismatch(pair: &CartanPair, tau: f64, h: f64) -> Option<C64> {
    let (a, b, c) = (pair.shape(PairSet::A), pair.shape(PairSet::B), pair.shape(PairSet::C));
    let (s1, s2) = pair.strip();
    let bb = pair.domain().bbox().expand(tau + 2.0 * h);
    let bb = crate::lattice::BBox::new(s1 - tau - 2.0 * h, s2 + tau + 2.0 * h, bb.ymin, bb.ymax);
    let lat = Lattice::covering(&bb, h);
    (0..lat.len()).into_par_iter().map(|k| lat.point_at(k)).find_any(|z| {
        let both = a.distance(*z) < tau && b.distance(*z) < tau;
        both != (c.distance(*z) < tau)
    })
}

/// `sup |∂̄χ| = ½·(15/8)/w`.
pub fn dbar_chi_sup(c: &Cutoff) -> f64 {
    0.5 * SMOOTHSTEP_MAX_SLOPE / c.width()
}
