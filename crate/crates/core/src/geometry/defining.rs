//! Defining functions `r = 1 − e^{Aτ} + ψ(ρ)` built from the signed distance ρ.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::curve::JordanDomain;
use crate::error::{Error, Result};
use crate::lattice::BBox;

/// Quintic smoothstep `6x⁵ − 15x⁴ + 10x³`, clamped to [0, 1].
pub fn smoothstep5(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

pub fn smoothstep5_d1(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (x - 1.0) * (x - 1.0)
}

pub fn smoothstep5_d2(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    60.0 * x * (x - 1.0) * (2.0 * x - 1.0)
}

/// The profile ψ: `e^{At} − 1` on `[−4μ, 4μ]`, blended by a quintic
/// smoothstep over `4μ ≤ |t| ≤ 6μ` into the constants `e^{±6.5Aμ} − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub a: f64,
    pub mu: f64,
}

impl Profile {
    fn upper(&self) -> f64 {
        (6.5 * self.a * self.mu).exp() - 1.0
    }

    fn lower(&self) -> f64 {
        (-6.5 * self.a * self.mu).exp() - 1.0
    }

    // (blend weight s, ds/dt, d²s/dt², target constant)
    fn blend(&self, t: f64) -> Option<(f64, f64, f64, f64)> {
        let (mu, w) = (self.mu, 2.0 * self.mu);
        if t > 4.0 * mu {
            let x = (t - 4.0 * mu) / w;
            Some((smoothstep5(x), smoothstep5_d1(x) / w, smoothstep5_d2(x) / (w * w), self.upper()))
        } else if t < -4.0 * mu {
            let x = (-4.0 * mu - t) / w;
            Some((smoothstep5(x), -smoothstep5_d1(x) / w, smoothstep5_d2(x) / (w * w), self.lower()))
        } else {
            None
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        let e = (self.a * t).exp() - 1.0;
        match self.blend(t) {
            None => e,
            Some((s, _, _, k)) => (1.0 - s) * e + s * k,
        }
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        let ex = (self.a * t).exp();
        let de = self.a * ex;
        match self.blend(t) {
            None => de,
            Some((s, ds, _, k)) => (1.0 - s) * de + ds * (k - (ex - 1.0)),
        }
    }

    pub fn d2psi(&self, t: f64) -> f64 {
        let ex = (self.a * t).exp();
        let (de, dde) = (self.a * ex, self.a * self.a * ex);
        match self.blend(t) {
            None => dde,
            Some((s, ds, dds, k)) => (1.0 - s) * dde - 2.0 * ds * de + dds * (k - (ex - 1.0)),
        }
    }

    /// Bounds `e^{∓7Aμ} − 1` that ψ never leaves.
    pub fn bounds(&self) -> (f64, f64) {
        ((-7.0 * self.a * self.mu).exp() - 1.0, (7.0 * self.a * self.mu).exp() - 1.0)
    }
}

/// Real function with a box outside of which it is constant.
pub trait ScalarField: Sync {
    fn value(&self, z: C64) -> f64;

    /// `Some((box, c))` when the field equals `c` outside `box`.
    fn far_field(&self) -> Option<(BBox, f64)> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct DefiningFunction {
    domain: Arc<JordanDomain>,
    tau: f64,
    profile: Profile,
}

impl DefiningFunction {
    pub fn domain(&self) -> &Arc<JordanDomain> {
        &self.domain
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    fn offset(&self) -> f64 {
        1.0 - (self.profile.a * self.tau).exp()
    }

    pub fn value(&self, z: C64) -> f64 {
        self.offset() + self.profile.psi(self.domain.signed_distance(z))
    }

    /// `ψ′(ρ)·∇ρ` with `∇ρ` the outward unit normal at the nearest boundary point.
    pub fn gradient(&self, z: C64) -> (f64, f64) {
        let (t, sd) = self.domain.closest(z);
        let tangent = self.domain.curve().d1(t);
        let n = tangent * C64::new(0.0, -1.0) / tangent.norm();
        let d = self.profile.dpsi(sd);
        (d * n.re, d * n.im)
    }

    /// `(r_xx, r_xy, r_yy)` by central differences of the gradient.
    pub fn hessian(&self, z: C64) -> (f64, f64, f64) {
        let s = 1e-5;
        let (gxp, gyp) = self.gradient(z + s);
        let (gxm, gym) = self.gradient(z - s);
        let (gxu, _) = self.gradient(z + C64::new(0.0, s));
        let (gxd, _) = self.gradient(z - C64::new(0.0, s));
        let (_, gyu) = self.gradient(z + C64::new(0.0, s));
        let (_, gyd) = self.gradient(z - C64::new(0.0, s));
        let xy = 0.5 * ((gyp - gym) + (gxu - gxd)) / (2.0 * s);
        ((gxp - gxm) / (2.0 * s), xy, (gyu - gyd) / (2.0 * s))
    }

    /// Membership in `{r < 0}`, which is the open τ-neighbourhood of the domain.
    pub fn is_negative(&self, z: C64) -> bool {
        self.value(z) < 0.0
    }
}

impl ScalarField for DefiningFunction {
    fn value(&self, z: C64) -> f64 {
        DefiningFunction::value(self, z)
    }

    fn far_field(&self) -> Option<(BBox, f64)> {
        let bbox = self.domain.bbox().expand(6.0 * self.profile.mu);
        Some((bbox, self.offset() + self.profile.upper()))
    }
}

/// Default `(μ, A)`: `μ = reach/8`, `A = 2/μ`.
pub fn default_profile(domain: &JordanDomain) -> (f64, f64) {
    let mu = domain.reach_estimate() / 8.0;
    (mu, 2.0 / mu)
}

/// Largest admissible offset `τ₀ = μ/2¹⁰`.
pub fn tau0_for(mu: f64) -> f64 {
    mu / 1024.0
}

pub fn build_defining_function(
    domain: Arc<JordanDomain>,
    tau: f64,
    mu: f64,
    a: f64,
) -> Result<DefiningFunction> {
    if !(mu > 0.0) || !(a > 1.0) || !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need μ > 0, A > 1, τ ≥ 0 (got μ={mu}, A={a}, τ={tau})"
        )));
    }
    let tau0 = tau0_for(mu);
    if tau > tau0 {
        return Err(Error::OutOfRange(format!("τ = {tau} exceeds τ₀ = μ/1024 = {tau0}")));
    }
    let reach = domain.reach_estimate();
    if !(7.0 * mu < reach) {
        return Err(Error::GeometryInfeasible(format!(
            "7μ = {} not below the boundary reach {reach}",
            7.0 * mu
        )));
    }
    Ok(DefiningFunction { domain, tau, profile: Profile { a, mu } })
}
