//! Iteration constants, the sequence-lemma radius ρ, and thresholds.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cutoff::{dbar_chi_sup, Cutoff};
use crate::dbar::operator_constant;
use crate::error::{Error, Result};
use crate::geometry::pair::CartanPair;
use crate::holo::{CONST_1, K_INJECTIVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Enforce every threshold and range inclusion.
    Certified,
    /// Record threshold checks without aborting on them.
    #[default]
    Practical,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Certified => "certified",
            Mode::Practical => "practical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub k: f64,
    pub const1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub tau: f64,
    pub tau0: f64,
    pub mu: f64,
    pub r0: f64,
    /// Sup-norm constant of the ∂̄ solution operator.
    pub c_op: f64,
    pub dbar_chi_sup: f64,
    pub mode: Mode,
}

impl Constants {
    /// `R_m = R₀/8^m`.
    pub fn radius(&self, m: usize) -> f64 {
        self.r0 / 8f64.powi(m as i32)
    }
}

/// `M₄ = 2·max{2¹¹·M₃, M₃/(4K)}`.
pub fn m4_of(m3: f64, k: f64) -> f64 {
    2.0 * (2048.0 * m3).max(m3 / (4.0 * k))
}

/// `M₅ = 32·M₂·M₃²`.
pub fn m5_of(m2: f64, m3: f64) -> f64 {
    32.0 * m2 * m3 * m3
}

/// `R₀ = ¼·min{1, τ/2, K·τ/4}`.
pub fn r0_of(tau: f64, k: f64) -> f64 {
    0.25 * 1f64.min(0.5 * tau).min(k * tau / 4.0)
}

/// Constants for a pair with cutoff χ. `m2` comes from calibration.
pub fn constants(
    pair: &CartanPair,
    chi: &Cutoff,
    tau: f64,
    tau0: f64,
    mu: f64,
    m2: f64,
    mode: Mode,
) -> Result<Constants> {
    if !(tau > 0.0) || 5.0 * tau > mu || 5.0 * tau > tau0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < τ with 5τ ≤ μ and 5τ ≤ τ₀ (τ={tau}, μ={mu}, τ₀={tau0})"
        )));
    }
    if !(m2 >= 1.0) {
        return Err(Error::InvalidParameter(format!("M₂ = {m2} must be at least 1")));
    }
    let c_op = operator_constant(pair.domain(), tau0);
    let sup = dbar_chi_sup(chi);
    Ok(from_parts(c_op, sup, m2, tau, tau0, mu, mode))
}

/// The formula chain from `C`, `sup|∂̄χ|`, `M₂` and the scales.
pub fn from_parts(c_op: f64, dbar_sup: f64, m2: f64, tau: f64, tau0: f64, mu: f64, mode: Mode) -> Constants {
    let k = K_INJECTIVE;
    let m3 = 1.0 + c_op * dbar_sup;
    Constants {
        k,
        const1: CONST_1,
        m2,
        m3,
        m4: m4_of(m3, k),
        m5: m5_of(m2, m3),
        tau,
        tau0,
        mu,
        r0: r0_of(tau, k),
        c_op,
        dbar_chi_sup: dbar_sup,
        mode,
    }
}

/// `ρ(a, B, C) = (a/(8C))·min(1, C/(2B))`.
pub fn derive_rho(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0) || !(b >= 1.0) || !(c >= 1.0) {
        return Err(Error::InvalidParameter(format!("ρ needs a > 0, B ≥ 1, C ≥ 1 (got {a}, {b}, {c})")));
    }
    Ok(a / (8.0 * c) * 1f64.min(c / (2.0 * b)))
}

/// `ε_η = ½·min{1, ρ(R₀, M₄, M₅), ρ(η, M₄, M₅)}`.
pub fn epsilon_threshold(eta: f64, k: &Constants) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter("η must be positive".into()));
    }
    let r1 = derive_rho(k.r0, k.m4, k.m5)?;
    let r2 = derive_rho(eta, k.m4, k.m5)?;
    Ok(0.5 * 1f64.min(r1).min(r2))
}

/// Positive reals as `m·2^e` with `m ∈ [1, 2)`, immune to under- and overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtFloat {
    m: f64,
    e: i64,
}

const EXP_LIMIT: i64 = 1 << 60;

impl ExtFloat {
    pub const ZERO: ExtFloat = ExtFloat { m: 0.0, e: 0 };

    pub fn new(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "ExtFloat holds finite non-negative values");
        Self { m: x, e: 0 }.normalized()
    }

    fn normalized(self) -> Self {
        if self.m == 0.0 {
            return Self::ZERO;
        }
        let bits = self.m.to_bits();
        let raw = ((bits >> 52) & 0x7ff) as i64;
        if raw == 0 {
            // subnormal: scale up first
            return Self { m: self.m * 2f64.powi(64), e: self.e - 64 }.normalized();
        }
        let exp = raw - 1023;
        let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
        Self { m, e: self.e.saturating_add(exp) }.clamped()
    }

    // exponents beyond ±2⁶⁰ behave as 0 or ∞ for every comparison made here
    fn clamped(self) -> Self {
        Self { m: self.m, e: self.e.clamp(-EXP_LIMIT, EXP_LIMIT) }
    }

    pub fn mul(self, o: Self) -> Self {
        Self { m: self.m * o.m, e: self.e.saturating_add(o.e) }.normalized()
    }

    pub fn div(self, o: Self) -> Self {
        Self { m: self.m / o.m, e: self.e.saturating_sub(o.e) }.normalized()
    }

    pub fn mul_pow2(self, k: i64) -> Self {
        if self.m == 0.0 {
            return self;
        }
        Self { m: self.m, e: self.e.saturating_add(k) }.clamped()
    }

    pub fn log2(self) -> f64 {
        if self.m == 0.0 { f64::NEG_INFINITY } else { self.e as f64 + self.m.log2() }
    }

    pub fn to_f64(self) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        self.m * 2f64.powi(self.e.clamp(-1100, 1100) as i32)
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match (self.m == 0.0, o.m == 0.0) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            _ => Some(self.e.cmp(&o.e).then(self.m.partial_cmp(&o.m)?)),
        }
    }
}

/// Runs the worst case `ε_{m+1} = C·2^{3m}·ε_m²/a` for `m ≤ 60` and checks
/// `16B·ε_m < a/2^{3m}` at every step. The inequality must hold with a
/// relative margin of 2⁻⁴⁰, so inputs within rounding of the boundary fail.
pub fn check_sequence_lemma(a: f64, b: f64, c: f64, eps0: f64) -> bool {
    let (a, b, c) = (ExtFloat::new(a), ExtFloat::new(b), ExtFloat::new(c));
    let sixteen_b = b.mul_pow2(4).mul(ExtFloat::new(1.0 + 2f64.powi(-40)));
    let mut eps = ExtFloat::new(eps0);
    for m in 0..=60i64 {
        if !(sixteen_b.mul(eps) < a.mul_pow2(-3 * m)) {
            return false;
        }
        eps = c.mul(eps).mul(eps).mul_pow2(3 * m).div(a);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rho_examples() {
        assert_eq!(derive_rho(1.0, 1.0, 1.0).unwrap(), 1.0 / 16.0);
        let r = derive_rho(0.03125, 50176.0, 19208.0).unwrap();
        assert!((r - 0.03125 / (8.0 * 19208.0) * (19208.0 / (2.0 * 50176.0))).abs() < 1e-20);
        assert!(check_sequence_lemma(0.03125, 50176.0, 19208.0, 0.999 * r));
        for lam in [0.5, 3.0, 1e-6] {
            let x = derive_rho(lam * 2.0, 5.0, 7.0).unwrap();
            assert!((x - lam * derive_rho(2.0, 5.0, 7.0).unwrap()).abs() <= 1e-15 * x);
        }
        assert!(derive_rho(1.0, 0.5, 1.0).is_err());
        assert!(derive_rho(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sequence_lemma_examples() {
        assert!(check_sequence_lemma(1.0, 1.0, 1.0, 0.0));
        // ε₀ = a/(16B): the strict inequality fails at m = 0
        assert!(!check_sequence_lemma(2.0, 4.0, 3.0, 2.0 / 64.0));
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let a = 10f64.powf(rng.gen_range(-8.0..1.0));
            let b = 10f64.powf(rng.gen_range(0.0..6.0));
            let c = 10f64.powf(rng.gen_range(0.0..6.0));
            assert!(check_sequence_lemma(a, b, c, 0.999 * derive_rho(a, b, c).unwrap()));
        }
    }

    #[test]
    fn ext_float_survives_underflow() {
        let mut x = ExtFloat::new(1e-10);
        for _ in 0..10 {
            x = x.mul(x);
        }
        assert!((x.log2() - 1024.0 * 1e-10f64.log2()).abs() < 1e-6);
        assert!(ExtFloat::ZERO < x && x < ExtFloat::new(1e-300));
        assert_eq!(ExtFloat::new(3.0).mul(ExtFloat::new(0.25)).to_f64(), 0.75);
        assert_eq!(ExtFloat::new(6.0).div(ExtFloat::new(4.0)).to_f64(), 1.5);
    }

    #[test]
    fn constant_formulas() {
        // C = 6, sup|∂̄χ| = 1.875 → M₃ = 12.25, M₄ = 50176
        let k = from_parts(6.0, 1.875, 1.0, 2.0, 10.0, 10.0, Mode::Certified);
        assert_eq!(k.m3, 12.25);
        assert_eq!(k.m4, 50176.0);
        assert_eq!(k.m5, 32.0 * 12.25 * 12.25);
        assert_eq!(k.r0, 0.03125);
        for m in 0..6 {
            assert_eq!(k.radius(m), k.r0 / 8f64.powi(m as i32));
        }
    }

    #[test]
    fn threshold_limits() {
        let k = from_parts(6.0, 1.875, 2.0, 0.01, 0.05, 0.1, Mode::Certified);
        let big = epsilon_threshold(1e9, &k).unwrap();
        assert_eq!(big, 0.5 * derive_rho(k.r0, k.m4, k.m5).unwrap().min(1.0));
        let tiny = epsilon_threshold(1e-30, &k).unwrap();
        assert!(tiny < 1e-33);
        assert!(tiny > 0.0);
    }

    proptest::proptest! {
        #[test]
        fn rho_is_homogeneous_in_a(la in -8.0..1.0f64, lb in 0.0..6.0f64, lc in 0.0..6.0f64, t in 1e-3..1e3f64) {
            let (a, b, c) = (10f64.powf(la), 10f64.powf(lb), 10f64.powf(lc));
            let x = derive_rho(t * a, b, c).unwrap();
            proptest::prop_assert!((x - t * derive_rho(a, b, c).unwrap()).abs() <= 1e-14 * x);
        }

        #[test]
        fn below_rho_accepted_at_boundary_rejected(la in -12.0..2.0f64, lb in 0.0..8.0f64, lc in 0.0..8.0f64, f in 0.0..0.999f64) {
            let (a, b, c) = (10f64.powf(la), 10f64.powf(lb), 10f64.powf(lc));
            proptest::prop_assert!(check_sequence_lemma(a, b, c, f * derive_rho(a, b, c).unwrap()));
            proptest::prop_assert!(!check_sequence_lemma(a, b, c, a / (16.0 * b)));
        }
    }
}
