//! Parameter families `ζ ↦ (Ω_ζ, γ_ζ)` on a finite ζ-grid.

use std::collections::HashSet;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::{from_parts, Constants, Mode};
use super::{resolve_scales, run_split, SplitOutcome};
use crate::cutoff::{build_cutoff, dbar_chi_sup, default_tau_tilde};
use crate::dbar::operator_constant;
use crate::error::{Error, Result};
use crate::geometry::curve::JordanDomain;
use crate::geometry::pair::{make_cartan_pair, CartanPair, PairSet};
use crate::geometry::region::Region;
use crate::holo::{dbar_residual_on, injectivity_margin, HoloMap};
use crate::lattice::Lattice;
use crate::splitting::SplitContext;

/// `n` equispaced points of `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct ParamFamily {
    pub zetas: Vec<f64>,
    pub pairs: Vec<CartanPair>,
    /// Coefficients of `γ` at ζ = 0 and ζ = 1.
    pub coeffs0: Vec<C64>,
    pub coeffs1: Vec<C64>,
}

impl ParamFamily {
    pub fn new(
        zetas: Vec<f64>,
        pair_of: impl Fn(f64) -> Result<CartanPair> + Sync,
        coeffs0: Vec<C64>,
        coeffs1: Vec<C64>,
    ) -> Result<Self> {
        if zetas.is_empty() {
            return Err(Error::InvalidParameter("empty ζ-grid".into()));
        }
        let pairs = zetas.par_iter().map(|z| pair_of(*z)).collect::<Result<Vec<_>>>()?;
        if let Some(p) = pairs.iter().find(|p| !p.admissible().iter().all(|x| *x)) {
            return Err(Error::NotAdmissible { item: 0, reason: format!("pair with strip {:?}", p.strip()) });
        }
        Ok(Self { zetas, pairs, coeffs0, coeffs1 })
    }

    /// Translated discs `D(ζ·drift, radius)` with a fixed strip.
    pub fn translated_discs(
        zetas: Vec<f64>,
        radius: f64,
        drift: C64,
        strip: (f64, f64),
        coeffs0: Vec<C64>,
        coeffs1: Vec<C64>,
    ) -> Result<Self> {
        let base = Arc::new(JordanDomain::disc(radius, C64::new(0.0, 0.0), 512)?);
        let pair = make_cartan_pair(base, strip.0, strip.1)?;
        Self::new(zetas, |z| pair.translated(drift * z), coeffs0, coeffs1)
    }

    pub fn len(&self) -> usize {
        self.zetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zetas.is_empty()
    }

    /// Linear interpolation of the coefficients.
    pub fn coefficients(&self, zeta: f64) -> Vec<C64> {
        let n = self.coeffs0.len().max(self.coeffs1.len());
        let at = |c: &[C64], k: usize| c.get(k).copied().unwrap_or_default();
        (0..n).map(|k| at(&self.coeffs0, k) * (1.0 - zeta) + at(&self.coeffs1, k) * zeta).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub zeta0: f64,
    pub zeta1: f64,
    pub modulus: f64,
}

/// `sup |f_ζ − f_ζ'|` over the common lattice points of adjacent grids.
pub fn continuity_modulus(zetas: &[f64], maps: &[HoloMap], grids: &[Region]) -> Result<Vec<ModulusRow>> {
    if zetas.len() != maps.len() || maps.len() != grids.len() {
        return Err(Error::InvalidInput("ζ-grid, maps and grids differ in length".into()));
    }
    let mut rows = Vec::new();
    for k in 1..zetas.len() {
        let (g0, g1) = (&grids[k - 1], &grids[k]);
        let common: Vec<C64> = if g0.spacing() > 0.0 && g0.spacing() == g1.spacing() {
            let h = g0.spacing();
            let keys: HashSet<(i64, i64)> = g1.samples().iter().map(|z| Lattice::global_index(h, *z)).collect();
            g0.samples().iter().copied().filter(|z| keys.contains(&Lattice::global_index(h, *z))).collect()
        } else {
            let keys: HashSet<(u64, u64)> = g1.samples().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect();
            g0.samples().iter().copied().filter(|z| keys.contains(&(z.re.to_bits(), z.im.to_bits()))).collect()
        };
        if common.is_empty() {
            return Err(Error::InvalidOverlap(format!("no common grid point for ζ = {} and {}", zetas[k - 1], zetas[k])));
        }
        let (f0, f1) = (&maps[k - 1], &maps[k]);
        let modulus = common.par_iter().map(|z| (f0.eval(*z) - f1.eval(*z)).norm()).reduce(|| 0.0, f64::max);
        rows.push(ModulusRow { zeta0: zetas[k - 1], zeta1: zetas[k], modulus });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub zeta: f64,
    pub residual: f64,
    pub alpha_norm: f64,
    pub beta_norm: f64,
    pub steps: usize,
    pub injective: [bool; 2],
    pub degree_ok: bool,
    pub lipschitz: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyReport {
    pub mode: Mode,
    pub h: f64,
    pub constants: Constants,
    pub entries: Vec<FamilyEntry>,
    pub input_moduli: Vec<ModulusRow>,
    pub alpha_moduli: Vec<ModulusRow>,
    pub beta_moduli: Vec<ModulusRow>,
    /// Largest output modulus over the largest input modulus.
    pub kappa: f64,
    /// Max over min of the measured Lipschitz constants.
    pub lipschitz_spread: f64,
    pub failed: Vec<f64>,
}

impl FamilyReport {
    pub fn max_output_modulus(&self) -> f64 {
        self.alpha_moduli.iter().chain(&self.beta_moduli).fold(0.0, |m, r| m.max(r.modulus))
    }
}

/// Settings shared by every ζ of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySettings {
    pub h: f64,
    pub mode: Mode,
    pub m2: f64,
    pub eta: f64,
    pub max_m: usize,
    /// Overrides of `τ₀`, `τ`, `μ`.
    pub tau0: Option<f64>,
    pub tau: Option<f64>,
    pub mu: Option<f64>,
}

impl FamilySettings {
    pub fn new(h: f64, mode: Mode, m2: f64, eta: f64, max_m: usize) -> Self {
        Self { h, mode, m2, eta, max_m, tau0: None, tau: None, mu: None }
    }
}

/// Constants from the worst pair: largest `C` and `sup|∂̄χ|`, smallest scales.
pub fn family_constants(family: &ParamFamily, st: &FamilySettings) -> Result<Constants> {
    let (mode, m2) = (st.mode, st.m2);
    let mut c_op: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let (mut tau0, mut tau, mut mu) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for p in &family.pairs {
        let s = resolve_scales(p, mode, st.tau0, st.tau, st.mu);
        tau = tau.min(s.tau);
        let chi = build_cutoff(p, default_tau_tilde(p))?;
        tau0 = tau0.min(s.tau0);
        mu = mu.min(s.mu);
        c_op = c_op.max(operator_constant(p.domain(), s.tau0));
        sup = sup.max(dbar_chi_sup(&chi));
    }
    if !(m2 >= 1.0) {
        return Err(Error::InvalidParameter(format!("M₂ = {m2} must be at least 1")));
    }
    if 5.0 * tau > tau0 || 5.0 * tau > mu {
        return Err(Error::InvalidParameter(format!("need 5τ ≤ τ₀ and 5τ ≤ μ (τ={tau}, τ₀={tau0}, μ={mu})")));
    }
    Ok(from_parts(c_op, sup, m2, tau, tau0, mu, mode))
}

pub struct FamilyRun {
    pub report: FamilyReport,
    pub outcomes: Vec<Option<SplitOutcome>>,
}

/// Runs the splitting for every ζ with common constants and measures the
/// continuity moduli of inputs and outputs.
pub fn run_family(family: &ParamFamily, s: &FamilySettings) -> Result<FamilyRun> {
    let k = family_constants(family, s)?;
    let tau = k.tau;
    let results: Vec<(Result<SplitOutcome>, HoloMap, Region, Region, Region)> = family
        .zetas
        .par_iter()
        .zip(&family.pairs)
        .map(|(&zeta, pair)| {
            let ctx_of = || -> Result<SplitContext> {
                let chi = build_cutoff(pair, default_tau_tilde(pair))?;
                SplitContext::new(pair.clone(), chi, s.h, k.tau0)
            };
            let c_tau = pair.region(PairSet::C, tau, s.h);
            let a2 = pair.region(PairSet::A, 2.0 * tau, s.h);
            let b2 = pair.region(PairSet::B, 2.0 * tau, s.h);
            let gamma = HoloMap::polynomial(family.coefficients(zeta), pair.region(PairSet::C, 5.0 * tau, s.h));
            let out = ctx_of().and_then(|ctx| {
                check_input(&gamma, &ctx, tau)?;
                run_split(&gamma, &ctx, &k, s.eta, s.max_m)
            });
            (out, gamma, c_tau, a2, b2)
        })
        .collect();

    let mut entries = Vec::new();
    let mut failed = Vec::new();
    let mut outcomes = Vec::new();
    for (&zeta, (out, ..)) in family.zetas.iter().zip(&results) {
        match out {
            Ok(o) => {
                let t = &o.trace;
                entries.push(FamilyEntry {
                    zeta,
                    residual: t.residual,
                    alpha_norm: t.alpha_norm,
                    beta_norm: t.beta_norm,
                    steps: t.steps.len(),
                    injective: t.injective,
                    degree_ok: t.degree_ok,
                    lipschitz: t.lipschitz,
                    error: None,
                });
                outcomes.push(Some(o.clone()));
            }
            Err(e) => {
                failed.push(zeta);
                entries.push(FamilyEntry {
                    zeta,
                    residual: f64::NAN,
                    alpha_norm: f64::NAN,
                    beta_norm: f64::NAN,
                    steps: 0,
                    injective: [false; 2],
                    degree_ok: false,
                    lipschitz: f64::NAN,
                    error: Some(format!("{}: {e}", e.kind())),
                });
                outcomes.push(None);
            }
        }
    }

    let zetas = &family.zetas;
    let gammas: Vec<HoloMap> = results.iter().map(|r| r.1.clone()).collect();
    let c_grids: Vec<Region> = results.iter().map(|r| r.2.clone()).collect();
    let input_moduli = continuity_modulus(zetas, &gammas, &c_grids)?;
    let (alpha_moduli, beta_moduli) = if failed.is_empty() {
        let alphas: Vec<HoloMap> = outcomes.iter().flatten().map(|o| o.alpha.clone()).collect();
        let betas: Vec<HoloMap> = outcomes.iter().flatten().map(|o| o.beta.clone()).collect();
        let a_grids: Vec<Region> = results.iter().map(|r| r.3.clone()).collect();
        let b_grids: Vec<Region> = results.iter().map(|r| r.4.clone()).collect();
        (continuity_modulus(zetas, &alphas, &a_grids)?, continuity_modulus(zetas, &betas, &b_grids)?)
    } else {
        (Vec::new(), Vec::new())
    };
    let max_in = input_moduli.iter().fold(0.0, |m: f64, r| m.max(r.modulus));
    let max_out = alpha_moduli.iter().chain(&beta_moduli).fold(0.0, |m: f64, r| m.max(r.modulus));
    let kappa = if max_in > 0.0 { max_out / max_in } else { 0.0 };
    let ls: Vec<f64> = entries.iter().map(|e| e.lipschitz).filter(|l| l.is_finite()).collect();
    let lipschitz_spread = match (ls.iter().cloned().reduce(f64::max), ls.iter().cloned().reduce(f64::min)) {
        (Some(hi), Some(lo)) if lo > 0.0 => hi / lo,
        _ => f64::NAN,
    };
    let report = FamilyReport {
        mode: s.mode,
        h: s.h,
        constants: k,
        entries,
        input_moduli,
        alpha_moduli,
        beta_moduli,
        kappa,
        lipschitz_spread,
        failed,
    };
    Ok(FamilyRun { report, outcomes })
}

// γ_ζ holomorphic on C(5τ) and injective on C(4τ)
fn check_input(gamma: &HoloMap, ctx: &SplitContext, tau: f64) -> Result<()> {
    let region = ctx.region(PairSet::C, 4.0 * tau);
    let scale = gamma.values(region.samples()).iter().zip(region.samples()).fold(0.0, |m: f64, (w, z)| m.max((w - z).norm()));
    let g = gamma.clone();
    let r = dbar_residual_on(move |z| g.eval(z) - z, &region)?;
    let tol = crate::dbar::quadrature_tolerance(ctx.h, scale);
    if r > tol {
        return Err(Error::NotHolomorphic { residual: r, tolerance: tol });
    }
    let g = gamma.clone();
    let diff = HoloMap::from_fn(move |z| g.eval(z) - z, gamma.domain().clone());
    if !injectivity_margin(&diff, &region, tau * (1.0 - 1e-9))?.0 {
        return Err(Error::Threshold("γ_ζ is not certified injective on C(4τ)".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn modulus_of_linear_family() {
        let zetas = uniform_grid(5);
        let v = c(0.3, -0.4);
        let pts: Vec<C64> = (0..20).map(|k| c(k as f64 * 0.05, 0.1)).collect();
        let maps: Vec<HoloMap> = zetas
            .iter()
            .map(|&z| HoloMap::polynomial(vec![v * z, c(1.0, 0.0)], Region::points(pts.clone())))
            .collect();
        let grids = vec![Region::points(pts.clone()); 5];
        for row in continuity_modulus(&zetas, &maps, &grids).unwrap() {
            assert!((row.modulus - 0.25 * v.norm()).abs() < 1e-15);
        }
        let same: Vec<HoloMap> = zetas.iter().map(|_| maps[0].clone()).collect();
        assert!(continuity_modulus(&zetas, &same, &grids).unwrap().iter().all(|r| r.modulus == 0.0));
        let apart = vec![Region::points(vec![c(0.0, 0.0)]), Region::points(vec![c(1.0, 0.0)])];
        assert!(matches!(
            continuity_modulus(&zetas[..2], &maps[..2], &apart),
            Err(Error::InvalidOverlap(_))
        ));
    }

    #[test]
    fn coefficient_interpolation() {
        let f = ParamFamily::translated_discs(
            uniform_grid(3),
            1.0,
            c(0.0, 0.05),
            (-0.4, 0.4),
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1e-4, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(2e-4, 0.0)],
        )
        .unwrap();
        assert!((f.coefficients(0.5)[2] - c(1.5e-4, 0.0)).norm() < 1e-19);
        assert_eq!(f.len(), 3);
        assert!((f.pairs[2].domain().centroid() - c(0.0, 0.05)).norm() < 1e-9);
    }

    #[test]
    fn identity_family() {
        let f = ParamFamily::translated_discs(
            uniform_grid(3),
            1.0,
            c(0.0, 0.05),
            (-0.4, 0.4),
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let s = FamilySettings::new(1.0 / 32.0, Mode::Practical, 4.0, 1.0, 4);
        let run = run_family(&f, &s).unwrap();
        assert!(run.report.failed.is_empty());
        assert_eq!(run.report.max_output_modulus(), 0.0);
        assert!(run.report.entries.iter().all(|e| e.residual == 0.0));
    }
}
