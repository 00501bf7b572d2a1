//! The iterative compositional splitting and parameter-family sweeps.

pub mod constants;
pub mod family;

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::defining::{default_profile, tau0_for};
use crate::geometry::pair::{CartanPair, PairSet};
use crate::geometry::region::Region;
use crate::holo::{injectivity_margin, invert_near_identity, preimage_count, HoloMap, Repr};
use crate::splitting::{split_step, SplitContext};
use constants::{epsilon_threshold, Constants, Mode};

/// Floor of the stopping tolerance in practical mode.
pub const STOP_FLOOR: f64 = 1e-12;

/// Certified thresholds sit far below [`STOP_FLOOR`], so certified runs
/// stop at the rounding level of the coordinates instead.
pub fn rounding_floor(points: &[C64]) -> f64 {
    64.0 * f64::EPSILON * points.iter().fold(1.0f64, |m, z| m.max(z.norm()))
}
pub const DEFAULT_MAX_M: usize = 12;

/// Practical mode refuses inputs with `‖γ − Id‖ ≥ τ/4`: beyond that the
/// maps leave the nested regions the iteration works on.
pub fn practical_cap(k: &Constants) -> f64 {
    k.tau / 4.0
}

/// Working scales `τ₀`, `τ` and `μ` of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub tau0: f64,
    pub tau: f64,
    pub mu: f64,
}

/// Defaults: `μ = reach/8`, `τ = τ₀/5` with `τ₀ = μ/1024` (certified) or
/// `τ₀ = (s₂ − s₁)/160` (practical).
pub fn default_scales(pair: &CartanPair, mode: Mode) -> Scales {
    let (mu, _) = default_profile(pair.domain());
    let tau0 = match mode {
        Mode::Certified => tau0_for(mu),
        Mode::Practical => {
            let (s1, s2) = pair.strip();
            ((s2 - s1) / 160.0).min(mu)
        }
    };
    Scales { tau0, tau: tau0 / 5.0, mu }
}

/// [`default_scales`] with explicit overrides; `τ` defaults to `τ₀/5`.
pub fn resolve_scales(pair: &CartanPair, mode: Mode, tau0: Option<f64>, tau: Option<f64>, mu: Option<f64>) -> Scales {
    let d = default_scales(pair, mode);
    let tau0 = tau0.unwrap_or(d.tau0);
    Scales { tau0, tau: tau.unwrap_or(tau0 / 5.0), mu: mu.unwrap_or(d.mu) }
}

/// One row of the trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub m: usize,
    #[serde(rename = "R_m")]
    pub r_m: f64,
    pub eps_in: f64,
    pub eps_out: f64,
    pub bound: f64,
    pub alpha_norm: f64,
    pub beta_norm: f64,
    /// `max |c − (b − a)|` of the additive split at this step.
    pub residual: f64,
    /// All three `< R_m/32` estimates.
    pub de_ok: bool,
}

impl StepRecord {
    pub fn de_checks(&self) -> [bool; 3] {
        let lim = self.r_m / 32.0;
        [self.eps_in < lim, self.alpha_norm < lim, self.beta_norm < lim]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub mode: Mode,
    pub steps: Vec<StepRecord>,
    pub eps0: f64,
    pub eps_eta: f64,
    pub stop_tolerance: f64,
    /// `sup |γ − β∘α⁻¹|` over the `C(τ)` grid.
    pub residual: f64,
    /// `‖α − Id‖` on `A(2τ)` and `‖β − Id‖` on `B(2τ)`.
    pub alpha_norm: f64,
    pub beta_norm: f64,
    pub eta_ok: bool,
    /// Injectivity certificates of α on `A(2τ)` and β on `B(2τ)`.
    pub injective: [bool; 2],
    /// Tested targets in `A(51τ/16)` (shrunk when `‖α − Id‖ > τ/32`) have
    /// one preimage in `A(13τ/4)`.
    pub degree_ok: bool,
    /// `‖α̃_m − α̃_{m−1}‖` on `A(2τ)`, one entry per step.
    pub composite_increments: Vec<f64>,
    /// `M₃·Σ_{k>m} ε_k` estimated from the last measured ε.
    pub tail_bound: f64,
    /// Largest difference quotient of `α⁻¹` between neighbouring grid points of `C(τ)`.
    pub lipschitz: f64,
}

impl IterationTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_trace_csv(&self.steps, w)
    }
}

pub fn write_trace_csv<W: Write>(steps: &[StepRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if steps.is_empty() {
        out.write_record(["m", "R_m", "eps_in", "eps_out", "bound", "alpha_norm", "beta_norm", "residual", "de_ok"])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    for s in steps {
        out.serialize(s).map_err(|e| Error::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: std::io::Read>(r: R) -> Result<Vec<StepRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<Vec<StepRecord>, _>>()
        .map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub alpha: HoloMap,
    pub beta: HoloMap,
    pub alpha_inv: HoloMap,
    pub trace: IterationTrace,
}

fn sup_dev(map: &HoloMap, pts: &[C64]) -> f64 {
    pts.par_iter().map(|z| (map.eval(*z) - z).norm()).reduce(|| 0.0, f64::max)
}

fn composite(maps: &[HoloMap], domain: Region) -> HoloMap {
    if maps.is_empty() {
        return HoloMap::identity(domain);
    }
    // α⁽⁰⁾∘…∘α⁽ᴹ⁾ applies α⁽ᴹ⁾ first
    HoloMap::new(Repr::Composite(maps.iter().rev().cloned().collect()), domain)
}

/// Splits `γ ≈ β∘α⁻¹` on `C(τ)` by iterating [`split_step`] on the radii
/// `R_m = R₀/8^m` around `4τ`.
pub fn run_split(gamma: &HoloMap, ctx: &SplitContext, k: &Constants, eta: f64, max_m: usize) -> Result<SplitOutcome> {
    let tau = k.tau;
    let eps_eta = epsilon_threshold(eta, k)?;
    let c0 = ctx.region(PairSet::C, 4.0 * tau + k.r0);
    let eps0 = sup_dev(gamma, c0.samples());
    match k.mode {
        Mode::Certified if !(eps0 < eps_eta) => {
            return Err(Error::Aborted { step: 0, reason: format!("ε₀ = {eps0:e} is not below ε_η = {eps_eta:e}") })
        }
        Mode::Practical if !(eps0 < practical_cap(k)) => {
            return Err(Error::Threshold(format!(
                "‖γ − Id‖ = {eps0:e} exceeds the practical cap τ/4 = {:e}",
                practical_cap(k)
            )))
        }
        _ => {}
    }

    let a2 = ctx.region(PairSet::A, 2.0 * tau);
    let b2 = ctx.region(PairSet::B, 2.0 * tau);
    let mut alphas: Vec<HoloMap> = Vec::new();
    let mut betas: Vec<HoloMap> = Vec::new();
    let mut steps = Vec::new();
    let mut increments = Vec::new();
    let mut prev: Vec<C64> = a2.samples().to_vec();
    let mut stop_tol = match k.mode {
        Mode::Practical => STOP_FLOOR,
        Mode::Certified => rounding_floor(c0.samples()),
    };
    let mut g = gamma.clone();
    let mut eps_last = eps0;
    for m in 0..max_m {
        if eps_last <= stop_tol {
            break;
        }
        let r = k.radius(m);
        let st = split_step(ctx, &g, 4.0 * tau, r, k).map_err(|e| Error::Aborted { step: m, reason: e.to_string() })?;
        let rec = StepRecord {
            m,
            r_m: r,
            eps_in: st.eps_in,
            eps_out: st.eps_out,
            bound: st.bound,
            alpha_norm: st.alpha_norm,
            beta_norm: st.beta_norm,
            residual: st.split.identity_residual,
            de_ok: false,
        };
        let rec = StepRecord { de_ok: rec.de_checks().iter().all(|x| *x), ..rec };
        if k.mode == Mode::Certified && !rec.de_ok {
            return Err(Error::Aborted { step: m, reason: format!("distance estimates fail: {:?}", rec.de_checks()) });
        }
        stop_tol = stop_tol.max(100.0 * st.split.identity_residual);
        alphas.push(st.alpha);
        betas.push(st.beta);
        let cur = composite(&alphas, a2.clone()).values(a2.samples());
        increments.push(cur.iter().zip(&prev).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
        prev = cur;
        eps_last = st.eps_out;
        g = st.gamma_next;
        steps.push(rec);
    }

    let alpha = composite(&alphas, a2.clone());
    let beta = composite(&betas, b2.clone());
    let alpha_norm = sup_dev(&alpha, a2.samples());
    let beta_norm = sup_dev(&beta, b2.samples());
    let eta_ok = alpha_norm < eta && beta_norm < eta;
    if k.mode == Mode::Certified && !eta_ok {
        return Err(Error::Aborted { step: steps.len(), reason: "final maps are not η-close to the identity".into() });
    }

    // injectivity of α on A(2τ), β on B(2τ)
    let certify = |maps: &[HoloMap], set: PairSet, inner: &Region| -> Result<bool> {
        let full = composite(maps, ctx.region(set, 4.0 * tau));
        let f = full.clone();
        let diff = HoloMap::from_fn(move |z| f.eval(z) - z, full.domain().clone());
        for r in [2.0 * tau, tau, 0.5 * tau] {
            let r = r * (1.0 - 1e-9);
            if injectivity_margin(&diff, inner, r)?.0 {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let injective = [certify(&alphas, PairSet::A, &a2)?, certify(&betas, PairSet::B, &b2)?];

    // α⁻¹ on C(2τ − ε) ⊇ C(τ)
    let c_set = ctx.region(PairSet::C, 0.0);
    let c2 = ctx.region(PairSet::C, 2.0 * tau);
    let dev = sup_dev(&alpha, c2.samples());
    let eps_inv = (2.0 * dev).max(1e-300);
    if eps_inv >= tau {
        return Err(Error::NumericalFailure {
            reason: "α is too far from the identity to invert on C(τ)".into(),
            residual: dev,
        });
    }
    let alpha_inv = invert_near_identity(&alpha, &c_set, 2.0 * tau, eps_inv)?;
    let c1 = ctx.region(PairSet::C, tau);
    let residual = c1
        .samples()
        .par_iter()
        .map(|z| (gamma.eval(*z) - beta.eval(alpha_inv.eval(*z))).norm())
        .reduce(|| 0.0, f64::max);

    let degree_ok = degree_check(&alphas, ctx, tau, alpha_norm)?;
    let tail_bound = 2.0 * k.m3 * eps_last;
    let lipschitz = measured_lipschitz(&alpha_inv, &c1, ctx.h);

    let trace = IterationTrace {
        mode: k.mode,
        steps,
        eps0,
        eps_eta,
        stop_tolerance: stop_tol,
        residual,
        alpha_norm,
        beta_norm,
        eta_ok,
        injective,
        degree_ok,
        composite_increments: increments,
        tail_bound,
        lipschitz,
    };
    Ok(SplitOutcome { alpha, beta, alpha_inv, trace })
}

// One preimage in A(13τ/4) for a spread of targets in A(13τ/4 − δ), where
// δ = τ/16 unless α moves points further than τ/32.
fn degree_check(alphas: &[HoloMap], ctx: &SplitContext, tau: f64, dev: f64) -> Result<bool> {
    let outer_r = 13.0 * tau / 4.0;
    let outer = ctx.region(PairSet::A, outer_r);
    let full = composite(alphas, outer.clone());
    let n = outer.samples().len().max(1) as f64;
    let centre = outer.samples().iter().sum::<C64>() / n;
    let contour = outer.star_contour(centre, 1024)?;
    let inner_r = outer_r - (tau / 16.0).max(2.0 * dev);
    let inner = ctx.region(PairSet::A, inner_r);
    let a = ctx.pair.shape(PairSet::A);
    let pts = inner.samples();
    let stride = (pts.len() / 64).max(1);
    // the interior spread plus every sample of the outer shell
    let targets = pts.iter().step_by(stride).chain(pts.iter().filter(|z| a.distance(**z) > 0.0));
    let phi = |z: C64| full.eval(z);
    for w in targets {
        if preimage_count(&phi, &contour, *w)? != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn measured_lipschitz(map: &HoloMap, region: &Region, h: f64) -> f64 {
    let pts = region.samples();
    pts.par_iter()
        .map(|z| {
            let w = z + h;
            if region.contains(w) {
                (map.eval(w) - map.eval(*z)).norm() / h
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max)
}
