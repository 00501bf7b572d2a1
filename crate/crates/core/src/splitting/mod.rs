//! Additive splitting `c = b − a` through a cutoff and a ∂̄ correction, and
//! one compositional step `γ̃ = β⁻¹∘γ∘α`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cutoff::Cutoff;
use crate::dbar::{quadrature_tolerance, solve_dbar, Form01Sample, Target};
use crate::error::{Error, Result};
use crate::geometry::pair::{CartanPair, PairSet};
use crate::geometry::region::{offset, Region, Shape};
use crate::holo::{dbar_samples, fixed_point_solve, injectivity_margin, HoloMap, Repr, INVERSE_TOL};
use crate::iteration::constants::{Constants, Mode};
use crate::lattice::{Lattice, LatticeField};

pub type MapFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Pair, cutoff and the lattice window every field of a run lives on.
#[derive(Debug, Clone)]
pub struct SplitContext {
    pub pair: CartanPair,
    pub cutoff: Cutoff,
    pub h: f64,
    pub tau0: f64,
    pub window: Lattice,
}

impl SplitContext {
    pub fn new(pair: CartanPair, cutoff: Cutoff, h: f64, tau0: f64) -> Result<Self> {
        if !(h > 0.0) || !(tau0 > 0.0) {
            return Err(Error::InvalidParameter("grid spacing and τ₀ must be positive".into()));
        }
        let window = Lattice::covering(&pair.domain().bbox().expand(tau0 + 8.0 * h), h);
        Ok(Self { pair, cutoff, h, tau0, window })
    }

    pub fn region(&self, set: PairSet, delta: f64) -> Region {
        self.pair.region(set, delta, self.h)
    }
}

/// `z ↦ Φ(z) − z`.
pub fn difference(map: &HoloMap) -> MapFn {
    let m = map.clone();
    Arc::new(move |z| m.eval(z) - z)
}

fn sup_on(f: &(dyn Fn(C64) -> C64 + Sync), pts: &[C64]) -> f64 {
    pts.par_iter().map(|z| f(*z).norm()).reduce(|| 0.0, f64::max)
}

/// `max |∂̄f|` over region samples at least 3h inside the domain, which keeps
/// the stencils clear of the support truncation on `bΩ(τ₂)`.
pub fn interior_dbar_residual(f: &(dyn Fn(C64) -> C64 + Sync), region: &Region, ctx: &SplitContext) -> Result<f64> {
    let dom = ctx.pair.domain();
    let h = ctx.h;
    let pts = region.samples();
    let vals: Vec<C64> = pts.par_iter().map(|z| f(*z)).collect();
    let d = dbar_samples(pts, &vals, h)?;
    let r = d
        .iter()
        .filter(|(z, _)| dom.signed_distance(*z) <= -3.0 * h)
        .fold(f64::NAN, |m: f64, (_, v)| if m.is_nan() { v.norm() } else { m.max(v.norm()) });
    if r.is_nan() {
        return Err(Error::InvalidGrid("no interior point for the holomorphy check".into()));
    }
    Ok(r)
}

#[derive(Clone)]
pub struct AdditiveSplit {
    c: MapFn,
    g: Arc<LatticeField>,
    cutoff: Cutoff,
    pub tau1: f64,
    pub tau2: f64,
    pub a_region: Region,
    pub b_region: Region,
    pub c_norm: f64,
    pub a_norm: f64,
    pub b_norm: f64,
    /// `M₃·‖c‖_{C(τ₂)}`.
    pub bound: f64,
    /// `max |c − (b − a)|` over the `C(τ₁)` grid.
    pub identity_residual: f64,
    pub a_residual: f64,
    pub b_residual: f64,
    pub tolerance: f64,
}

impl std::fmt::Debug for AdditiveSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdditiveSplit")
            .field("c_norm", &self.c_norm)
            .field("a_norm", &self.a_norm)
            .field("b_norm", &self.b_norm)
            .field("identity_residual", &self.identity_residual)
            .finish()
    }
}

impl AdditiveSplit {
    /// `E(c) = −g + (χ − 1)·c`.
    pub fn a(&self, z: C64) -> C64 {
        -self.g.interpolate(z) + (self.cutoff.chi(z) - 1.0) * (self.c)(z)
    }

    /// `Z(c) = −g + χ·c`.
    pub fn b(&self, z: C64) -> C64 {
        -self.g.interpolate(z) + self.cutoff.chi(z) * (self.c)(z)
    }

    pub fn g(&self) -> &Arc<LatticeField> {
        &self.g
    }

    pub fn a_fn(&self) -> MapFn {
        let s = self.clone();
        Arc::new(move |z| s.a(z))
    }

    pub fn b_fn(&self) -> MapFn {
        let s = self.clone();
        Arc::new(move |z| s.b(z))
    }
}

/// Splits `c` (holomorphic on `C(τ₂)`) into `a` on `A(τ₁)` and `b` on `B(τ₁)`.
pub fn split_additive(
    ctx: &SplitContext,
    c: MapFn,
    tau1: f64,
    tau2: f64,
    m3: f64,
    check_input: bool,
) -> Result<AdditiveSplit> {
    if !(0.0 < tau1 && tau1 < tau2 && tau2 <= ctx.tau0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < τ₁ < τ₂ ≤ τ₀ (got τ₁={tau1}, τ₂={tau2}, τ₀={})",
            ctx.tau0
        )));
    }
    let h = ctx.h;
    let c_region = ctx.region(PairSet::C, tau2);
    let c_norm = sup_on(&*c, c_region.samples());
    let tolerance = quadrature_tolerance(h, c_norm);
    if check_input && c_norm > 0.0 {
        let r = interior_dbar_residual(&*c, &c_region, ctx)?;
        if r > tolerance {
            return Err(Error::NotHolomorphic { residual: r, tolerance });
        }
    }

    // f = (∂̄χ)·c on C(τ₂), zero elsewhere in Ω(τ₂)
    let chi = ctx.cutoff.clone();
    let (l, r) = chi.transition();
    let c_shape = c_region.shape().clone();
    let strip_box = {
        let bb = c_region.shape().bbox();
        crate::lattice::BBox::new(l - 2.0 * h, r + 2.0 * h, bb.ymin, bb.ymax)
    };
    let dom = ctx.pair.domain().clone();
    // the extension by zero is smooth across the vertical sides of bC(τ₂)
    let support_ok = Lattice::covering(&strip_box, h)
        .points()
        .par_iter()
        .filter(|z| chi.in_transition(**z) && dom.signed_distance(**z) < tau2)
        .all(|z| c_shape.contains(*z));
    if !support_ok {
        return Err(Error::InvalidSupport("∂̄χ does not vanish near the vertical sides of bC(τ₂)".into()));
    }
    let cf = c.clone();
    let chi2 = chi.clone();
    let f = Form01Sample::from_fn_masked(
        &strip_box,
        h,
        move |z| chi2.dbar_chi(z) * cf(z),
        |z| chi.in_transition(z) && c_shape.contains(z),
    )?;
    let g = if f.support().next().is_none() {
        Arc::new(LatticeField { lattice: ctx.window, values: vec![C64::new(0.0, 0.0); ctx.window.len()] })
    } else {
        let sol = solve_dbar(&f, dom.as_ref(), tau2, ctx.tau0, Target::Window(ctx.window))?;
        sol.field.expect("window solves keep the field")
    };

    let a_region = ctx.region(PairSet::A, tau1);
    let b_region = ctx.region(PairSet::B, tau1);
    let mut split = AdditiveSplit {
        c,
        g,
        cutoff: ctx.cutoff.clone(),
        tau1,
        tau2,
        a_region,
        b_region,
        c_norm,
        a_norm: 0.0,
        b_norm: 0.0,
        bound: m3 * c_norm,
        identity_residual: 0.0,
        a_residual: 0.0,
        b_residual: 0.0,
        tolerance,
    };
    let (af, bf) = (split.a_fn(), split.b_fn());
    split.a_norm = sup_on(&*af, split.a_region.samples());
    split.b_norm = sup_on(&*bf, split.b_region.samples());
    let c1 = ctx.region(PairSet::C, tau1);
    split.identity_residual = c1
        .samples()
        .par_iter()
        .map(|z| ((split.c)(*z) - (split.b(*z) - split.a(*z))).norm())
        .reduce(|| 0.0, f64::max);
    split.a_residual = interior_dbar_residual(&*af, &split.a_region, ctx)?;
    split.b_residual = interior_dbar_residual(&*bf, &split.b_region, ctx)?;
    Ok(split)
}

/// Fixed point `w ← y − b(w)` for `w + b(w) = y`; returns `(w, |w + b(w) − y|)`.
pub fn invert_displacement(b: &(dyn Fn(C64) -> C64 + Sync), y: C64) -> (C64, f64) {
    fixed_point_solve(|w| w + b(w), y)
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub alpha: HoloMap,
    pub beta: HoloMap,
    /// `γ̃ − Id` tabulated on the context window.
    pub c_next: Arc<LatticeField>,
    pub gamma_next: HoloMap,
    pub split: AdditiveSplit,
    pub eps_in: f64,
    pub eps_out: f64,
    /// `(M₅/r)·ε_in²`.
    pub bound: f64,
    pub alpha_norm: f64,
    pub beta_norm: f64,
    /// Injectivity certificates of α on `A(τ+r/4)` and β on `B(τ+r/4)`.
    pub injective: [bool; 2],
    /// Sample-level inclusions `α(C(τ+r/8)) ⊂ C(τ+r)` and `γ∘α(·) ∈ β(B(τ+r/4))`.
    pub ranges_ok: bool,
    pub threshold_ok: bool,
}

/// One step on `γ` given on `C(τ + r)`.
pub fn split_step(ctx: &SplitContext, gamma: &HoloMap, tau: f64, r: f64, k: &Constants) -> Result<StepResult> {
    if !(r > 0.0 && tau > 0.0) {
        return Err(Error::InvalidParameter("τ and r must be positive".into()));
    }
    let c = difference(gamma);
    let c_outer = ctx.region(PairSet::C, tau + r);
    let eps_in = sup_on(&*c, c_outer.samples());
    let threshold_ok = eps_in < r / (16.0 * k.m4);
    if k.mode == Mode::Certified && !threshold_ok {
        return Err(Error::Threshold(format!(
            "‖γ − Id‖ = {eps_in:e} on C(τ+r) is not below r/(16M₄) = {:e}",
            r / (16.0 * k.m4)
        )));
    }
    let split = split_additive(ctx, c.clone(), tau + 0.5 * r, tau + r, k.m3, false)?;
    let (af, bf) = (split.a_fn(), split.b_fn());

    let a_inner = ctx.region(PairSet::A, tau + 0.25 * r);
    let b_inner = ctx.region(PairSet::B, tau + 0.25 * r);
    let a_tube = offset(&a_inner, 0.25 * r);
    let b_tube = offset(&b_inner, 0.25 * r);
    let a_disp = HoloMap::new(Repr::Function(af.clone()), a_tube);
    let b_disp = HoloMap::new(Repr::Function(bf.clone()), b_tube);
    let injective = [
        injectivity_margin(&a_disp, &a_inner, 0.25 * r)?.0,
        injectivity_margin(&b_disp, &b_inner, 0.25 * r)?.0,
    ];
    if k.mode == Mode::Certified && !(injective[0] && injective[1]) {
        return Err(Error::Threshold(format!("injectivity not certified at r = {r:e}")));
    }

    let af2 = af.clone();
    let alpha = HoloMap::from_fn(move |z| z + af2(z), split.a_region.clone());
    let bf2 = bf.clone();
    let beta = HoloMap::from_fn(move |z| z + bf2(z), split.b_region.clone());

    // γ̃ − Id on the whole window
    let g2 = gamma.clone();
    let step = |z: C64| -> (C64, f64) {
        let y = g2.eval(z + af(z));
        let (w, res) = invert_displacement(&*bf, y);
        (w - z, res)
    };
    let win = ctx.window;
    let c_next: Vec<C64> = (0..win.len()).into_par_iter().map(|i| step(win.point_at(i)).0).collect();
    let c_next = Arc::new(LatticeField { lattice: win, values: c_next });

    let c_inner = ctx.region(PairSet::C, tau + 0.125 * r);
    let b_dom = ctx.region(PairSet::B, tau + 0.25 * r);
    let ranges_ok = c_inner.samples().par_iter().all(|z| {
        let x = z + af(*z);
        if !c_outer.contains(x) {
            return false;
        }
        let (w, res) = invert_displacement(&*bf, gamma.eval(x));
        res <= INVERSE_TOL && b_dom.contains(w)
    });
    if k.mode == Mode::Certified && !ranges_ok {
        return Err(Error::Geometry("α(C(τ+r/8)) ⊂ C(τ+r) and γ∘α ∈ β(B(τ+r/4))".into()));
    }
    let cn = c_next.clone();
    let eps_out = c_inner.samples().par_iter().map(|z| cn.interpolate(*z).norm()).reduce(|| 0.0, f64::max);
    let gamma_next = HoloMap::displacement(c_next.clone(), c_inner);

    Ok(StepResult {
        alpha,
        beta,
        c_next,
        gamma_next,
        alpha_norm: split.a_norm,
        beta_norm: split.b_norm,
        split,
        eps_in,
        eps_out,
        bound: k.m5 / r * eps_in * eps_in,
        injective,
        ranges_ok,
        threshold_ok,
    })
}

/// Outcome of the composition-estimate calibration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct M2Calibration {
    pub m2: f64,
    pub max_ratio: f64,
    pub trials: usize,
}

/// Calibrates `M₂ = max(1, 2·max ‖c̃ − (c + a − b)‖·δ/ε²)` over random
/// near-identity polynomial triples on `V = D(0,1)`, `δ = 1/2`, `ε < δ/4`.
pub fn calibrate_m2(seed: u64, trials: usize) -> Result<M2Calibration> {
    if trials == 0 {
        return Err(Error::InvalidParameter("calibration needs at least one trial".into()));
    }
    let delta = 0.5;
    let h = 1.0 / 16.0;
    let disc = |r: f64| -> Region {
        let s: Arc<dyn Shape> = Arc::new(crate::geometry::region::Disc { center: C64::new(0.0, 0.0), radius: r });
        Region::new(s, h / 2.0)
    };
    let v = disc(1.0);
    let v_delta = disc(1.0 + delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let target = 10f64.powf(rng.gen_range(-5.0..-1.0)) * delta / 4.0;
        let mut poly = || -> Vec<C64> {
            let deg = rng.gen_range(0..=3);
            let mut co: Vec<C64> = (0..=deg)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let scale: f64 = v_delta
                .samples()
                .iter()
                .map(|z| co.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a).norm())
                .fold(0.0, f64::max);
            let s = target * rng.gen_range(0.3..1.0) / scale.max(1e-300);
            co.iter_mut().for_each(|x| *x *= s);
            co
        };
        let (pa, pb, pc) = (poly(), poly(), poly());
        let ev = |co: &[C64], z: C64| co.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a);
        let eps = [&pa, &pb, &pc]
            .iter()
            .map(|co| v_delta.samples().iter().map(|z| ev(co, *z).norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
            * (1.0 + 1e-12);
        if eps == 0.0 {
            continue;
        }
        let dev = v
            .samples()
            .par_iter()
            .map(|z| {
                let x = z + ev(&pa, *z);
                let y = x + ev(&pc, x);
                let (w, _) = invert_displacement(&|u| ev(&pb, u), y);
                let ct = w - z;
                (ct - (ev(&pc, *z) + ev(&pa, *z) - ev(&pb, *z))).norm()
            })
            .reduce(|| 0.0, f64::max);
        worst = worst.max(dev * delta / (eps * eps));
    }
    Ok(M2Calibration { m2: (2.0 * worst).max(1.0), max_ratio: worst, trials })
}
