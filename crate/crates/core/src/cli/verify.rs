//! Invariant suites behind `verify`.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{m2_of, prepare_single, write_json};
use crate::cutoff::{build_cutoff, dbar_chi_sup, default_tau_tilde, overlap_mismatch};
use crate::dbar::{quadrature_tolerance, solve_dbar, Form01Sample, Target};
use crate::error::{Error, Result};
use crate::geometry::region::{Disc, Region, Shape};
use crate::holo::{invert_near_identity, preimage_count, HoloMap};
use crate::iteration::constants::{check_sequence_lemma, derive_rho};
use crate::iteration::family::{run_family, FamilySettings};
use crate::iteration::run_split;
use crate::splitting::{split_additive, MapFn};

pub const SUITES: [&str; 8] = ["geometry", "cutoff", "holo", "dbar", "splitting", "sequence", "iteration", "family"];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub pass: bool,
    pub detail: String,
}

fn outcome(suite: &str, r: Result<(bool, String)>) -> SuiteResult {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("{}: {e}", e.kind())));
    SuiteResult { suite: suite.into(), pass, detail }
}

fn geometry(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let p = cfg.pair_at(0.0)?;
    let t = default_tau_tilde(&p);
    let adm = p.admissible();
    let ok = adm.iter().all(|x| *x) && [0.5 * t, t].iter().all(|tau| overlap_mismatch(&p, *tau, 1.0 / 128.0).is_none());
    Ok((ok, format!("admissible {adm:?}, sep {:.4}", p.sep())))
}

fn cutoff(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let p = cfg.pair_at(0.0)?;
    let chi = build_cutoff(&p, default_tau_tilde(&p))?;
    let (l, r) = chi.transition();
    let d = 1e-5;
    let fd = (0..=2000)
        .map(|k| C64::new(l + (r - l) * k as f64 / 2000.0, 0.0))
        .map(|z| 0.5 * (chi.chi(z + d) - chi.chi(z - d)).abs() / (2.0 * d))
        .fold(0.0, f64::max);
    let sup = dbar_chi_sup(&chi);
    Ok(((fd - sup).abs() <= 1e-3 * sup, format!("sup|dbar chi| {sup:.6}, sampled {fd:.6}")))
}

fn holo(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = 1.0 / 32.0;
    let shape: Arc<dyn Shape> = Arc::new(Disc { center: C64::new(0.0, 0.0), radius: 0.5 });
    let d = Region::new(shape, h);
    let (delta, eps) = (0.2, 0.05);
    let mut checked = 0;
    for _ in 0..10 {
        let co: Vec<C64> = (0..4)
            .map(|k| if k == 1 { 1.0 } else { 0.0 } + 0.008 * C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let phi = HoloMap::polynomial(co, Region::points(vec![]));
        let inv = invert_near_identity(&phi, &d, delta, eps)?;
        let contour = crate::geometry::region::offset(&d, delta).star_contour(C64::new(0.0, 0.0), 256)?;
        for w in inv.domain().samples().iter().step_by(97) {
            if preimage_count(&|z| phi.eval(z), &contour, *w)? != 1 {
                return Ok((false, format!("preimage count ≠ 1 at {w}")));
            }
            checked += 1;
        }
    }
    Ok((true, format!("10 inversions, {checked} degree checks")))
}

fn dbar(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let dom = cfg.domain_at(0.0)?;
    let h = cfg.h.max(1.0 / 64.0);
    let eps = 0.01;
    let f = Form01Sample::from_fn(&dom, eps, h, |_| C64::new(1.0, 0.0))?;
    let sol = solve_dbar(&f, &dom, eps, eps, Target::Closure)?;
    let res = sol.residual.unwrap_or(f64::INFINITY);
    let tol = quadrature_tolerance(h, 1.0);
    let ok = res <= tol && sol.sup() <= sol.constant;
    Ok((ok, format!("residual {res:.2e} (tol {tol:.2e}), sup|u| {:.3} ≤ C {:.3}", sol.sup(), sol.constant)))
}

fn splitting(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let run = prepare_single(cfg)?;
    let (ctx, k) = (&run.ctx, &run.constants);
    let c: MapFn = Arc::new(|z| 1e-3 * z);
    let s = split_additive(ctx, c, 2.0 * k.tau, 4.0 * k.tau, k.m3, true)?;
    let ok = s.identity_residual <= 10.0 * s.tolerance
        && s.a_norm <= s.bound
        && s.b_norm <= s.bound
        && s.a_residual <= s.tolerance
        && s.b_residual <= s.tolerance;
    Ok((
        ok,
        format!(
            "identity {:.2e}, |a| {:.2e} |b| {:.2e} ≤ {:.2e}, dbar {:.2e}/{:.2e} (tol {:.2e})",
            s.identity_residual, s.a_norm, s.b_norm, s.bound, s.a_residual, s.b_residual, s.tolerance
        ),
    ))
}

fn sequence(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..200 {
        let a = 10f64.powf(rng.gen_range(-8.0..1.0));
        let b = 10f64.powf(rng.gen_range(0.0..6.0));
        let c = 10f64.powf(rng.gen_range(0.0..6.0));
        let e0 = rng.gen_range(0.0..1.0) * derive_rho(a, b, c)?;
        if !check_sequence_lemma(a, b, c, e0) {
            return Ok((false, format!("fails for a={a:e} B={b:e} C={c:e} ε₀={e0:e}")));
        }
        if check_sequence_lemma(a, b, c, a / (16.0 * b)) {
            return Ok((false, "boundary case ε₀ = a/(16B) accepted".into()));
        }
    }
    Ok((true, "200 random triples".into()))
}

fn iteration(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let run = prepare_single(cfg)?;
    let out = run_split(&run.gamma, &run.ctx, &run.constants, cfg.eta, cfg.max_m)?;
    let t = &out.trace;
    let ok = t.residual <= 1e-8 && t.injective.iter().all(|x| *x) && t.degree_ok;
    Ok((
        ok,
        format!(
            "{} steps, residual {:.2e}, injective {:?}, degree {}, L {:.5}",
            t.steps.len(),
            t.residual,
            t.injective,
            t.degree_ok,
            t.lipschitz
        ),
    ))
}

fn family(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let fam = cfg.family(3)?;
    let cal = m2_of(cfg)?;
    let settings = FamilySettings {
        tau0: cfg.tau0,
        tau: cfg.tau,
        mu: cfg.mu,
        ..FamilySettings::new(cfg.h.max(1.0 / 64.0), cfg.mode, cal.m2, cfg.eta, cfg.max_m)
    };
    let r = run_family(&fam, &settings)?.report;
    let ok = r.failed.is_empty() && r.max_output_modulus().is_finite() && r.lipschitz_spread <= 1.5;
    Ok((ok, format!("3 ζ values, κ {:.3}, Lipschitz spread {:.4}", r.kappa, r.lipschitz_spread)))
}

/// Runs one suite by name.
pub fn run_suite(cfg: &ExperimentConfig, name: &str) -> Result<SuiteResult> {
    let r = match name {
        "geometry" => geometry(cfg),
        "cutoff" => cutoff(cfg),
        "holo" => holo(cfg),
        "dbar" => dbar(cfg),
        "splitting" => splitting(cfg),
        "sequence" => sequence(cfg),
        "iteration" => iteration(cfg),
        "family" => family(cfg),
        _ => return Err(Error::InvalidParameter(format!("unknown suite {name:?}; known: {}", SUITES.join(", ")))),
    };
    Ok(outcome(name, r))
}

pub fn cmd_verify(cfg: &ExperimentConfig, suite: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let names: Vec<&str> = match suite {
        Some(s) => vec![s],
        None => SUITES.to_vec(),
    };
    let mut results = Vec::new();
    for n in names {
        let r = run_suite(cfg, n)?;
        writeln!(out, "{} {:<10} {}", if r.pass { "PASS" } else { "FAIL" }, r.suite, r.detail)?;
        results.push(r);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.suite.as_str()).collect();
    writeln!(out, "{}/{} suites passed", results.len() - failed.len(), results.len())?;
    write_json(&cfg.output_dir(), "verify.json", &results)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed.join(", ")))
    }
}
