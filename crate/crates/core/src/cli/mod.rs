//! Command-line front end: `split`, `sweep`, `verify`, `constants`, `table`.

pub mod config;
pub mod verify;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::cutoff::{build_cutoff, default_tau_tilde};
use crate::error::{Error, Result};
use crate::geometry::pair::PairSet;
use crate::holo::HoloMap;
use crate::iteration::constants::{constants, epsilon_threshold, Constants};
use crate::iteration::family::{run_family, FamilySettings};
use crate::iteration::{read_trace_csv, resolve_scales, run_split, StepRecord};
use crate::splitting::{calibrate_m2, M2Calibration, SplitContext};
pub use config::{default_config, parse_config, ExperimentConfig, OUTPUT_ENV};

#[derive(Debug, Parser)]
#[command(name = "cartan-split", version, about = "Compositional splitting of near-identity holomorphic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split γ at ζ = 0 and write the step trace.
    Split {
        #[arg(long)]
        config: PathBuf,
    },
    /// Split every γ_ζ of the family and write the continuity report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suites.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the constants of the ζ = 0 pair.
    Constants {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a convergence table from a trace CSV.
    Table {
        #[arg(long)]
        trace: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// The `M₂` of a config: fixed, or calibrated from its seed.
pub fn m2_of(cfg: &ExperimentConfig) -> Result<M2Calibration> {
    match cfg.m2 {
        Some(m2) => Ok(M2Calibration { m2, max_ratio: f64::NAN, trials: 0 }),
        None => calibrate_m2(cfg.seed, cfg.calibration_trials),
    }
}

/// Context, constants and `γ` of the ζ = 0 member.
pub struct SingleRun {
    pub ctx: SplitContext,
    pub constants: Constants,
    pub gamma: HoloMap,
    pub calibration: M2Calibration,
}

pub fn prepare_single(cfg: &ExperimentConfig) -> Result<SingleRun> {
    let pair = cfg.pair_at(0.0)?;
    let chi = build_cutoff(&pair, default_tau_tilde(&pair))?;
    let s = resolve_scales(&pair, cfg.mode, cfg.tau0, cfg.tau, cfg.mu);
    let calibration = m2_of(cfg)?;
    let k = constants(&pair, &chi, s.tau, s.tau0, s.mu, calibration.m2, cfg.mode)?;
    let ctx = SplitContext::new(pair, chi, cfg.h, s.tau0)?;
    let gamma = HoloMap::polynomial(cfg.coefficients0(), ctx.region(PairSet::C, 5.0 * s.tau));
    Ok(SingleRun { ctx, constants: k, gamma, calibration })
}

pub fn cmd_split(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let run = prepare_single(cfg)?;
    let res = run_split(&run.gamma, &run.ctx, &run.constants, cfg.eta, cfg.max_m)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let trace_path = dir.join("trace.csv");
    res.trace.write_csv(fs::File::create(&trace_path)?)?;
    let summary = json!({
        "mode": cfg.mode,
        "constants": run.constants,
        "m2_calibration": run.calibration,
        "trace": res.trace,
    });
    let p = write_json(&dir, "split.json", &summary)?;
    let t = &res.trace;
    writeln!(
        out,
        "steps {}  eps0 {:.3e}  residual {:.3e}  |alpha-Id| {:.3e}  |beta-Id| {:.3e}  injective {:?}  degree {}",
        t.steps.len(),
        t.eps0,
        t.residual,
        t.alpha_norm,
        t.beta_norm,
        t.injective,
        t.degree_ok
    )?;
    writeln!(out, "wrote {} and {}", trace_path.display(), p.display())?;
    Ok(())
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let family = cfg.family(cfg.zeta_count)?;
    let cal = m2_of(cfg)?;
    let settings = FamilySettings {
        tau0: cfg.tau0,
        tau: cfg.tau,
        mu: cfg.mu,
        ..FamilySettings::new(cfg.h, cfg.mode, cal.m2, cfg.eta, cfg.max_m)
    };
    let run = run_family(&family, &settings)?;
    let r = &run.report;
    let p = write_json(&cfg.output_dir(), "family.json", &json!({"m2_calibration": cal, "report": r}))?;
    writeln!(out, "{:>8} {:>12} {:>12} {:>12} {:>6}", "zeta", "residual", "|alpha-Id|", "|beta-Id|", "steps")?;
    for e in &r.entries {
        writeln!(out, "{:>8.4} {:>12.3e} {:>12.3e} {:>12.3e} {:>6}", e.zeta, e.residual, e.alpha_norm, e.beta_norm, e.steps)?;
    }
    writeln!(out, "{:>8} {:>8} {:>12} {:>12} {:>12}", "zeta0", "zeta1", "input", "alpha", "beta")?;
    for (i, row) in r.input_moduli.iter().enumerate() {
        let a = r.alpha_moduli.get(i).map_or(f64::NAN, |x| x.modulus);
        let b = r.beta_moduli.get(i).map_or(f64::NAN, |x| x.modulus);
        writeln!(out, "{:>8.4} {:>8.4} {:>12.3e} {:>12.3e} {:>12.3e}", row.zeta0, row.zeta1, row.modulus, a, b)?;
    }
    writeln!(out, "kappa {:.3}  lipschitz spread {:.4}", r.kappa, r.lipschitz_spread)?;
    writeln!(out, "wrote {}", p.display())?;
    if !r.failed.is_empty() {
        return Err(Error::PartialResult(r.failed.clone()));
    }
    Ok(())
}

pub fn cmd_constants(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let run = prepare_single(cfg)?;
    let k = &run.constants;
    let eps_eta = epsilon_threshold(cfg.eta, k)?;
    writeln!(out, "mode            {}", k.mode)?;
    writeln!(out, "C (operator)    {:.6}", k.c_op)?;
    writeln!(out, "sup|dbar chi|   {:.6}", k.dbar_chi_sup)?;
    writeln!(out, "M3 = 1 + C*sup  {:.6}", k.m3)?;
    writeln!(out, "M2 (calibrated) {:.6}  from {} trials", k.m2, run.calibration.trials)?;
    writeln!(out, "M4              {:.6e}", k.m4)?;
    writeln!(out, "M5              {:.6e}", k.m5)?;
    writeln!(out, "K, const1       {}, {}", k.k, k.const1)?;
    writeln!(out, "tau0, tau, mu   {:.6e}, {:.6e}, {:.6e}", k.tau0, k.tau, k.mu)?;
    writeln!(out, "R0              {:.6e}", k.r0)?;
    writeln!(out, "eps_eta         {:.6e}  (eta = {})", eps_eta, cfg.eta)?;
    write_json(
        &cfg.output_dir(),
        "constants.json",
        &json!({"constants": k, "eps_eta": eps_eta, "eta": cfg.eta, "m2_calibration": run.calibration}),
    )?;
    Ok(())
}

/// Text table of a trace with the measured contraction ratios.
pub fn render_table(steps: &[StepRecord]) -> String {
    let mut s = format!(
        "{:>3} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>5}\n",
        "m", "R_m", "eps_in", "eps_out", "out/in^2", "bound", "alpha", "beta", "DE"
    );
    for r in steps {
        let ratio = if r.eps_in > 0.0 { r.eps_out / (r.eps_in * r.eps_in) } else { f64::NAN };
        s += &format!(
            "{:>3} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>5}\n",
            r.m, r.r_m, r.eps_in, r.eps_out, ratio, r.bound, r.alpha_norm, r.beta_norm, r.de_ok
        );
    }
    s
}

pub fn cmd_table(trace: &Path, out: &mut dyn Write) -> Result<()> {
    let f = fs::File::open(trace).map_err(|e| Error::Io(format!("{}: {e}", trace.display())))?;
    let steps = read_trace_csv(f)?;
    out.write_all(render_table(&steps).as_bytes())?;
    Ok(())
}

/// Runs a parsed command line, writing human output to `out`.
pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Split { config } => cmd_split(&load(config)?, out),
        Command::Sweep { config } => cmd_sweep(&load(config)?, out),
        Command::Constants { config } => cmd_constants(&load(config)?, out),
        Command::Table { trace } => cmd_table(trace, out),
        Command::Verify { suite, config } => {
            let cfg = match config {
                Some(p) => load(p)?,
                None => default_config(),
            };
            verify::cmd_verify(&cfg, suite.as_deref(), out)
        }
    }
}

/// Machine-readable error record.
pub fn error_record(e: &Error) -> serde_json::Value {
    json!({"error": e.kind(), "message": e.to_string()})
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let rec = error_record(&e);
            eprintln!("{rec}");
            let dir = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).or_else(|| match &cli.command {
                Command::Split { config } | Command::Sweep { config } | Command::Constants { config } => {
                    load(config).ok().map(|c| c.output_dir())
                }
                _ => None,
            });
            if let Some(d) = dir {
                let _ = write_json(&d, "error.json", &rec);
            }
            1
        }
    }
}
