//! Experiment configuration.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::curve::JordanDomain;
use crate::geometry::pair::{make_cartan_pair, CartanPair};
use crate::iteration::constants::Mode;
use crate::iteration::family::{uniform_grid, ParamFamily};

/// Overrides `output_dir` when set.
pub const OUTPUT_ENV: &str = "CARTAN_SPLIT_OUT";

/// Domain at ζ = 0 plus its translation `ζ·drift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Disc {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        drift: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        drift: [f64; 2],
    },
}

impl DomainSpec {
    pub fn center(&self) -> C64 {
        let (DomainSpec::Disc { center, .. } | DomainSpec::Ellipse { center, .. }) = self;
        C64::new(center[0], center[1])
    }

    pub fn drift(&self) -> C64 {
        let (DomainSpec::Disc { drift, .. } | DomainSpec::Ellipse { drift, .. }) = self;
        C64::new(drift[0], drift[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Coefficients `[re, im]` of `γ` at ζ = 0, constant term first.
    pub coeffs0: Vec<[f64; 2]>,
    /// Coefficients at ζ = 1; defaults to `coeffs0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs1: Option<Vec<[f64; 2]>>,
}

fn default_h() -> f64 {
    1.0 / 128.0
}
fn default_n_b() -> usize {
    1024
}
fn default_zeta_count() -> usize {
    11
}
fn default_eta() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    42
}
fn default_trials() -> usize {
    100
}
fn default_max_m() -> usize {
    crate::iteration::DEFAULT_MAX_M
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// `(s₁, s₂)`.
    pub strip: [f64; 2],
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Boundary polyline resolution.
    #[serde(default = "default_n_b")]
    pub n_b: usize,
    #[serde(default = "default_zeta_count")]
    pub zeta_count: usize,
    #[serde(default = "default_max_m")]
    pub max_m: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Fixed `M₂`; calibrated from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(default = "default_trials")]
    pub calibration_trials: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn bad(field: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {why}"))
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite (got {x})")))
    }
}

/// Parses and validates a JSON config; defaults fill absent fields.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match self.domain {
            DomainSpec::Disc { radius, .. } => positive("domain.radius", radius)?,
            DomainSpec::Ellipse { a, b, .. } => {
                positive("domain.a", a)?;
                positive("domain.b", b)?;
            }
        }
        let [s1, s2] = self.strip;
        if !(s1 < s2) || !s1.is_finite() || !s2.is_finite() {
            return Err(bad("strip bounds", format!("need s1 < s2 (got {s1}, {s2})")));
        }
        if self.map.coeffs0.is_empty() {
            return Err(bad("map.coeffs0", "needs at least one coefficient"));
        }
        if self.map.coeffs1.as_ref().is_some_and(|c| c.is_empty()) {
            return Err(bad("map.coeffs1", "needs at least one coefficient"));
        }
        let all = self.map.coeffs0.iter().chain(self.map.coeffs1.iter().flatten());
        if all.flatten().any(|x| !x.is_finite()) {
            return Err(bad("map", "coefficients must be finite"));
        }
        for (name, v) in [("tau", self.tau), ("tau0", self.tau0), ("mu", self.mu)] {
            if let Some(x) = v {
                positive(name, x)?;
            }
        }
        positive("eta", self.eta)?;
        positive("h", self.h)?;
        if self.h > 0.25 {
            return Err(bad("h", format!("grid spacing {} is coarser than 1/4", self.h)));
        }
        if self.n_b < 16 {
            return Err(bad("n_b", "boundary resolution below 16"));
        }
        if self.zeta_count < 2 {
            return Err(bad("zeta_count", "a sweep needs at least two ζ values"));
        }
        if self.max_m == 0 || self.max_m > 60 {
            return Err(bad("max_m", "must lie in 1..=60"));
        }
        if let Some(m2) = self.m2 {
            if !(m2 >= 1.0) || !m2.is_finite() {
                return Err(bad("m2", format!("must be ≥ 1 (got {m2})")));
            }
        }
        if self.calibration_trials == 0 {
            return Err(bad("calibration_trials", "must be positive"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(bad("output_dir", "empty path"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// `output_dir`, unless the environment overrides it.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| self.output_dir.clone())
    }

    pub fn domain_at(&self, zeta: f64) -> Result<JordanDomain> {
        let c = self.domain.center() + zeta * self.domain.drift();
        match self.domain {
            DomainSpec::Disc { radius, .. } => JordanDomain::disc(radius, c, self.n_b),
            DomainSpec::Ellipse { a, b, .. } => JordanDomain::ellipse(a, b, c, self.n_b),
        }
    }

    pub fn pair_at(&self, zeta: f64) -> Result<CartanPair> {
        let shift = zeta * self.domain.drift();
        make_cartan_pair(Arc::new(self.domain_at(zeta)?), self.strip[0] + shift.re, self.strip[1] + shift.re)
    }

    fn coeffs(v: &[[f64; 2]]) -> Vec<C64> {
        v.iter().map(|c| C64::new(c[0], c[1])).collect()
    }

    pub fn coefficients0(&self) -> Vec<C64> {
        Self::coeffs(&self.map.coeffs0)
    }

    pub fn coefficients1(&self) -> Vec<C64> {
        Self::coeffs(self.map.coeffs1.as_ref().unwrap_or(&self.map.coeffs0))
    }

    pub fn family(&self, zeta_count: usize) -> Result<ParamFamily> {
        let base = self.pair_at(0.0)?;
        let drift = self.domain.drift();
        ParamFamily::new(
            uniform_grid(zeta_count),
            |z| base.translated(z * drift),
            self.coefficients0(),
            self.coefficients1(),
        )
    }
}

/// The configuration `verify` runs when none is given: translated unit
/// discs and `γ_ζ(z) = z + 10⁻⁴(1 + ζ)z²`.
pub fn default_config() -> ExperimentConfig {
    parse_config(
        r#"{
            "domain": {"kind": "disc", "radius": 1.0, "drift": [0.0, 0.05]},
            "strip": [-0.4, 0.4],
            "map": {"coeffs0": [[0, 0], [1, 0], [1e-4, 0]], "coeffs1": [[0, 0], [1, 0], [2e-4, 0]]}
        }"#,
    )
    .expect("built-in config is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"domain": {"kind": "ellipse", "a": 1.0, "b": 0.6}, "strip": [-0.3, 0.3],
        "map": {"coeffs0": [[0, 0], [1, 0]]}}"#;

    #[test]
    fn defaults_filled() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.h, 1.0 / 128.0);
        assert_eq!(c.zeta_count, 11);
        assert_eq!(c.mode, Mode::Practical);
        assert_eq!(c.seed, 42);
        assert_eq!(c.n_b, 1024);
        assert_eq!(c.coefficients1(), c.coefficients0());
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
        let d = default_config();
        assert_eq!(parse_config(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn rejections() {
        let e = parse_config(&MINIMAL.replace("[-0.3, 0.3]", "[0.3, 0.3]")).unwrap_err();
        assert_eq!(e.kind(), "validation-error");
        assert!(e.to_string().contains("strip bounds"));
        let e = parse_config(&MINIMAL.replace("\"strip\"", "\"stripe\"")).unwrap_err();
        assert_eq!(e.kind(), "parse-error");
        let e = parse_config("{\"domain\": ").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        let e = parse_config(&MINIMAL.replace("}}", "}, \"h\": -1}")).unwrap_err();
        assert!(e.to_string().contains("h:"));
        let e = parse_config(&MINIMAL.replace("}}", "}, \"mode\": \"fast\"}")).unwrap_err();
        assert_eq!(e.kind(), "parse-error");
    }

    proptest::proptest! {
        #[test]
        fn random_configs_round_trip(
            a in 0.2..3.0f64,
            b in 0.2..3.0f64,
            s1 in -1.0..0.0f64,
            w in 0.01..1.0f64,
            coeffs in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6),
            h in 0.001..0.25f64,
            zeta_count in 2usize..50,
            seed in proptest::prelude::any::<u64>(),
            disc in proptest::prelude::any::<bool>(),
        ) {
            let domain = if disc {
                DomainSpec::Disc { radius: a, center: [b, 0.0], drift: [0.0, 0.1] }
            } else {
                DomainSpec::Ellipse { a, b, center: [0.0, 0.0], drift: [0.0, 0.0] }
            };
            let mut cfg = default_config();
            cfg.domain = domain;
            cfg.strip = [s1, s1 + w];
            cfg.map = MapSpec { coeffs0: coeffs.iter().map(|(x, y)| [*x, *y]).collect(), coeffs1: None };
            cfg.h = h;
            cfg.zeta_count = zeta_count;
            cfg.seed = seed;
            proptest::prop_assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg);
        }
    }
}
