//! Experiment configuration: JSON schema, defaults and validation.

use crate::error::{CliError, Result};
use eel_core::fields::Region;
use eel_core::kinetic::MIN_NS;
use eel_core::{CircleFunction, FieldSpec, Grid2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Largest Fourier band accepted in an entropy suite.
pub const MAX_BAND: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    EntropyIdentities,
    Produce,
    JumpCost,
    Besov,
    Kinetic,
    Interaction,
    Factorize,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::EntropyIdentities,
        Check::Produce,
        Check::JumpCost,
        Check::Besov,
        Check::Kinetic,
        Check::Interaction,
        Check::Factorize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::EntropyIdentities => "entropy-identities",
            Check::Produce => "produce",
            Check::JumpCost => "jump-cost",
            Check::Besov => "besov",
            Check::Kinetic => "kinetic",
            Check::Interaction => "interaction",
            Check::Factorize => "factorize",
        }
    }

    /// Stream index for the per-check random generator.
    pub fn stream(self) -> u64 {
        Check::ALL.iter().position(|&c| c == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL.iter().copied().find(|c| c.name() == s.trim()).ok_or_else(|| CliError::UnknownCheck(s.trim().into()))
    }
}

/// Parses `name,name,...`; `all` expands to every check.
pub fn parse_checks(list: &str) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        if part.trim() == "all" {
            out.extend(Check::ALL);
        } else {
            out.push(part.parse()?);
        }
    }
    Ok(out)
}

/// One entry of the entropy suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SuiteEntry {
    Cos { k: usize },
    Sin { k: usize },
    /// `a0 + sum_k a_k cos kt + b_k sin kt`, `k` starting at 1.
    Series {
        #[serde(default)]
        a0: f64,
        #[serde(default)]
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
    },
    /// `count` real trigonometric polynomials of degree `band`, coefficients uniform in `[-1, 1]`.
    Random { band: usize, count: usize },
}

/// Real trigonometric polynomial with coefficients uniform in `[-1, 1]`.
pub fn random_real(rng: &mut ChaCha8Rng, band: usize) -> CircleFunction {
    let a0 = rng.gen_range(-1.0..=1.0);
    let a: Vec<f64> = (0..band).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let b: Vec<f64> = (0..band).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    CircleFunction::from_real_series(a0, &a, &b)
}

impl SuiteEntry {
    fn violations(&self, at: usize, out: &mut Vec<String>) {
        let band = match self {
            SuiteEntry::Cos { k } | SuiteEntry::Sin { k } => *k,
            SuiteEntry::Series { a, b, .. } => a.len().max(b.len()),
            SuiteEntry::Random { band, count } => {
                if *count == 0 {
                    out.push(format!("suite[{at}]: random entry with count 0"));
                }
                *band
            }
        };
        if band > MAX_BAND {
            out.push(format!("suite[{at}]: band {band} exceeds {MAX_BAND}"));
        }
        if let SuiteEntry::Series { a0, a, b } = self {
            if !a0.is_finite() || a.iter().chain(b).any(|v| !v.is_finite()) {
                out.push(format!("suite[{at}]: non-finite coefficient"));
            }
        }
    }

    /// Expands the entry into labelled circle functions, drawing random entries from `rng`.
    pub fn expand(&self, at: usize, rng: &mut ChaCha8Rng) -> Vec<(String, CircleFunction)> {
        match self {
            SuiteEntry::Cos { k } => vec![(format!("cos{k}"), CircleFunction::cos(*k))],
            SuiteEntry::Sin { k } => vec![(format!("sin{k}"), CircleFunction::sin(*k))],
            SuiteEntry::Series { a0, a, b } => vec![(format!("series{at}"), CircleFunction::from_real_series(*a0, a, b))],
            SuiteEntry::Random { band, count } => {
                (0..*count).map(|i| (format!("random{at}_{i}"), random_real(rng, *band))).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exponents {
    /// Integrability exponent of the productions.
    pub p: Option<f64>,
    /// Besov difference exponents.
    pub q: Vec<f64>,
    /// Besov smoothness.
    pub s: f64,
    /// Interaction exponent.
    pub alpha: Option<f64>,
}

impl Default for Exponents {
    fn default() -> Self {
        Self { p: None, q: vec![3.0, 4.0], s: 1.0 / 3.0, alpha: None }
    }
}

impl Exponents {
    pub fn p(&self) -> f64 {
        match (self.p, self.alpha) {
            (Some(p), _) => p,
            (None, Some(a)) => (a + 3.0) / 3.0,
            (None, None) => 7.0 / 6.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(3.0 * self.p() - 3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact circle identities.
    pub identity: f64,
    /// Fourier multiplier against its differential form.
    pub multiplier: f64,
    /// Constant in the pointwise production bound.
    pub bound_constant: f64,
    /// Relative error of the jump production mass.
    pub jump_cost: f64,
    /// Relative error of `P_m^eps` on the jump line.
    pub jump_profile: f64,
    pub besov_slope: f64,
    /// Weak kinetic residual with `sigma = 0` on constant fields.
    pub kinetic_exact: f64,
    /// Worst weak kinetic residual at the finest level.
    pub kinetic: f64,
    /// `Delta_alpha` quadrature against the closed form.
    pub interaction: f64,
    /// Relative residual of the integrated interaction identity.
    pub interaction_identity: f64,
    /// Factorization residual at the smallest `eps`.
    pub factorization: f64,
    /// Pairing of the factorized measure against the factor coefficient.
    pub pairing: f64,
    /// Least decay rate in `eps` accepted as vanishing.
    pub min_rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-10,
            multiplier: 1e-12,
            bound_constant: 100.0,
            jump_cost: 0.02,
            jump_profile: 0.05,
            besov_slope: 0.03,
            kinetic_exact: 1e-12,
            kinetic: 5e-3,
            interaction: 1e-6,
            interaction_identity: 1e-2,
            factorization: 1e-2,
            pairing: 1e-10,
            min_rate: 0.9,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 13] {
        [
            ("identity", self.identity),
            ("multiplier", self.multiplier),
            ("bound_constant", self.bound_constant),
            ("jump_cost", self.jump_cost),
            ("jump_profile", self.jump_profile),
            ("besov_slope", self.besov_slope),
            ("kinetic_exact", self.kinetic_exact),
            ("kinetic", self.kinetic),
            ("interaction", self.interaction),
            ("interaction_identity", self.interaction_identity),
            ("factorization", self.factorization),
            ("pairing", self.pairing),
            ("min_rate", self.min_rate),
        ]
    }
}

/// Sample counts for the randomized parts of the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Random band-8 circle functions in the identity check.
    pub identity_functions: usize,
    /// Points on the circle for sup norms.
    pub circle_points: usize,
    /// Random test functions `b(x) q(s)` in the kinetic check.
    pub kinetic_tests: usize,
    /// `s`-cells of the kinetic lattice.
    pub ns: usize,
    /// Grid levels of the kinetic refinement, finest first.
    pub levels: usize,
    /// `(x, h, e)` samples in the coercivity scan.
    pub interaction_samples: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { identity_functions: 20, circle_points: 512, kinetic_tests: 4, ns: 64, levels: 3, interaction_samples: 64 }
    }
}

fn default_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

fn whole() -> Region {
    Region::Whole
}

fn default_suite() -> Vec<SuiteEntry> {
    vec![SuiteEntry::Cos { k: 2 }, SuiteEntry::Sin { k: 3 }, SuiteEntry::Random { band: 8, count: 2 }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    pub grid: Grid2,
    #[serde(default = "whole")]
    pub region: Region,
    /// Mollification scales, strictly decreasing.
    pub eps_ladder: Vec<f64>,
    /// Difference step lengths, strictly decreasing.
    pub h_ladder: Vec<f64>,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default = "default_suite")]
    pub suite: Vec<SuiteEntry>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
}

fn strictly_decreasing(name: &str, v: &[f64], out: &mut Vec<String>) {
    if v.is_empty() {
        out.push(format!("{name} is empty"));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        out.push(format!("{name} must hold positive finite values: {v:?}"));
    }
    if v.windows(2).any(|w| !(w[1] < w[0])) {
        out.push(format!("{name} must be strictly decreasing: {v:?}"));
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// Every violated constraint, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let g = &self.grid;
        if let Err(e) = Grid2::new(g.nx, g.ny, g.spacing, g.origin) {
            out.push(format!("grid: {e}"));
        }
        if let Err(e) = self.field.placed_on(g) {
            out.push(format!("field: {e}"));
        }
        strictly_decreasing("eps_ladder", &self.eps_ladder, &mut out);
        strictly_decreasing("h_ladder", &self.h_ladder, &mut out);
        if let Some(&e) = self.eps_ladder.last() {
            if e < 2.0 * g.spacing {
                out.push(format!("eps_ladder: smallest eps {e} below 2 x spacing = {}", 2.0 * g.spacing));
            }
        }
        if let Some(&h) = self.h_ladder.last() {
            if h < g.spacing {
                out.push(format!("h_ladder: smallest h {h} below the grid spacing {}", g.spacing));
            }
        }
        let ex = &self.exponents;
        if let Some(p) = ex.p {
            if !(p.is_finite() && p >= 1.0) {
                out.push(format!("exponents.p must be >= 1, got {p}"));
            }
        }
        if let Some(a) = ex.alpha {
            if !(a.is_finite() && a > 0.0 && a <= 1.0) {
                out.push(format!("exponents.alpha must lie in (0, 1], got {a}"));
            }
        }
        if let (Some(p), Some(a)) = (ex.p, ex.alpha) {
            if (a - (3.0 * p - 3.0)).abs() > 1e-12 {
                out.push(format!("exponents: alpha = {a} but 3p - 3 = {}", 3.0 * p - 3.0));
            }
        }
        if ex.alpha.is_none() {
            let a = ex.alpha();
            if !(a > 0.0 && a <= 1.0) {
                out.push(format!("exponents: alpha = 3p - 3 = {a} outside (0, 1]; give alpha explicitly"));
            }
        }
        if ex.q.is_empty() {
            out.push("exponents.q is empty".into());
        }
        if ex.q.iter().any(|q| !(q.is_finite() && *q >= 1.0)) {
            out.push(format!("exponents.q must be >= 1, got {:?}", ex.q));
        }
        if !(ex.s > 0.0 && ex.s < 1.0) {
            out.push(format!("exponents.s must lie in (0, 1), got {}", ex.s));
        }
        for (name, v) in self.tolerances.named() {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("tolerances.{name} must be > 0, got {v}"));
            }
        }
        let s = &self.sampling;
        if s.levels == 0 {
            out.push("sampling.levels must be >= 1".into());
        } else {
            let f = 1usize << (s.levels - 1);
            if g.nx % f != 0 || g.ny % f != 0 || g.nx / f < 4 || g.ny / f < 4 {
                out.push(format!("sampling.levels = {}: grid {}x{} does not coarsen {} times", s.levels, g.nx, g.ny, s.levels - 1));
            }
        }
        if s.ns < MIN_NS {
            out.push(format!("sampling.ns must be >= {MIN_NS}, got {}", s.ns));
        }
        if s.circle_points < 16 {
            out.push(format!("sampling.circle_points must be >= 16, got {}", s.circle_points));
        }
        if s.kinetic_tests == 0 {
            out.push("sampling.kinetic_tests must be >= 1".into());
        }
        for (i, e) in self.suite.iter().enumerate() {
            e.violations(i, &mut out);
        }
        if self.checks.is_empty() {
            out.push("checks is empty".into());
        }
        let mut seen = Vec::new();
        for c in &self.checks {
            if seen.contains(c) {
                out.push(format!("check {c} listed twice"));
            }
            seen.push(*c);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::InvalidConfig(v))
        }
    }

    pub fn is_jump(&self) -> bool {
        matches!(self.field, FieldSpec::Jump { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "field": {"kind": "vortex", "center": [0.0, 0.0]},
                "grid": {"nx": 64, "ny": 64, "spacing": 0.03125, "origin": [-1.0, -1.0]},
                "eps_ladder": [0.25, 0.125],
                "h_ladder": [0.125, 0.0625]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = sample();
        assert!(c.violations().is_empty(), "{:?}", c.violations());
        assert_eq!(c.checks, Check::ALL.to_vec());
        assert_eq!(c.exponents.p(), 7.0 / 6.0);
        assert!((c.exponents.alpha() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_violations_listed() {
        let mut c = sample();
        c.eps_ladder = vec![0.1, 0.2];
        c.h_ladder = vec![];
        c.exponents.p = Some(1.2);
        c.exponents.alpha = Some(0.5);
        c.tolerances.kinetic = 0.0;
        c.checks = vec![Check::Besov, Check::Besov];
        let v = c.violations();
        assert_eq!(v.len(), 5, "{v:#?}");
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("5 violation"));
    }

    #[test]
    fn bad_jump_reported() {
        let mut c = sample();
        c.field = FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.0, theta_plus: 0.1, theta_minus: 0.5 };
        assert!(c.violations().iter().any(|v| v.contains("trace condition")));
    }

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
        assert_eq!(parse_checks("all").unwrap().len(), 7);
        assert_eq!(parse_checks("besov, kinetic").unwrap(), vec![Check::Besov, Check::Kinetic]);
        assert!(parse_checks("nope").is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"field": {"kind": "constant", "theta": 0.0},
            "grid": {"nx": 8, "ny": 8, "spacing": 0.25, "origin": [-1.0, -1.0]},
            "eps_ladder": [0.5], "h_ladder": [0.5], "bogus": 1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }
}
