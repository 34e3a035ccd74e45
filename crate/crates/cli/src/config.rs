//! TOML experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use igac_core::manifold::{ParamValue, Params};
use igac_core::quadrature::{IntegrationScheme, SchemeKind};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSection,
    pub geodesic: Option<GeodesicSection>,
    pub curvature: Option<CurvatureSection>,
    pub jacobi: Option<JacobiSection>,
    pub ige: Option<IgeSection>,
    pub ensemble: Option<EnsembleSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicSection {
    pub theta: Vec<f64>,
    pub thetadot: Vec<f64>,
    pub tau_max: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Number of evenly spaced output samples on `[0, tau_max]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Random points drawn around the geodesic start.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Explicit evaluation points, used instead of random ones when given.
    #[serde(default)]
    pub at: Vec<Vec<f64>>,
    #[serde(default = "default_zero_tol")]
    pub zero_tolerance: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub window: Option<[f64; 2]>,
    pub j0: Option<Vec<f64>>,
    pub dj0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Uniform { start: f64, end: f64, points: usize },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Points(v) => v.clone(),
            GridSpec::Uniform { start, end, points } => igac_core::uniform_grid(*start, *end, *points),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IgeSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub grid: GridSpec,
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_ige_tol")]
    pub tolerance: f64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
}

impl IgeSection {
    pub fn integration_scheme(&self, seed: u64) -> IntegrationScheme {
        IntegrationScheme { kind: self.scheme, budget: self.budget, tolerance: self.tolerance, seed }
    }

    pub fn window_or_grid(&self) -> (f64, f64) {
        match self.window {
            Some([a, b]) => (a, b),
            None => {
                let g = self.grid.values();
                (g.first().copied().unwrap_or(0.0), g.last().copied().unwrap_or(0.0))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub l: usize,
    pub omega_mean: f64,
    #[serde(default)]
    pub omega_std: f64,
    #[serde(default = "one")]
    pub samples: usize,
    /// Defaults to the output seed.
    pub seed: Option<u64>,
    pub theta0: f64,
    #[serde(default)]
    pub thetadot0: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_dir(), formats: default_formats(), seed: 0 }
    }
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_atol() -> f64 {
    1e-14
}
fn default_samples() -> usize {
    201
}
fn default_max_steps() -> usize {
    1_000_000
}
fn default_points() -> usize {
    20
}
fn default_zero_tol() -> f64 {
    1e-6
}
fn default_budget() -> usize {
    2_000_000
}
fn default_ige_tol() -> f64 {
    1e-10
}
fn default_scheme() -> SchemeKind {
    SchemeKind::AdaptiveQuadrature
}
fn default_dir() -> String {
    "igac-out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

/// One problem found while validating, addressed by `section.key`.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Issue>),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
        Ok((Self::from_toml(&text)?, text))
    }

    /// Manifold parameters; an ensemble run without explicit `omega` uses
    /// the mean frequency for every oscillator.
    pub fn params(&self) -> Params {
        let mut p = self.manifold.params.clone();
        if let Some(e) = self.ensemble.as_ref().filter(|e| e.enabled && self.manifold.name == "iho") {
            if !p.contains_key("omega") && e.l > 0 {
                p.insert("omega".into(), ParamValue::List(vec![e.omega_mean; e.l]));
            }
        }
        p
    }

    pub fn manifold(&self) -> igac_core::Result<igac_core::Manifold> {
        igac_core::build_manifold(&self.manifold.name, &self.params())
    }

    pub fn curvature_enabled(&self) -> bool {
        self.curvature.as_ref().is_some_and(|c| c.enabled)
    }

    pub fn jacobi_enabled(&self) -> bool {
        self.jacobi.as_ref().is_some_and(|c| c.enabled)
    }

    pub fn ige_enabled(&self) -> bool {
        self.ige.as_ref().is_some_and(|c| c.enabled)
    }

    pub fn ensemble_enabled(&self) -> bool {
        self.ensemble.as_ref().is_some_and(|c| c.enabled)
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |path: &str, message: String| issues.push(Issue { path: path.into(), message });

        let manifold = self.manifold();
        let dim = match &manifold {
            Ok(m) => Some(m.dim()),
            Err(e) => {
                bad("manifold", e.to_string());
                None
            }
        };

        let needs_geodesic = self.jacobi_enabled() || (self.ige_enabled() && !self.ensemble_enabled());
        match &self.geodesic {
            None if needs_geodesic => bad("geodesic", "section required by the enabled analyses".into()),
            None => {}
            Some(g) => {
                if let Some(n) = dim {
                    if g.theta.len() != n {
                        bad("geodesic.theta", format!("expected {n} coordinates, got {}", g.theta.len()));
                    }
                    if g.thetadot.len() != n {
                        bad("geodesic.thetadot", format!("expected {n} components, got {}", g.thetadot.len()));
                    }
                }
                if let Ok(m) = &manifold {
                    if g.theta.len() == m.dim() {
                        if let Err(e) = m.metric_at(&g.theta) {
                            bad("geodesic.theta", e.to_string());
                        }
                    }
                }
                if g.thetadot.iter().any(|v| !v.is_finite()) {
                    bad("geodesic.thetadot", "components must be finite".into());
                }
                if !(g.tau_max > 0.0) || !g.tau_max.is_finite() {
                    bad("geodesic.tau_max", "must be positive".into());
                }
                if !(g.rtol > 0.0) {
                    bad("geodesic.rtol", "must be positive".into());
                }
                if !(g.atol > 0.0) {
                    bad("geodesic.atol", "must be positive".into());
                }
                if g.samples < 2 {
                    bad("geodesic.samples", "need at least 2 samples".into());
                }
                if g.max_steps == 0 {
                    bad("geodesic.max_steps", "must be at least 1".into());
                }
            }
        }

        if let Some(c) = &self.curvature {
            if c.enabled {
                if c.at.is_empty() && c.points == 0 {
                    bad("curvature.points", "must be at least 1".into());
                }
                if c.at.is_empty() && self.geodesic.is_none() {
                    bad("curvature", "random points are drawn around geodesic.theta; give `at` or a [geodesic] section".into());
                }
                if let Some(n) = dim {
                    for (i, p) in c.at.iter().enumerate() {
                        if p.len() != n {
                            bad(&format!("curvature.at[{i}]"), format!("expected {n} coordinates, got {}", p.len()));
                        }
                    }
                }
                if !(c.zero_tolerance >= 0.0) {
                    bad("curvature.zero_tolerance", "must be non-negative".into());
                }
            }
        }

        if let Some(j) = &self.jacobi {
            if let Some([a, b]) = j.window {
                if !(a < b) || a < 0.0 {
                    bad("jacobi.window", "must satisfy 0 <= lo < hi".into());
                }
                if let Some(g) = &self.geodesic {
                    if b > g.tau_max {
                        bad("jacobi.window", format!("upper end {b} exceeds geodesic.tau_max {}", g.tau_max));
                    }
                }
            }
            if j.j0.is_some() != j.dj0.is_some() {
                bad("jacobi", "give both j0 and dj0, or neither".into());
            }
            if let Some(n) = dim {
                for (key, v) in [("jacobi.j0", &j.j0), ("jacobi.dj0", &j.dj0)] {
                    if let Some(v) = v {
                        if v.len() != n {
                            bad(key, format!("expected {n} components, got {}", v.len()));
                        }
                    }
                }
            }
        }

        if let Some(s) = &self.ige {
            let grid = s.grid.values();
            if grid.is_empty() {
                bad("ige.grid", "must contain at least one point".into());
            } else {
                if grid.windows(2).any(|w| !(w[0] < w[1])) {
                    bad("ige.grid", "must be strictly increasing".into());
                }
                if !(grid[0] > 0.0) {
                    bad("ige.grid", "points must be positive (the average over [0, tau] needs tau > 0)".into());
                }
                let end = if self.ensemble_enabled() { None } else { self.geodesic.as_ref().map(|g| g.tau_max) };
                if let Some(t) = end {
                    if grid[grid.len() - 1] > t {
                        bad("ige.grid", format!("last point exceeds geodesic.tau_max {t}"));
                    }
                }
            }
            if let GridSpec::Uniform { points, .. } = s.grid {
                if points < 2 {
                    bad("ige.grid.points", "need at least 2 points".into());
                }
            }
            if let Some([a, b]) = s.window {
                if !(a > 0.0 && a < b) {
                    bad("ige.window", "must satisfy 0 < lo < hi".into());
                }
            }
            if s.budget < 16 {
                bad("ige.budget", "must be at least 16".into());
            }
            if !(s.tolerance > 0.0) {
                bad("ige.tolerance", "must be positive".into());
            }
        }

        if let Some(e) = &self.ensemble {
            if e.enabled {
                if self.manifold.name != "iho" {
                    bad("ensemble", "ensemble runs need manifold.name = \"iho\"".into());
                }
                if self.ige.is_none() {
                    bad("ige", "section required by [ensemble]".into());
                }
                if e.l == 0 {
                    bad("ensemble.l", "must be at least 1".into());
                }
                if !(e.omega_mean > 0.0) {
                    bad("ensemble.omega_mean", "must be positive".into());
                }
                if !(e.omega_std >= 0.0) {
                    bad("ensemble.omega_std", "must be non-negative".into());
                }
                if e.samples == 0 {
                    bad("ensemble.samples", "must be at least 1".into());
                }
                if !e.theta0.is_finite() || !e.thetadot0.is_finite() {
                    bad("ensemble.theta0", "initial data must be finite".into());
                }
                if !(e.rtol > 0.0) || !(e.atol > 0.0) {
                    bad("ensemble.rtol", "tolerances must be positive".into());
                }
                if let Some(ParamValue::Scalar(l)) = self.manifold.params.get("l") {
                    if *l != e.l as f64 {
                        bad("ensemble.l", format!("differs from manifold.params.l = {l}"));
                    }
                }
            }
        }

        if self.output.formats.is_empty() {
            bad("output.formats", "list at least one of \"csv\", \"json\"".into());
        }
        if self.output.directory.trim().is_empty() {
            bad("output.directory", "must not be empty".into());
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[manifold]
name = "gaussian"
params = { l = 1 }

[geodesic]
theta = [0.0, 1.0]
thetadot = [0.5, -0.5]
tau_max = 10.0

[jacobi]
window = [4.0, 10.0]

[ige]
grid = { start = 1.0, end = 10.0, points = 19 }
"#;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_toml(GOOD).unwrap();
        assert!(c.jacobi_enabled() && c.ige_enabled() && !c.curvature_enabled());
        assert_eq!(c.ige.unwrap().grid.values().len(), 19);
        assert_eq!(c.output.seed, 0);
    }

    #[test]
    fn reports_every_issue_with_paths() {
        let text = GOOD.replace("thetadot = [0.5, -0.5]", "thetadot = [0.5]").replace("tau_max = 10.0", "tau_max = -1.0");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        let ConfigError::Invalid(issues) = err else { panic!("{err}") };
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"geodesic.thetadot"));
        assert!(paths.contains(&"geodesic.tau_max"));
        assert!(paths.contains(&"jacobi.window"));
    }

    #[test]
    fn unknown_keys_and_manifolds() {
        assert!(matches!(ExperimentConfig::from_toml(&format!("{GOOD}\n[extra]\nx=1\n")), Err(ConfigError::Parse(_))));
        let err = ExperimentConfig::from_toml(&GOOD.replace("\"gaussian\"", "\"torus\"")).unwrap_err();
        assert!(err.to_string().contains("manifold: unknown manifold `torus`"));
    }

    #[test]
    fn out_of_domain_start() {
        let err = ExperimentConfig::from_toml(&GOOD.replace("theta = [0.0, 1.0]", "theta = [0.0, -1.0]")).unwrap_err();
        assert!(err.to_string().contains("geodesic.theta"));
    }
}
