//! Verdict assembly from curvature, Jacobi and entropy evidence.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ige::{GrowthClass, GrowthClassification};
use crate::jacobi::ExponentFit;

/// Exponential-fit quality required for a stretching signal.
pub const STRETCHING_R2: f64 = 0.98;
/// `|λ_J|` at or below this counts as no exponential divergence.
pub const FLAT_EXPONENT: f64 = 0.05;
/// An exponential fit worse than this counts as no exponential divergence.
pub const POOR_FIT_R2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureSign {
    Negative,
    Zero,
    Positive,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureSummary {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub sign: CurvatureSign,
}

impl CurvatureSummary {
    /// Summarizes sampled scalar curvatures; `|R| ≤ zero_tol` counts as zero.
    pub fn from_samples(values: &[f64], zero_tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sign = if max.abs() <= zero_tol && min.abs() <= zero_tol {
            CurvatureSign::Zero
        } else if max < -zero_tol {
            CurvatureSign::Negative
        } else if min > zero_tol {
            CurvatureSign::Positive
        } else {
            CurvatureSign::Mixed
        };
        Ok(Self { min, max, points: values.len(), sign })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Chaotic,
    Regular,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Chaotic => "chaotic",
            Verdict::Regular => "regular",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
}

/// A result tagged with the hash of the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagged<X> {
    pub config_hash: String,
    pub value: X,
}

impl<X> Tagged<X> {
    pub fn new(config_hash: impl Into<String>, value: X) -> Self {
        Self { config_hash: config_hash.into(), value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosReport {
    pub manifold: String,
    pub curvature: Option<CurvatureSummary>,
    pub jacobi: Option<ExponentFit<f64>>,
    pub ige: Option<GrowthClassification<f64>>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

/// Stretching and linear entropy growth give `chaotic`; a flat or
/// non-exponential Jacobi field with logarithmic growth gives `regular`;
/// anything else is `inconclusive`. Curvature never decides.
pub fn verdict(fit: Option<&ExponentFit<f64>>, cls: Option<&GrowthClassification<f64>>) -> Verdict {
    let class = cls.map(|c| c.class);
    match (fit, class) {
        (Some(f), Some(GrowthClass::Linear)) if f.exponent > 0.0 && f.r2 >= STRETCHING_R2 => Verdict::Chaotic,
        (Some(f), Some(GrowthClass::Logarithmic)) if f.exponent.abs() <= FLAT_EXPONENT || f.r2 < POOR_FIT_R2 => {
            Verdict::Regular
        }
        _ => Verdict::Inconclusive,
    }
}

/// Builds the report; every tagged input must carry `provenance.config_hash`.
pub fn chaos_report(
    manifold: &str,
    curvature: Option<Tagged<CurvatureSummary>>,
    fit: Option<Tagged<ExponentFit<f64>>>,
    cls: Option<Tagged<GrowthClassification<f64>>>,
    provenance: Provenance,
) -> Result<ChaosReport> {
    let hashes = [
        curvature.as_ref().map(|t| &t.config_hash),
        fit.as_ref().map(|t| &t.config_hash),
        cls.as_ref().map(|t| &t.config_hash),
    ];
    for h in hashes.into_iter().flatten() {
        if *h != provenance.config_hash {
            return Err(Error::MixedProvenance(h.clone(), provenance.config_hash.clone()));
        }
    }
    let curvature = curvature.map(|t| t.value);
    let fit = fit.map(|t| t.value);
    let cls = cls.map(|t| t.value);
    let v = verdict(fit.as_ref(), cls.as_ref());
    let mut notes = Vec::new();
    if let Some(c) = &curvature {
        if c.sign == CurvatureSign::Negative && v != Verdict::Chaotic {
            notes.push("negative curvature alone is sufficient, not necessary, evidence of instability".into());
        }
    }
    if manifold == "iho" {
        notes.push(
            "folding: the oscillator flow only stretches; confinement is supplied statistically by averaging over the frequency ensemble"
                .into(),
        );
    }
    if fit.is_none() {
        notes.push("no Jacobi exponent available".into());
    }
    if cls.is_none() {
        notes.push("no entropy classification available".into());
    }
    Ok(ChaosReport { manifold: manifold.to_string(), curvature, jacobi: fit, ige: cls, verdict: v, notes, provenance })
}
