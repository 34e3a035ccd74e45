//! Experiment orchestration: curvature, geodesic, Jacobi, IGE, report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use igac_core::geodesic::PathMetadata;
use igac_core::ode::Termination;
use igac_core::quadrature::stream_rng;
use igac_core::{
    chaos_report, classify_growth, curvature_tensors, default_initial_conditions,
    divergence_exponent, ensemble_ige, ige_series, integrate_geodesic, integrate_jlc, norm_drift,
    ChaosReport, CurvatureSummary, ExponentFit, FrequencySpectrum, GeodesicPath, GeodesicState,
    GrowthClassification, Manifold, Provenance, StepControl, Tagged,
};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::Sink;

/// Stream index reserved for drawing curvature sample points.
const CURVATURE_STREAM: u64 = 1 << 62;

/// Command-line overrides of the `[output]` section.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

/// Which analyses to run, intersected with what the config enables.
#[derive(Debug, Clone, Copy)]
pub struct Analyses {
    pub curvature: bool,
    pub jacobi: bool,
    pub ige: bool,
    pub report: bool,
}

impl Analyses {
    pub const ALL: Self = Self { curvature: true, jacobi: true, ige: true, report: true };
    pub const NONE: Self = Self { curvature: false, jacobi: false, ige: false, report: false };
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub config_hash: String,
    pub curvature: Option<CurvatureSummary>,
    pub jacobi: Option<ExponentFit>,
    pub ige: Option<GrowthClassification>,
    pub report: Option<ChaosReport>,
}

pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("igac".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("igac-core".to_string(), igac_core::VERSION.to_string()),
    ])
}

/// Runs every enabled analysis and writes all artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, config_text: &str, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    run_selected(cfg, config_text, opts, Analyses::ALL)
}

pub fn run_selected(
    cfg: &ExperimentConfig,
    config_text: &str,
    opts: &RunOptions,
    only: Analyses,
) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let seed = opts.seed.unwrap_or(cfg.output.seed);
    let formats = match opts.format {
        Some(f) => vec![f],
        None => cfg.output.formats.clone(),
    };
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let hash = config_hash(config_text);
    let m: Manifold = cfg.manifold()?;
    let mut sink = Sink::create(&dir)?;
    let mut notes = Vec::new();

    let curvature = match &cfg.curvature {
        Some(c) if c.enabled && only.curvature => {
            let points = if c.at.is_empty() {
                let theta0 = &cfg.geodesic.as_ref().expect("validated").theta;
                random_points(&m, theta0, c.points, seed)
            } else {
                c.at.clone()
            };
            Some(curvature_stage(&m, &points, c.zero_tolerance, &formats, &mut sink)?)
        }
        _ => None,
    };

    let path = match &cfg.geodesic {
        Some(g) => {
            let control = StepControl { max_steps: g.max_steps, ..StepControl::with_tolerances(g.rtol, g.atol) };
            let s0 = GeodesicState::new(0.0, g.theta.clone(), g.thetadot.clone())?;
            let samples = igac_core::uniform_grid(0.0, g.tau_max, g.samples);
            let p = integrate_geodesic(&m, &s0, g.tau_max, &control, &samples)?;
            if p.status() != Termination::Completed {
                notes.push(format!("geodesic stopped early at tau = {} ({:?})", p.tau_end(), p.status()));
            }
            write_geodesic(&m, &p, &formats, &mut sink)?;
            Some(p)
        }
        _ => None,
    };

    let jacobi = match (&cfg.jacobi, &path) {
        (Some(j), Some(p)) if j.enabled && only.jacobi => {
            let (j0, dj0) = match (&j.j0, &j.dj0) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                _ => default_initial_conditions(&m, p)?,
            };
            let field = integrate_jlc(&m, p, &j0, &dj0)?;
            let window = match j.window {
                Some([a, b]) => (a, b),
                None => igac_core::jacobi::default_window(p.tau_start(), field.samples.last().map_or(p.tau_end(), |s| s.tau)),
            };
            let rows: Vec<Vec<f64>> = field.samples.iter().map(|s| vec![s.tau, s.intensity]).collect();
            sink.table("jacobi", &["tau".into(), "intensity".into()], &rows, &formats)?;
            let fit = divergence_exponent(&field, window)?;
            sink.json("jacobi_fit.json", &JacobiSummary { fit: &fit, j0: &j0, dj0: &dj0, status: field.status })?;
            Some(fit)
        }
        _ => None,
    };

    let ige = match &cfg.ige {
        Some(s) if s.enabled && only.ige => {
            let scheme = s.integration_scheme(seed);
            let mut grid = s.grid.values();
            let (lo, hi) = s.window_or_grid();
            let (series, cls) = if let Some(e) = cfg.ensemble.as_ref().filter(|e| e.enabled) {
                let spectrum =
                    FrequencySpectrum { l: e.l, mean: e.omega_mean, std: e.omega_std, seed: e.seed.unwrap_or(seed) };
                let control = StepControl::with_tolerances(e.rtol, e.atol);
                let run = ensemble_ige(&spectrum, &[(e.theta0, e.thetadot0)], &grid, e.samples, &scheme, &control, (lo, hi))?;
                if run.dropped_points > 0 {
                    notes.push(format!("{} ensemble grid points dropped after an early stop", run.dropped_points));
                }
                sink.json(
                    "ensemble.json",
                    &EnsembleSummary { samples: e.samples, spectrum, frequencies: &run.frequencies, dropped_points: run.dropped_points },
                )?;
                (run.series, run.classification)
            } else {
                let p = path.as_ref().expect("validated");
                let end = p.tau_end();
                let before = grid.len();
                grid.retain(|&t| t <= end);
                if grid.len() < before {
                    notes.push(format!("{} IGE grid points beyond tau = {end} dropped", before - grid.len()));
                }
                let series = ige_series(&m, p, &grid, &scheme)?;
                let cls = classify_growth(&series, (lo, hi.min(end)))?;
                (series, cls)
            };
            let rows: Vec<Vec<f64>> = (0..series.len())
                .map(|i| vec![series.tau[i], series.weight[i], series.volume[i], series.entropy[i]])
                .collect();
            sink.table("ige_series", &["tau".into(), "weight".into(), "V".into(), "S".into()], &rows, &formats)?;
            sink.json("ige_classification.json", &cls)?;
            Some(cls)
        }
        _ => None,
    };

    let provenance = Provenance { config_hash: hash.clone(), seed, versions: versions() };
    let report = if only.report {
        let mut r = chaos_report(
            &cfg.manifold.name,
            curvature.clone().map(|c| Tagged::new(hash.clone(), c)),
            jacobi.map(|f| Tagged::new(hash.clone(), f)),
            ige.map(|c| Tagged::new(hash.clone(), c)),
            provenance.clone(),
        )?;
        r.notes.extend(notes.iter().cloned());
        sink.json("report.json", &r)?;
        Some(r)
    } else {
        None
    };

    sink.write("config.toml", config_text)?;
    let mut artifacts = sink.written().to_vec();
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        tool: "igac",
        versions: provenance.versions,
        seed,
        config_hash: hash.clone(),
        formats: &formats,
        artifacts: &artifacts,
        notes: &notes,
        config: config_text,
    };
    sink.json("manifest.json", &manifest)?;

    Ok(RunOutcome {
        dir,
        files: sink.written().to_vec(),
        config_hash: hash,
        curvature,
        jacobi,
        ige,
        report,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    versions: BTreeMap<String, String>,
    seed: u64,
    config_hash: String,
    formats: &'a [Format],
    artifacts: &'a [String],
    notes: &'a [String],
    config: &'a str,
}

#[derive(Serialize)]
struct JacobiSummary<'a> {
    #[serde(flatten)]
    fit: &'a ExponentFit,
    j0: &'a [f64],
    dj0: &'a [f64],
    status: Termination,
}

#[derive(Serialize)]
struct EnsembleSummary<'a> {
    samples: usize,
    spectrum: FrequencySpectrum,
    frequencies: &'a [Vec<f64>],
    dropped_points: usize,
}

/// Curvature diagnostics at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PointCurvature {
    pub point: Vec<f64>,
    pub scalar: f64,
    /// Row-major Ricci tensor.
    pub ricci: Vec<f64>,
    pub sectional_by_plane: Vec<PlaneCurvature>,
    pub weyl_max_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneCurvature {
    pub i: usize,
    pub j: usize,
    pub k: f64,
}

pub fn point_curvature(m: &Manifold, theta: &[f64]) -> Result<PointCurvature, igac_core::Error> {
    let b = curvature_tensors(m, theta)?;
    let sectional_by_plane =
        b.sectional_by_plane()?.into_iter().map(|((i, j), k)| PlaneCurvature { i: i + 1, j: j + 1, k }).collect();
    let weyl_max_abs = b.weyl_anisotropy()?.max_abs();
    Ok(PointCurvature { point: theta.to_vec(), scalar: b.scalar, ricci: b.ricci.as_slice().to_vec(), sectional_by_plane, weyl_max_abs })
}

/// `count` in-domain points around `theta0`: scale-type axes are multiplied
/// by `e^u` about their lower bound, others shifted by `u·max(1, |θ₀|)`,
/// with `u` uniform on `(−1, 1)`.
pub fn random_points(m: &Manifold, theta0: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, CURVATURE_STREAM);
    (0..count)
        .map(|_| {
            m.domain
                .bounds
                .iter()
                .zip(theta0)
                .map(|(b, &x)| {
                    let u: f64 = rng.random_range(-1.0..1.0);
                    if b.is_scale_type() {
                        b.lower + (x - b.lower) * u.exp()
                    } else {
                        x + u * x.abs().max(1.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn curvature_stage(
    m: &Manifold,
    points: &[Vec<f64>],
    zero_tol: f64,
    formats: &[Format],
    sink: &mut Sink,
) -> Result<CurvatureSummary, CliError> {
    let results: Vec<PointCurvature> =
        points.par_iter().map(|p| point_curvature(m, p)).collect::<Result<_, _>>()?;
    let n = m.dim();
    let mut header: Vec<String> = (1..=n).map(|i| format!("theta_{i}")).collect();
    header.push("scalar".into());
    if let Some(first) = results.first() {
        header.extend(first.sectional_by_plane.iter().map(|p| format!("K_{}_{}", p.i, p.j)));
    }
    header.push("weyl_max_abs".into());
    let rows: Vec<Vec<f64>> = results
        .iter()
        .map(|r| {
            let mut row = r.point.clone();
            row.push(r.scalar);
            row.extend(r.sectional_by_plane.iter().map(|p| p.k));
            row.push(r.weyl_max_abs);
            row
        })
        .collect();
    sink.table("curvature", &header, &rows, formats)?;
    let scalars: Vec<f64> = results.iter().map(|r| r.scalar).collect();
    Ok(CurvatureSummary::from_samples(&scalars, zero_tol)?)
}

fn write_geodesic(m: &Manifold, p: &GeodesicPath, formats: &[Format], sink: &mut Sink) -> Result<(), CliError> {
    let n = m.dim();
    let drift = norm_drift(m, p)?;
    let mut header = vec!["tau".to_string()];
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    header.extend((1..=n).map(|i| format!("thetadot_{i}")));
    header.push("norm_drift".into());
    let rows: Vec<Vec<f64>> = p
        .samples
        .iter()
        .zip(&drift)
        .map(|(s, d)| {
            let mut row = vec![s.tau];
            row.extend(&s.theta);
            row.extend(&s.theta_dot);
            row.push(*d);
            row
        })
        .collect();
    sink.table("geodesic", &header, &rows, formats)?;
    let meta: &PathMetadata<f64> = &p.metadata;
    sink.json("geodesic_meta.json", meta).map(|_| ())
}
