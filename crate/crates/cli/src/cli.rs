//! Command-line surface of the `igac` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use igac_core::quadrature::{IntegrationScheme, SchemeKind};
use igac_core::{build_manifold, family_by_name, fisher_metric, parse_params, Manifold};

use crate::config::{ExperimentConfig, Format, GeodesicSection, JacobiSection, ManifoldSection, OutputSection};
use crate::error::CliError;
use crate::output::{to_json, Sink};
use crate::run::{point_curvature, run_selected, Analyses, RunOptions, RunOutcome};

#[derive(Debug, Parser)]
#[command(name = "igac", version, about = "Information-geometric chaos indicators on statistical manifolds")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every random stream (overrides `output.seed`).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "IGAC_THREADS", value_name = "N")]
    pub threads: Option<usize>,
    /// Format of tabular artifacts.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Quad,
    Mc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher metric of a distribution family at one parameter point (JSON).
    Fisher {
        #[arg(long)]
        family: String,
        /// Comma-separated parameters.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, value_enum, default_value = "quad")]
        scheme: SchemeArg,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Curvature of a manifold at one point (JSON).
    Curvature {
        #[command(flatten)]
        manifold: ManifoldArgs,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Integrate a geodesic and write `geodesic.csv`.
    Geodesic {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Integrate a Jacobi field along a geodesic and fit its exponent.
    Jacobi {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[command(flatten)]
        flow: FlowArgs,
        /// Fit window `a,b` (default: last 60% of the span).
        #[arg(long)]
        window: Option<String>,
    },
    /// Entropy series and growth classification from a TOML config.
    Ige {
        #[arg(long)]
        config: PathBuf,
    },
    /// Full experiment and verdict from a TOML config.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ManifoldArgs {
    /// gaussian, iho, integrable or chaotic.
    #[arg(long)]
    pub manifold: String,
    /// `k=v[,k=v…]`, lists written `1;2;3`.
    #[arg(long, default_value = "")]
    pub params: String,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// `theta=a,b,…;thetadot=c,d,…`.
    #[arg(long, allow_hyphen_values = true)]
    pub init: String,
    #[arg(long)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub atol: f64,
    /// Number of evenly spaced output samples.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| CliError::Usage(format!("{what}: `{x}` is not a number"))))
        .collect()
}

/// Parses `theta=…;thetadot=…`.
pub fn parse_init(s: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (mut theta, mut thetadot) = (None, None);
    for part in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--init: expected key=values, got `{part}`")))?;
        match k.trim() {
            "theta" => theta = Some(parse_list(v, "--init theta")?),
            "thetadot" => thetadot = Some(parse_list(v, "--init thetadot")?),
            other => return Err(CliError::Usage(format!("--init: unknown key `{other}`"))),
        }
    }
    match (theta, thetadot) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(CliError::Usage("--init needs both theta=… and thetadot=…".into())),
    }
}

fn parse_window(s: &str) -> Result<[f64; 2], CliError> {
    match parse_list(s, "--window")?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::Usage("--window expects `a,b`".into())),
    }
}

fn manifold_section(a: &ManifoldArgs) -> Result<ManifoldSection, CliError> {
    let params = parse_params(&a.params)?;
    Ok(ManifoldSection { name: a.manifold.clone(), params })
}

fn geodesic_section(f: &FlowArgs) -> Result<GeodesicSection, CliError> {
    let (theta, thetadot) = parse_init(&f.init)?;
    Ok(GeodesicSection {
        theta,
        thetadot,
        tau_max: f.tau_max,
        rtol: f.rtol,
        atol: f.atol,
        samples: f.samples,
        max_steps: 1_000_000,
    })
}

fn flag_config(manifold: ManifoldSection, geodesic: GeodesicSection, jacobi: Option<JacobiSection>) -> ExperimentConfig {
    ExperimentConfig {
        manifold,
        geodesic: Some(geodesic),
        curvature: None,
        jacobi,
        ige: None,
        ensemble: None,
        output: OutputSection::default(),
    }
}

fn run_flag_config(cfg: ExperimentConfig, opts: &RunOptions, only: Analyses) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let text = toml::to_string(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    run_selected(&cfg, &text, opts, only)
}

#[derive(Serialize)]
struct FisherOutput<'a> {
    family: &'a str,
    theta: &'a [f64],
    scheme: IntegrationScheme,
    /// Row-major.
    metric: Vec<Vec<f64>>,
    error: f64,
    standard_errors: Option<Vec<Vec<f64>>>,
    evaluations: usize,
}

fn rows(m: &igac_core::Matrix) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

fn emit_json(out: Option<&Path>, name: &str, text: &str) -> Result<(), CliError> {
    print!("{text}");
    if let Some(dir) = out {
        Sink::create(dir)?.write(name, text)?;
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn print_outcome(o: &RunOutcome) {
    if let Some(f) = &o.jacobi {
        println!("jacobi exponent {:.6} (r2 {:.6})", f.exponent, f.r2);
    }
    if let Some(c) = &o.ige {
        println!("ige {} rate {:.6} (r2 linear {:.6}, log {:.6})", c.class, c.rate, c.r2_linear, c.r2_log);
    }
    if let Some(r) = &o.report {
        println!("verdict {}", r.verdict);
    }
    println!("wrote {} files to {}", o.files.len(), o.dir.display());
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.global.threads)?;
    let opts = RunOptions { out: cli.global.out.clone(), seed: cli.global.seed, format: cli.global.format.map(Into::into) };
    match cli.command {
        Command::Fisher { family, theta, scheme, budget, tolerance } => {
            let theta = parse_list(&theta, "--theta")?;
            let f = family_by_name::<f64>(&family)?;
            let scheme = match scheme {
                SchemeArg::Quad => IntegrationScheme::quadrature(budget.unwrap_or(2_000_000), tolerance),
                SchemeArg::Mc => IntegrationScheme {
                    kind: SchemeKind::MonteCarlo,
                    budget: budget.unwrap_or(1 << 20),
                    tolerance,
                    seed: opts.seed.unwrap_or(0),
                },
            };
            let est = fisher_metric(&*f, &theta, &scheme)?;
            let out = FisherOutput {
                family: f.name(),
                theta: &theta,
                scheme,
                metric: rows(&est.metric),
                error: est.error,
                standard_errors: est.standard_errors.as_ref().map(rows),
                evaluations: est.evaluations,
            };
            emit_json(opts.out.as_deref(), "fisher.json", &to_json(&out))
        }
        Command::Curvature { manifold, point } => {
            let sec = manifold_section(&manifold)?;
            let m: Manifold = build_manifold(&sec.name, &sec.params)?;
            let theta = parse_list(&point, "--point")?;
            let c = point_curvature(&m, &theta)?;
            emit_json(opts.out.as_deref(), "curvature.json", &to_json(&c))
        }
        Command::Geodesic { manifold, flow } => {
            let cfg = flag_config(manifold_section(&manifold)?, geodesic_section(&flow)?, None);
            let o = run_flag_config(cfg, &opts, Analyses::NONE)?;
            print_outcome(&o);
            Ok(())
        }
        Command::Jacobi { manifold, flow, window } => {
            let window = window.as_deref().map(parse_window).transpose()?;
            let jacobi = JacobiSection { enabled: true, window, j0: None, dj0: None };
            let cfg = flag_config(manifold_section(&manifold)?, geodesic_section(&flow)?, Some(jacobi));
            let o = run_flag_config(cfg, &opts, Analyses { jacobi: true, ..Analyses::NONE })?;
            print_outcome(&o);
            Ok(())
        }
        Command::Ige { config } => {
            let (cfg, text) = ExperimentConfig::load(&config)?;
            let o = run_selected(&cfg, &text, &opts, Analyses { ige: true, ..Analyses::NONE })?;
            print_outcome(&o);
            Ok(())
        }
        Command::Report { config } => {
            let (cfg, text) = ExperimentConfig::load(&config)?;
            let o = run_selected(&cfg, &text, &opts, Analyses::ALL)?;
            print_outcome(&o);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_parsing() {
        let (a, b) = parse_init("theta=0,1;thetadot=0.5,-0.5").unwrap();
        assert_eq!(a, vec![0.0, 1.0]);
        assert_eq!(b, vec![0.5, -0.5]);
        assert!(parse_init("theta=0,1").is_err());
        assert!(parse_init("theta=0,x;thetadot=1,1").is_err());
        assert!(parse_init("phi=1;thetadot=1").is_err());
    }

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("3,8").unwrap(), [3.0, 8.0]);
        assert!(parse_window("3").is_err());
    }

    #[test]
    fn clap_surface() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["igac", "--threads", "2", "geodesic", "--manifold", "gaussian", "--params", "l=1", "--init", "theta=0,1;thetadot=1,0", "--tau-max", "3"]).unwrap();
        assert_eq!(cli.global.threads, Some(2));
    }
}
