//! Information-geometric indicators of chaos on statistical manifolds.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases at the crate root fix it to `f64`.

pub mod error;
pub mod fisher;
pub mod fit;
pub mod geodesic;
pub mod geometry;
pub mod ige;
pub mod jacobi;
pub mod linalg;
pub mod manifold;
pub mod ode;
pub mod quadrature;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use fisher::{compose_product, family_by_name, fisher_metric, DistributionFamily};
pub use geodesic::{integrate_geodesic, iho_trajectories, killing_conservation, norm_drift, uniform_grid};
pub use geometry::{christoffel, curvature_tensors, sectional_curvature, weyl_anisotropy};
pub use ige::{classify_growth, ensemble_ige, ige_series, statistical_weight, FrequencySpectrum, GrowthClass};
pub use jacobi::{default_initial_conditions, divergence_exponent, integrate_jlc};
pub use manifold::{build_manifold, parse_params, ParamValue, Params};
pub use quadrature::{IntegrationScheme, SchemeKind};
pub use report::{chaos_report, verdict, ChaosReport, CurvatureSummary, Provenance, Tagged, Verdict};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Manifold = manifold::ManifoldSpec<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type FisherEstimate = fisher::FisherEstimate<f64>;
pub type CurvatureBundle = geometry::CurvatureBundle<f64>;
pub type TangentPlane = geometry::TangentPlane<f64>;
pub type StepControl = ode::StepControl<f64>;
pub type GeodesicState = geodesic::GeodesicState<f64>;
pub type GeodesicPath = geodesic::GeodesicPath<f64>;
pub type JacobiField = jacobi::JacobiField<f64>;
pub type ExponentFit = jacobi::ExponentFit<f64>;
pub type ExploredRegion = ige::ExploredRegion<f64>;
pub type IgeSeries = ige::IgeSeries<f64>;
pub type GrowthClassification = ige::GrowthClassification<f64>;
pub type EnsembleIge = ige::EnsembleIge<f64>;
