use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown manifold `{0}` (expected gaussian, iho, integrable or chaotic)")]
    UnknownManifold(String),
    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {index} = {value} lies outside the domain ({lower}, {upper})")]
    OutOfDomain { index: usize, value: f64, lower: f64, upper: f64 },
    #[error("metric is not positive definite at the evaluation point")]
    NotPositiveDefinite,
    #[error("metric is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("coordinate {index} is within {distance:e} of the domain boundary, finite-difference step needs {needed:e}")]
    BoundaryProximity { index: usize, distance: f64, needed: f64 },
    #[error("sample value {value} outside the support ({lower}, {upper})")]
    Support { value: f64, lower: f64, upper: f64 },
    #[error("density is not normalizable at the requested parameters (mass {0})")]
    NonNormalizable(f64),
    #[error("integration did not converge within budget {budget} (achieved error {achieved:e}, target {target:e})")]
    QuadratureBudget { budget: usize, achieved: f64, target: f64 },
    #[error("invalid integration scheme: {0}")]
    InvalidScheme(String),
    #[error("degenerate tangent plane (Gram determinant {0:e})")]
    DegeneratePlane(f64),
    #[error("step size underflow at tau = {0}")]
    StepUnderflow(f64),
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("degenerate sweep: coordinate {0} has zero range")]
    DegenerateSweep(usize),
    #[error("tau = {tau} outside the sampled range [{start}, {end}]")]
    OutsideSpan { tau: f64, start: f64, end: f64 },
    #[error("not enough points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-positive Jacobi intensity at tau = {0}")]
    ZeroIntensity(f64),
    #[error("inputs come from different experiments ({0} vs {1})")]
    MixedProvenance(String, String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
