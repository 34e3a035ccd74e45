use std::path::Path;

use igac_core::Error as CoreError;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// 2 for invalid input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Read { .. }) | CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &CoreError) -> i32 {
    use CoreError::*;
    match e {
        UnknownManifold(_)
        | UnknownFamily(_)
        | InvalidParameter { .. }
        | Dimension { .. }
        | OutOfDomain { .. }
        | InvalidScheme(_)
        | InvalidArgument(_)
        | MixedProvenance(..)
        | OutsideSpan { .. }
        | TooFewPoints { .. }
        | Support { .. }
        | DegeneratePlane(_)
        | DegenerateSweep(_) => 2,
        NotPositiveDefinite
        | NotSymmetric(_)
        | BoundaryProximity { .. }
        | NonNormalizable(_)
        | QuadratureBudget { .. }
        | StepUnderflow(_)
        | MaxSteps(_)
        | ZeroIntensity(_) => 3,
    }
}
