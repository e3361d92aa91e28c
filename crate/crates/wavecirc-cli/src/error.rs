use std::fmt;

use wavecirc::analysis::AnalysisError;
use wavecirc::circuits::CircuitError;
use wavecirc::construction::ConstructionError;
use wavecirc::design::DesignError;
use wavecirc::gates::GateError;
use wavecirc::transform::TransformError;

/// Exit 1 for usage errors, exit 2 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical { code: &'static str, detail: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn numerical(code: &'static str, detail: impl fmt::Display) -> Self {
        CliError::Numerical {
            code,
            detail: detail.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical { .. } => 2,
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match &e {
            CircuitError::InvalidSpec(_) | CircuitError::WrongFamily { .. } => CliError::usage(e.to_string()),
            CircuitError::SizeMismatch { .. } => CliError::numerical("size_mismatch", e),
            CircuitError::Gate(GateError::DegenerateShear(_)) => CliError::numerical("degenerate_shear", e),
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match &e {
            ConstructionError::NotOrthogonal { .. } => CliError::numerical("not_orthogonal", e),
            ConstructionError::ResidualTooLarge { .. } => CliError::numerical("residual_too_large", e),
            ConstructionError::InvalidInput(_) => CliError::usage(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match &e {
            DesignError::InvalidArgument(_) => CliError::usage(e.to_string()),
            DesignError::Circuit(c) => c.clone().into(),
            _ => CliError::numerical(e.code(), e),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match &e {
            AnalysisError::InvalidArgument(_) => CliError::usage(e.to_string()),
            AnalysisError::LengthMismatch(..) => CliError::numerical("length_mismatch", e),
            AnalysisError::NonContractive { .. } => CliError::numerical("non_contractive", e),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        match &e {
            TransformError::SizeMismatch(_) => CliError::numerical("size_mismatch", e),
            TransformError::MissingBoundaryAngles { .. } => CliError::numerical("missing_boundary_angles", e),
            TransformError::SpecMismatch { .. } => CliError::numerical("spec_mismatch", e),
            TransformError::InvalidSpec(_) => CliError::usage(e.to_string()),
            TransformError::Circuit(c) => c.clone().into(),
        }
    }
}
