use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // -- model validation --
    #[error("DimensionOrder: n_{level} = {upper} < n_{next} = {lower}", next = .level + 1)]
    DimensionOrder { level: usize, upper: usize, lower: usize },
    #[error("BoundaryDim: n_{level} = {dim}, expected 1")]
    BoundaryDim { level: usize, dim: usize },
    #[error("EnergyOrder: energies must be strictly decreasing (eps_{level} = {upper} <= eps_{next} = {lower})", next = .level + 1)]
    EnergyOrder { level: usize, upper: f64, lower: f64 },
    #[error("BohrCollision: omega_{first} = omega_{second} = {value}")]
    BohrCollision { first: usize, second: usize, value: f64 },
    #[error("RateSign: {0}")]
    RateSign(String),
    #[error("MissingField: {0}")]
    MissingField(String),

    #[error("IndexOutOfRange: {0}")]
    IndexOutOfRange(String),
    #[error("ShapeMismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    // -- numerics --
    #[error("NotHermitian: asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("Overflow: {0}")]
    Overflow(String),
    #[error("AmbientMismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("NotAState: {0}")]
    NotAState(String),

    // -- structure --
    #[error("ClosedFormMismatch: {what} (residual {residual:.3e})")]
    ClosedFormMismatch { what: String, residual: f64 },
    #[error("SupportViolation: leakage {0:.3e} outside the admissible subspace")]
    SupportViolation(f64),
    #[error("ZeroVector")]
    ZeroVector,
    #[error("NotInvariant: generator residual {0:.3e}")]
    NotInvariant(f64),
    #[error("TransportDefect: transported state is not invariant (residual {0:.3e})")]
    TransportDefect(f64),
    #[error("ReconstructionFailure: residual {0:.3e}")]
    ReconstructionFailure(f64),
    #[error("ProjectorFailure: {0}")]
    ProjectorFailure(String),
    #[error("DHViolated: dims {0:?} do not satisfy n_2 = ... = n_N")]
    DHViolated(Vec<usize>),
    #[error("NotInSubalgebra: leakage {0:.3e} outside U_Z")]
    NotInSubalgebra(f64),
    #[error("NormViolation: |u|^2 = {got}, expected {expected}")]
    NormViolation { got: f64, expected: f64 },
    #[error("ModelShape: {0}")]
    ModelShape(String),

    // -- io --
    #[error("Io: {0}")]
    Io(String),
    #[error("Format: {0}")]
    Format(String),
}

impl Error {
    /// Short variant name, used by the CLI when printing failure classes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionOrder { .. } => "DimensionOrder",
            Error::BoundaryDim { .. } => "BoundaryDim",
            Error::EnergyOrder { .. } => "EnergyOrder",
            Error::BohrCollision { .. } => "BohrCollision",
            Error::RateSign(_) => "RateSign",
            Error::MissingField(_) => "MissingField",
            Error::IndexOutOfRange(_) => "IndexOutOfRange",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NotHermitian(_) => "NotHermitian",
            Error::NoConvergence(_) => "NoConvergence",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Overflow(_) => "Overflow",
            Error::AmbientMismatch(..) => "AmbientMismatch",
            Error::NotAState(_) => "NotAState",
            Error::ClosedFormMismatch { .. } => "ClosedFormMismatch",
            Error::SupportViolation(_) => "SupportViolation",
            Error::ZeroVector => "ZeroVector",
            Error::NotInvariant(_) => "NotInvariant",
            Error::TransportDefect(_) => "TransportDefect",
            Error::ReconstructionFailure(_) => "ReconstructionFailure",
            Error::ProjectorFailure(_) => "ProjectorFailure",
            Error::DHViolated(_) => "DHViolated",
            Error::NotInSubalgebra(_) => "NotInSubalgebra",
            Error::NormViolation { .. } => "NormViolation",
            Error::ModelShape(_) => "ModelShape",
            Error::Io(_) => "Io",
            Error::Format(_) => "Format",
        }
    }

    /// True for the errors raised by model validation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionOrder { .. }
                | Error::BoundaryDim { .. }
                | Error::EnergyOrder { .. }
                | Error::BohrCollision { .. }
                | Error::RateSign(_)
                | Error::MissingField(_)
                | Error::ModelShape(_)
        )
    }
}
