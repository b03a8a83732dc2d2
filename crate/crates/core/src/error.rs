use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants fall into three families: malformed input (`Parse`, `Validation`,
/// shape problems), numerical failures (`DecompositionFailure`,
/// `IllConditionedKernel`, ...), and mathematical refusals, where the input is
/// well formed but a standing hypothesis (unimodularity, determinant class,
/// injectivity) does not hold. [`Error::is_refusal`] separates the last family.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("multiplication table violates the group laws: {0}")]
    NonAssociativeTable(String),
    #[error("isotypic decomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("operator does not commute with the algebra action (relative residual {residual:.3e})")]
    NotInCommutant { residual: f64 },
    #[error("modules live over different algebras")]
    AlgebraMismatch,
    #[error("operator is not self-adjoint for the given scalar product (relative residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },
    #[error("operator has negative spectrum (smallest eigenvalue {min_eigenvalue:.3e})")]
    NegativeSpectrum { min_eigenvalue: f64 },
    #[error("operator has a kernel: eigenvalue {eigenvalue:.3e} below threshold {threshold:.3e}")]
    KernelDetected { eigenvalue: f64, threshold: f64 },
    #[error("log-determinant integral diverges near zero: {0}")]
    DivergentIntegral(String),
    #[error("could not decide convergence of the log-determinant integral: {0}")]
    IndeterminateConvergence(String),
    #[error("path leaves the invertible group at t = {t:.6}")]
    PathLeavesGL { t: f64 },
    #[error("operator is not invertible (condition number {condition:.3e})")]
    NonInvertible { condition: f64 },
    #[error("scalar product is not admissible: {0}")]
    NotAdmissible(String),
    #[error("morphism is not an isomorphism: {0}")]
    NotIso(String),
    #[error("sequence is not exact: {0}")]
    NotExact(String),
    #[error("sequence is not D-exact: {0}")]
    NotDExact(String),
    #[error("degree {0} appears twice")]
    DuplicateDegree(i64),
    #[error("kernel dimension is ambiguous in degree {degree}: {detail}")]
    IllConditionedKernel { degree: usize, detail: String },
    #[error("complex is not of determinant class in degree {degree}: {detail}")]
    NotDeterminantClass { degree: usize, detail: String },
    #[error("operation not supported by this backend: {0}")]
    BackendUnsupported(String),
    #[error("boundary relations fail through the representation (residual {residual:.3e} in degree {degree})")]
    RelationViolation { degree: usize, residual: f64 },
    #[error("representation is not unimodular: generator {generator} has Det = {det:.12}")]
    NotUnimodular { generator: String, det: f64 },
    #[error("invalid subdivision data: {0}")]
    InvalidSubdivision(String),
    #[error("symbol is not Hermitian: {0}")]
    NotHermitianSymbol(String),
    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },
    #[error("validation error at {location}: {detail}")]
    Validation { location: String, detail: String },
}

impl Error {
    /// Stable variant name, used in machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NonAssociativeTable(_) => "NonAssociativeTable",
            Error::DecompositionFailure(_) => "DecompositionFailure",
            Error::NotInCommutant { .. } => "NotInCommutant",
            Error::AlgebraMismatch => "AlgebraMismatch",
            Error::NotSelfAdjoint { .. } => "NotSelfAdjoint",
            Error::NegativeSpectrum { .. } => "NegativeSpectrum",
            Error::KernelDetected { .. } => "KernelDetected",
            Error::DivergentIntegral(_) => "DivergentIntegral",
            Error::IndeterminateConvergence(_) => "IndeterminateConvergence",
            Error::PathLeavesGL { .. } => "PathLeavesGL",
            Error::NonInvertible { .. } => "NonInvertible",
            Error::NotAdmissible(_) => "NotAdmissible",
            Error::NotIso(_) => "NotIso",
            Error::NotExact(_) => "NotExact",
            Error::NotDExact(_) => "NotDExact",
            Error::DuplicateDegree(_) => "DuplicateDegree",
            Error::IllConditionedKernel { .. } => "IllConditionedKernel",
            Error::NotDeterminantClass { .. } => "NotDeterminantClass",
            Error::BackendUnsupported(_) => "BackendUnsupported",
            Error::RelationViolation { .. } => "RelationViolation",
            Error::NotUnimodular { .. } => "NotUnimodular",
            Error::InvalidSubdivision(_) => "InvalidSubdivision",
            Error::NotHermitianSymbol(_) => "NotHermitianSymbol",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
        }
    }

    /// True for refusals mandated by a failed mathematical hypothesis.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::NotUnimodular { .. }
                | Error::NotDeterminantClass { .. }
                | Error::DivergentIntegral(_)
                | Error::IndeterminateConvergence(_)
                | Error::KernelDetected { .. }
                | Error::NotDExact(_)
        )
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub fn validation(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation { location: location.into(), detail: detail.into() }
    }

    pub fn parse(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), detail: detail.into() }
    }
}
