use thiserror::Error;

pub type Result<T, E = AlfError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlfError {
    #[error("invalid graph size: {0}")]
    InvalidSize(usize),
    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid node index {0}")]
    InvalidIndex(usize),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid response function: {0}")]
    InvalidResponse(String),
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("perturbation violates the required symmetry: {0}")]
    SymmetryViolation(String),
    #[error("unsupported symmetry: {0}")]
    UnsupportedSymmetry(String),
    #[error("x = {x} is not a singular consensus point (f'(x) = {slope})")]
    NotSingular { x: f64, slope: f64 },
    #[error("continuation failed: {0}")]
    ContinuationFailed(String),
    #[error("group enumeration exceeded the cap of {0} elements")]
    GroupCapExceeded(usize),
    #[error("integration stalled: step size underflow at t = {t_last}")]
    IntegrationStalled { t_last: f64 },
    #[error("integration diverged at t = {t}: |x| exceeded {bound}")]
    Divergence { t: f64, bound: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("perturbation is not critical at the singular point: {0}")]
    NonCritical(String),
}

impl AlfError {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            AlfError::InvalidSize(_) => "invalid_size",
            AlfError::InvalidEdge(..) => "invalid_edge",
            AlfError::DimensionMismatch { .. } => "dimension_mismatch",
            AlfError::InvalidIndex(_) => "invalid_index",
            AlfError::InvalidPermutation(_) => "invalid_permutation",
            AlfError::InvalidResponse(_) => "invalid_response",
            AlfError::UnsupportedStructure(_) => "unsupported_structure",
            AlfError::SymmetryViolation(_) => "symmetry_violation",
            AlfError::UnsupportedSymmetry(_) => "unsupported_symmetry",
            AlfError::NotSingular { .. } => "not_singular",
            AlfError::ContinuationFailed(_) => "continuation_failed",
            AlfError::GroupCapExceeded(_) => "group_cap_exceeded",
            AlfError::IntegrationStalled { .. } => "integration_stalled",
            AlfError::Divergence { .. } => "divergence",
            AlfError::Config(_) => "config",
            AlfError::NonCritical(_) => "non_critical",
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            AlfError::Divergence { .. } | AlfError::IntegrationStalled { .. } => 3,
            AlfError::UnsupportedStructure(_)
            | AlfError::SymmetryViolation(_)
            | AlfError::UnsupportedSymmetry(_) => 4,
            AlfError::NonCritical(_) => 5,
            _ => 2,
        }
    }
}
