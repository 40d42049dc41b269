use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed scenario document: {0}")]
    Schema(String),

    #[error("scenario violates `{invariant}`: {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },

    #[error("companies {i} and {j} share a position")]
    DegeneratePair { i: usize, j: usize },

    #[error("cell of focal company {company} touches the evaluation window; add frozen boundary companies or enlarge the window")]
    WindowTooSmall { company: usize },

    #[error("boundary system is singular at beta = {beta} (smallest surviving threshold {threshold})")]
    SingularSystem { beta: f64, threshold: f64 },

    #[error("survivor elimination did not settle after {removals} removals")]
    NoStableSurvivorSet { removals: usize },

    #[error("company {company} lacks a surviving neighbour on both sides")]
    BoundaryCompany { company: usize },

    #[error("activation swaps exceeded the cap of {cap}")]
    NoValidScheme { cap: usize },

    #[error("grid fixed point did not converge in {iterations} iterations (last change {change:e})")]
    OracleNoConvergence { iterations: usize, change: f64 },

    #[error("unknown company id {0}")]
    UnknownCompany(usize),
}

impl Error {
    /// Stable name used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Schema(_) => "SchemaError",
            Error::Validation { .. } => "ValidationError",
            Error::DegeneratePair { .. } => "DegeneratePair",
            Error::WindowTooSmall { .. } => "WindowTooSmall",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::NoStableSurvivorSet { .. } => "NoStableSurvivorSet",
            Error::BoundaryCompany { .. } => "BoundaryCompany",
            Error::NoValidScheme { .. } => "NoValidScheme",
            Error::OracleNoConvergence { .. } => "OracleNoConvergence",
            Error::UnknownCompany(_) => "UnknownCompany",
        }
    }

    /// True for errors caused by the input document rather than a solve.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Validation { .. } | Error::UnknownCompany(_)
        )
    }
}
