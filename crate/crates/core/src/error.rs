use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    /// Evaluation point is within the exclusion radius of a lattice singularity.
    #[error("point ({x}, {y}) lies within {dist:e} of a lattice singularity")]
    Singularity { x: f64, y: f64, dist: f64 },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// The hole p + eps * closure(I[phi]) is not contained in the open cell.
    #[error("hole p + eps*I[phi] is not contained in the cell Q (eps = {eps})")]
    Containment { eps: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("assembled system is nearly singular (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("linear solve residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    /// Evaluation point too close to a boundary curve for the trapezoid rule.
    #[error("point ({x}, {y}) is {dist:e} from the boundary, guard distance is {guard:e}")]
    NearBoundary { x: f64, y: f64, dist: f64, guard: f64 },

    #[error("point ({x}, {y}) is not in the evaluation domain: {reason}")]
    OutsideDomain { x: f64, y: f64, reason: String },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    /// Failure of one member of an eps-family.
    #[error("at eps = {eps}: {source}")]
    AtEps { eps: f64, source: Box<Error> },
}

impl Error {
    /// Errors caused by numerics (conditioning, containment) rather than bad input.
    pub fn is_numerical(&self) -> bool {
        if let Error::AtEps { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::Containment { .. }
                | Error::IllConditioned { .. }
                | Error::Residual { .. }
                | Error::Numerical(_)
                | Error::Singularity { .. }
                | Error::NearBoundary { .. }
        )
    }
}
