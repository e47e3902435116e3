use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}; expected 2 or 3")]
    Dimension(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("postprocessing requires 3 | N, got N = {0}")]
    MacroDivisibility(usize),
    #[error("derivative order {0} exceeds the cubic shape space")]
    DerivativeOrder(usize),
    #[error("quadrature order {0} outside 1..=10")]
    QuadratureOrder(usize),
    #[error("nodal functional matrix is singular")]
    SingularBasis,
    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("missing value at vertex {0}")]
    MissingVertexValue(usize),
    #[error("field is not vertex-continuous: vertex {vertex} differs by {gap:.3e} between cells")]
    VertexMismatch { vertex: usize, gap: f64 },
    #[error("operand mismatch: {0}")]
    Operand(String),
    #[error("unknown manufactured solution '{0}' (expected u1, u2, u3 or u4)")]
    UnknownSolution(String),
    #[error("{0}")]
    InvalidStudy(String),
    #[error("reference table: {0}")]
    Reference(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
