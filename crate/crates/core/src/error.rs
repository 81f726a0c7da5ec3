use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("point ({x}, {y}) lies outside the domain bounding box")]
    OutsideDomain { x: f64, y: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("stencil for derivative ({dx}, {dy}) leaves the data at node {node}")]
    StencilOutOfRange { dx: u8, dy: u8, node: usize },

    #[error("strong convexity violated at node {node}: eigenvalue {eigenvalue:e}")]
    ConvexityViolation { node: usize, eigenvalue: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("assembled matrix is not positive definite (pivot {pivot:e} at unknown {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error(
        "iterative solver did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("deflection at the load point is {value:e}; grid too coarse to resolve the load")]
    NegativeLoadDeflection { value: f64 },

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("reconstruction: {0}")]
    Reconstruction(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
