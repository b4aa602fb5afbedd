use thiserror::Error;

/// Errors raised anywhere in the vortex laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("profile solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("value outside the admissible range: {0}")]
    Range(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("vortex {index} at ({x:.3}, {y:.3}) is too close to the lattice boundary")]
    Placement { index: usize, x: f64, y: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("lattice shapes do not match: {0}")]
    Shape(String),

    #[error("degree undefined: |psi| vanishes on the boundary loop (min {min_modulus:.3e})")]
    UndefinedDegree { min_modulus: f64 },

    #[error("degenerate plaquette at ({i}, {j}): |psi| below 1e-12 on all corners")]
    DegeneratePlaquette { i: usize, j: usize },

    #[error("numerical blow-up at step {step}")]
    BlowUp { step: usize },

    #[error("topology change: {0}")]
    TopologyChange(String),

    #[error("vortex separation {separation:.3} fell below 2")]
    SeparationViolation { separation: f64 },

    #[error("type-I regime (lambda = {lambda}) has no asymptotic interaction formula")]
    TypeIUnsupported { lambda: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("comparison failed: {0}")]
    Comparison(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
