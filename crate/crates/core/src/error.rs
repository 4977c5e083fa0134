use thiserror::Error;

/// Unified error type for geometry, evaluation, training, and I/O failures.
///
/// Numerical code in this crate never returns silent NaN: domain violations
/// and degenerate inputs surface as explicit variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({xi1}, {xi2}) lies outside the reference domain")]
    DomainViolation { xi1: f64, xi2: f64 },

    #[error("degenerate tangent basis at ({xi1}, {xi2}): |a1 x a2| = {norm:e}")]
    DegenerateBasis { xi1: f64, xi2: f64, norm: f64 },

    #[error("non-finite value in {context} at point index {index}")]
    NonFinite { context: String, index: usize },

    #[error("jet evaluation produced a non-finite output at ({xi1}, {xi2})")]
    JetNonFinite { xi1: f64, xi2: f64 },

    #[error("parameter vector length {got} does not match expected {expected}")]
    ParamLength { got: usize, expected: usize },

    #[error("training diverged at epoch {epoch}: loss {loss:e} exceeds 1e3 x initial {initial:e}")]
    Diverged { epoch: usize, loss: f64, initial: f64 },

    #[error("volume target {v0} is infeasible: attainable range is [{lo}, {hi}]")]
    InfeasibleVolume { v0: f64, lo: f64, hi: f64 },

    #[error("reference field {field} has zero norm; relative error is undefined")]
    ZeroNormReference { field: usize },

    #[error("field file schema mismatch: {detail}")]
    SchemaMismatch { detail: String },

    #[error("unsupported configuration: {detail}")]
    Unsupported { detail: String },

    #[error("config error for key `{key}`: {detail}")]
    Config { key: String, detail: String },

    #[error("boundary sampling requested on a domain without that edge: {detail}")]
    BadBoundary { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Msg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
