use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter t = {t} outside the open interval (0, 1)")]
    ParameterRange { t: f64 },

    #[error("degenerate circle at t = {t}: radius {radius}")]
    DegenerateCircle { t: f64, radius: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite function value at theta = {theta}")]
    Evaluation { theta: f64 },

    #[error("band limit exceeded: need index {needed}, band is {band}")]
    BandLimit { needed: usize, band: usize },

    #[error("cannot evaluate at the pole (z = center, pole order {order})")]
    PoleEvaluation { order: usize },

    #[error("all coefficients below the noise floor")]
    ZeroFunction,

    #[error("winding number indeterminate: sample near zero at theta = {theta}")]
    IndeterminateWinding { theta: f64 },

    #[error("extension test failed at t = {t}: defect {defect:e} exceeds tolerance")]
    Extendibility { t: f64, defect: f64 },

    #[error("point q = {q} lies within {distance} of the branch polyline")]
    Conditioning { q: num_complex::Complex64, distance: f64 },

    #[error("unreliable quadrature: excluded fraction {fraction} above limit")]
    UnreliableQuadrature { fraction: f64 },

    #[error("discriminant nearly vanishes at t = {t}, w = {w}")]
    NearDiscriminant { t: f64, w: num_complex::Complex64 },

    #[error("ill-conditioned design matrix (condition number {condition:e}); reduce the degree or spread the samples")]
    IllConditioned { condition: f64 },

    #[error("not enough samples: have {have}, need {need}")]
    TooFewSamples { have: usize, need: usize },

    #[error("decomposition is inconsistent: {0}")]
    Inconsistent(String),

    #[error("structural hypothesis violated: {0}")]
    Structural(String),

    #[error("unknown function id `{0}`")]
    UnknownFunction(String),
}
