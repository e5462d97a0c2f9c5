use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no roll wave exists for F = {froude}: {reason}")]
    NoRollWave { froude: f64, reason: String },
    #[error("Lopatinsky determinant {det:e} is degenerate")]
    LopatinskyDegenerate { det: f64 },
    #[error("structural assumption violated: {0}")]
    StructuralAssumption(String),
    #[error("no damping weights: stability index {index} is not below 1")]
    NoDampingWeights { index: f64 },
    #[error("strict hyperbolicity fails: |alpha2 - alpha1| = {gap:e}")]
    Hyperbolicity { gap: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("regularity k = {k} is not above the threshold {threshold}")]
    RegularityThreshold { k: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
