//! Error type shared by the core library.

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("position lies outside the closed domain")]
    OutsideDomain,
    #[error("zero velocity has no boundary foot")]
    ZeroVelocity,
    #[error("grazing boundary direction")]
    Grazing,
    #[error("coincident boundary points")]
    SingularPair,
    #[error("parameter out of range: {what}")]
    Parameter { what: &'static str },
    #[error("weighted input required for λ = 0")]
    WeightRequired,
    #[error("grid mismatch: {what}")]
    GridMismatch { what: &'static str },
    #[error("matrix is singular")]
    Singular,
    #[error("iteration did not converge: {what}")]
    NoConvergence { what: &'static str },
    #[error("spectral gap too small (second modulus {second})")]
    GapTooSmall { second: f64 },
    #[error("zero-mean data required at η = 0 (mass {mass})")]
    ZeroMeanRequired { mass: f64 },
    #[error("insufficient signal: {what}")]
    InsufficientSignal { what: &'static str },
    #[error("frequency window too small, try η_max ≥ {suggested}")]
    EtaMaxTooSmall { suggested: f64 },
    #[error("unsupported: {what}")]
    Unsupported { what: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
