use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("path-loss exponent must exceed 2 (got {0})")]
    PathLossExponent(f64),
    #[error("transmit power ({tx_dbm} dBm) must exceed the sense threshold ({threshold_dbm} dBm)")]
    DegenerateInhibition { tx_dbm: f64, threshold_dbm: f64 },
    #[error("path loss undefined for non-positive separation r = {0}")]
    PathLossSingularity(f64),
    #[error("occupied fraction {0} outside valid range {1}")]
    CoverageOutOfRange(f64, &'static str),
    #[error("pair-correlation march diverged at rho = {rho}: {reason}")]
    PcfDiverged { rho: f64, reason: String },
    #[error("curve fit did not converge after {iterations} iterations (best c1 = {c1}, c2 = {c2})")]
    FitDidNotConverge { iterations: usize, c1: f64, c2: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureDiverged(String),
    #[error("target coverage {target} unreachable: pattern jammed at {reached}")]
    CoverageUnreachable { target: f64, reached: f64 },
    #[error("Monte Carlo acceptance rate {0:.4} below 1%; reduce ap_density or raise replications")]
    AcceptanceTooLow(f64),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
