use std::io;

/// Errors produced anywhere in the lab.
///
/// Variants are grouped by how the command-line front end reports them:
/// configuration and parse problems, numerical failures, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point ({x}, {y}) is outside the model disk for kappa = {kappa}")]
    Domain { x: f64, y: f64, kappa: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("finite-difference step {step:e} underflows at coordinate {at}")]
    StepUnderflow { step: f64, at: f64 },

    #[error("ellipticity lost: certificate {certificate:e} at node {node}")]
    EllipticityLost { certificate: f64, node: usize },

    #[error("non-graphical data at node {node}: nu = {nu}")]
    NonGraphical { node: usize, nu: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("sparse factorization failed: {0}")]
    LinearSolve(String),

    #[error("no {direction} barrier certified after {doublings} doublings (max violation {max_violation:e})")]
    BarrierSearch {
        direction: &'static str,
        doublings: usize,
        max_violation: f64,
    },

    #[error("continuation stalled at t = {t}: step bisection exhausted")]
    ContinuationExhausted { t: f64 },

    #[error("radial first integral has no graph solution at rho = {rho} (|u'/W| = {ratio})")]
    NoGraphSolution { rho: f64, ratio: f64 },

    #[error("the sister correspondence needs H0 = 1/2, got {0}")]
    SisterNeedsHalf(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(io::Error::other(err))
        } else {
            Error::Parse(err.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
