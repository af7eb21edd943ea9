use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "magnetic field too weak: the strong-field condition beta >= 2*c*m_bar/e = {threshold} fails for beta = {beta}"
    )]
    WeakField { beta: f64, threshold: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no finite confinement radius: e*c0*E0/m = {0} must be below 1/2")]
    Unconfinable(f64),

    #[error("bisection did not converge after {iterations} iterations (residual {residual:e})")]
    Bisection { iterations: usize, residual: f64 },

    #[error("Picard iteration did not converge in {iterations} iterations (last difference {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("integration failed at step {step}: non-finite state")]
    Integration { step: usize },

    #[error("no charge-positivity witness: {0}")]
    NoWitness(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
