use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment undefined: {0}")]
    MomentUndefined(String),

    #[error("unsupported model variant: {0}")]
    UnsupportedVariant(String),

    #[error("series did not converge after {terms} terms (last term {last_term:e})")]
    NonConvergence { terms: usize, last_term: f64 },

    #[error("partial-fraction coefficients ill-conditioned (max |coefficient| = {max_coefficient:e})")]
    IllConditioned { max_coefficient: f64 },

    #[error("divergent integrand: {0}")]
    DivergentIntegrand(String),

    #[error("simulated sequence hit the cap of {cap} events before reaching t = {horizon}")]
    HorizonNotReached { horizon: f64, cap: usize },

    #[error("n = {n} exceeds the partition cap n_max = {n_max}")]
    PartitionCap { n: usize, n_max: usize },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("invalid data: {0}")]
    Data(String),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
