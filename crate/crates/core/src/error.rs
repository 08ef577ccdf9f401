use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid connections: {0}")]
    InvalidConnections(String),
    #[error("invalid site set: {0}")]
    InvalidSiteSet(String),
    #[error("every site is frozen; the restriction has no dynamics")]
    AllFrozen,
    #[error("exhaustive enumeration over {sites} sites exceeds the budget of {max} sites")]
    BudgetExceeded { sites: usize, max: usize },
    #[error("simulation budget too small: {0}")]
    SimulationBudget(String),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("insufficient samples for pair ({receiver}, {sender}): {found} < {required}")]
    InsufficientSamples {
        receiver: usize,
        sender: usize,
        found: usize,
        required: usize,
    },
    #[error("empty observation window")]
    EmptyWindow,
    #[error("frequencies missing for site {0}")]
    MissingRate(usize),
}
