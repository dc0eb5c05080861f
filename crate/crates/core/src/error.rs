use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("{what} = {value} is outside 0..={max}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        max: u64,
    },

    #[error("length mismatch: {left} allocations vs {right} clients")]
    LengthMismatch { left: usize, right: usize },

    #[error("impossible request r = {request}: it has zero marginal probability")]
    ImpossibleRequest { request: u32 },

    #[error("infeasible allocation: {allocated} shares exceed supply {supply}")]
    Infeasible { allocated: u64, supply: u32 },

    #[error("oracle limit: {count} candidate allocations exceed the cap of {limit}")]
    OracleLimit { count: u128, limit: u128 },

    #[error("invalid parameter {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("stream horizon {horizon} exceeded")]
    HorizonExceeded { horizon: usize },

    #[error("contributor {contributor} has exhausted its bid budget")]
    BudgetExhausted { contributor: usize },

    #[error("inadmissible private auction config: {0}")]
    Inadmissible(String),

    #[error(
        "protocol error: client {client} requested {request} shares in round {round} (max {max})"
    )]
    Protocol {
        client: usize,
        round: usize,
        request: u32,
        max: u32,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}
