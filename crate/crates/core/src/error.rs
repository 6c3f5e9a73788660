use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A request whose size exceeds a configured or hard-coded limit.
    #[error("budget exceeded for {what}: requested {requested}, limit {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error(
        "closed form disagrees with brute force for k={k}, C={c} at {p}^{j}: closed {closed}, brute {brute}"
    )]
    CertificationFailed {
        k: u32,
        c: i64,
        p: u64,
        j: u32,
        closed: u128,
        brute: u128,
    },

    #[error("malformed KFSV data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn budget(
        what: &'static str,
        requested: impl Into<u128>,
        limit: impl Into<u128>,
    ) -> Self {
        Error::Budget {
            what,
            requested: requested.into(),
            limit: limit.into(),
        }
    }

    /// True for errors caused by resource limits rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::Overflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
