use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invalid rational `{0}`")]
    Rational(String),

    #[error("negative value {value} for agent `{agent}`")]
    NegativeValue { agent: String, value: String },

    #[error("item `{0}` is not relevant to any agent")]
    EmptyAgentList(String),

    #[error("valuation of agent `{agent}` is not monotone: V({smaller:?}) > V({larger:?})")]
    NonMonotone {
        agent: String,
        smaller: Vec<String>,
        larger: Vec<String>,
    },

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("declared relevance of agent `{agent}` is {declared:?} but the valuation implies {derived:?}")]
    RelevanceMismatch {
        agent: String,
        declared: Vec<String>,
        derived: Vec<String>,
    },

    #[error("invalid allocation: {0}")]
    Allocation(String),

    #[error("{what} exceeds the enumeration cap ({size} > {cap})")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("valuation profile is `{0}`, expected `identical`")]
    NotIdentical(String),

    #[error("agent lists are not laminar: items `{0}` and `{1}` overlap without nesting")]
    NotLaminar(String, String),

    #[error("instance is not decomposable: items `{0}` and `{1}` share more than one agent")]
    NotDecomposable(String, String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid planar instance: {0}")]
    Planar(String),

    #[error("invalid partition input: {0}")]
    Partition(String),

    #[error("invalid generator parameters: {0}")]
    Params(String),

    #[error("no EFX allocation exists for {0}")]
    NoEfx(String),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    /// A solver invariant failed. These are bugs, never input problems.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
