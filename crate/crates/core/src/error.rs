use thiserror::Error;

/// Errors raised by the solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed instance, strategy or program data.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An operation was called outside its domain (e.g. a disjoint-set
    /// solver on overlapping monitoring sets).
    #[error("precondition violated: {0}")]
    Contract(String),

    /// A search or enumeration hit its configured limit.
    #[error("{what} exceeded its limit ({limit}); best bound {bound:?}, incumbent {incumbent:?}")]
    Resource {
        what: String,
        limit: usize,
        bound: Option<f64>,
        incumbent: Option<f64>,
    },

    /// A linear program that had to be solved to optimality was not.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Column generation proposed a column it already holds while still
    /// reporting a negative reduced cost.
    #[error(
        "column generation stalled at iteration {iteration}: column {column:?} re-entered \
         with reduced cost {reduced_cost:e} (dual pi {pi:e})"
    )]
    NumericalStall {
        iteration: usize,
        reduced_cost: f64,
        column: Vec<usize>,
        pi: f64,
        rho: Vec<f64>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
