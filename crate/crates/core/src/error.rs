//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A nodewise regression produced a residual scale too small to invert.
    #[error("degenerate column {column}: tau^2 = {tau_sq:.3e} below 1e-12")]
    DegenerateColumn { column: usize, tau_sq: f64 },

    /// A per-node stage failed; carries the offending node id.
    #[error("node {node_id}: {source}")]
    Node {
        node_id: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn at_node(self, node_id: u64) -> Self {
        Error::Node {
            node_id,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
