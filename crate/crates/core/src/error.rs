use alloc::string::String;
use core::fmt;

/// Contract violations raised by the algorithms in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Co-occurrence counts that cannot come from a real corpus.
    InvalidCounts { n_x: u64, n_y: u64, n_xy: u64, total: u64 },
    UnknownNode(String),
    /// A partition that does not cover the graph's nodes exactly once.
    InvalidPartition(&'static str),
    InvalidParameter { name: &'static str, reason: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidCounts { n_x, n_y, n_xy, total } => write!(
                f,
                "invalid co-occurrence counts n_x={n_x} n_y={n_y} n_xy={n_xy} N={total}"
            ),
            Error::UnknownNode(token) => write!(f, "node {token:?} is not in the graph"),
            Error::InvalidPartition(why) => write!(f, "invalid partition: {why}"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
