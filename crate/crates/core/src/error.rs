use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid degree sequence: {0}")]
    InvalidDegreeSequence(String),

    #[error("graph of {n} vertices would need about {bytes} bytes, above the limit of {limit}")]
    TooLarge { n: u64, bytes: u64, limit: u64 },

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: u64, n: u64 },

    #[error("red and blue sources coincide at vertex {0}")]
    CoincidentSources(u32),

    #[error("tie rule {0} needs a random source but none was supplied")]
    MissingRng(&'static str),

    #[error("branching process did not reach threshold {threshold} within {generations} generations")]
    Incomplete { threshold: f64, generations: usize },

    #[error("component of vertex {source_vertex} exhausted after {generations} generations")]
    ComponentExhausted { source_vertex: u32, generations: usize },

    #[error("enumeration of {0} tuples is too large")]
    EnumerationTooLarge(u128),

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
