use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two values live on different spaces where the same space was required.
    #[error("space mismatch in {op}: expected {expected}, got {found}")]
    SpaceMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    /// A state or channel row does not sum to 1 within tolerance.
    #[error("{what} is not normalized (sum = {sum})")]
    NotNormalized { what: String, sum: f64 },

    /// A probability or predicate entry outside its legal range.
    #[error("value {value} out of range in {context}")]
    OutOfRange { context: String, value: f64 },

    /// A variable needs at least two labels.
    #[error("variable {name} has fewer than two labels")]
    TooFewLabels { name: String },

    /// Duplicate variable name within one space or network.
    #[error("duplicate name: {name}")]
    DuplicateName { name: String },

    /// Reference to a variable or node that does not exist.
    #[error("unknown name: {name}")]
    UnknownName { name: String },

    /// The permutation passed to a wire-shuffling operation is not a bijection.
    #[error("invalid permutation")]
    InvalidPermutation,

    /// Conditioning on a predicate with zero validity (no evidence provenance
    /// attached at this level; see [`Error::InconsistentEvidence`]).
    #[error("zero validity: state is incompatible with predicate")]
    ZeroValidity,

    /// Evidence assigns probability zero to everything the state allows.
    #[error("inconsistent evidence on {}", .nodes.join(", "))]
    InconsistentEvidence { nodes: Vec<String> },

    /// BIF syntax or structural error.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// BIF feature outside the supported discrete subset.
    #[error("unsupported feature at line {line}: {feature}")]
    Unsupported { line: usize, feature: String },

    /// The node graph contains a directed cycle.
    #[error("cycle detected through node {node}")]
    Cycle { node: String },

    /// A chain was asked to process an order that is not topological, or a
    /// node is missing from a chain it should appear in.
    #[error("graph error: {0}")]
    Graph(String),

    /// The brute-force joint would exceed the configured entry cap.
    #[error("joint of {required} entries exceeds cap of {cap}")]
    SizeCap { required: usize, cap: usize },

    /// Malformed query (bad predicate length, empty evidence vector, ...).
    #[error("invalid query: {0}")]
    Query(String),
}
