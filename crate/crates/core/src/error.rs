use crate::linmap::MapRole;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: self-loop {node}-{node} rejected")]
    SelfLoopLine { line: usize, node: u64 },

    #[error("node {0} has a self-loop")]
    SelfLoop(usize),

    #[error("node {0} is isolated (zero degree)")]
    IsolatedNode(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected a {expected:?} map, got {found:?}")]
    RoleMismatch { expected: MapRole, found: MapRole },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("graph has {n} nodes, above the dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
