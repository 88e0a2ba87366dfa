use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unknown component id {0}")]
    UnknownComponent(usize),

    #[error("class {0} has no base faces")]
    EmptyBaseClass(usize),

    #[error("vertex {0} has no incident face")]
    IsolatedVertex(usize),

    #[error("thickness directions need hexahedral cells")]
    TetThickness,

    #[error("cell {0} is not reachable from any base face")]
    UnreachableCell(usize),

    #[error("degenerate rest cell {0}")]
    DegenerateCell(usize),

    #[error("lattice point outside control grid support: {0}")]
    OutsideSupport(String),

    #[error("empty point set: {0}")]
    EmptyPointSet(String),

    #[error("class count mismatch: {0} vs {1}")]
    ClassMismatch(usize, usize),

    #[error("all deformed edges collapsed")]
    CollapsedEdges,

    #[error("all attachment pairs are empty")]
    EmptyAttachment,

    #[error("empty voxel mask")]
    EmptyMask,

    #[error("connectivity mismatch: {0}")]
    ConnectivityMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("optimization diverged: {0}")]
    Diverged(String),

    #[error("degenerate element after optimization (min scaled Jacobian {0})")]
    DegenerateResult(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
