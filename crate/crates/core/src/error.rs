use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// Total capacity cannot host the demand. Carries the missing seats.
    #[error(
        "feasible region is empty: demand {demand} exceeds capacity {capacity} (deficit {deficit})"
    )]
    Infeasible {
        demand: u64,
        capacity: u64,
        deficit: u64,
    },

    #[error("instance has {rooms} rooms, brute force is limited to {limit}")]
    SizeLimit { rooms: usize, limit: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// A generated child subproblem cannot meet its demand.
    #[error("split at vertex {vertex} is infeasible: {side} child needs {demand} seats but holds {capacity}")]
    SplitInfeasible {
        vertex: usize,
        side: &'static str,
        demand: u64,
        capacity: u64,
    },

    #[error("height {requested} out of range 0..={max}")]
    OutOfRange { requested: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vertex-level failure while solving a tree.
    #[error("vertex {vertex}: {source}")]
    AtVertex {
        vertex: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration keys: {}", .0.join(", "))]
    Config(Vec<String>),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the failure is a capacity shortfall somewhere.
    pub fn is_infeasibility(&self) -> bool {
        match self {
            Error::Infeasible { .. } | Error::SplitInfeasible { .. } => true,
            Error::AtVertex { source, .. } => source.is_infeasibility(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
