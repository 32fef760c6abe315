use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list contains no edges")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("partition count must be at least 3, got {0}")]
    TooFewPartitions(u32),
    #[error("lambda must lie in [0, 1], got {0}")]
    Lambda(f64),
    #[error("tau must lie in [0, 1], got {0}")]
    Tau(f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
}

/// Failures inside the map-shuffle-reduce pipeline.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reduce failed for key {key}: {message}")]
    Reduce { key: String, message: String },
    #[error("subgraph {key}: star of vertex {vertex} was not routed here")]
    MissingStar { key: String, vertex: u32 },
    #[error("edge ({u},{v}) received interaction partials but no distance record")]
    MissingDistance { u: u32, v: u32 },
    #[error("edge ({u},{v}) has {count} distance records")]
    DuplicateDistance { u: u32, v: u32, count: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("edge ({u},{v}) has not converged (d = {distance})")]
    NotConverged { u: u32, v: u32, distance: f64 },
    #[error("expected {expected} distances, got {got}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("partitions cover different vertex counts ({0} vs {1})")]
    Mismatch(usize, usize),
    #[error("partitions are empty")]
    Empty,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("unsupported checkpoint header {0:?}")]
    Header(String),
    #[error("checkpoint line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("checkpoint does not match the graph: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
