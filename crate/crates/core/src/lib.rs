//! Community detection by edge-distance dynamics, with a sequential engine
//! and a partitioned map/reduce engine that computes the same updates.

pub mod dynamics;
pub mod engine;
pub mod error;
pub mod extract;
pub mod graph;
pub mod metrics;
pub mod partition;
pub mod window;

pub use dynamics::{run_sequential, CohesionParams, SimilarityForm};
pub use engine::{run_from, run_engine, EngineState, Mode, RunConfig, RunHooks, RunOutcome};
pub use error::{CheckpointError, ConfigError, ExtractError, GraphError, MetricsError, PipelineError};
pub use extract::{extract_communities, CommunityPartition};
pub use graph::{jaccard_init, load_edge_list, EdgeKey, Graph, StarGraph, VertexId};
pub use partition::{PartitionScheme, SubgraphKey};
pub use window::{SlidingWindow, WindowPolicy};
