//! Streaming subgraph matching over temporal graphs.
//!
//! A temporal query graph pairs a small labeled multigraph with a strict
//! partial order on its edges. Against a sliding window over a timestamped
//! edge stream, the engine reports every order-respecting embedding the
//! moment it occurs and again the moment it expires. Candidate edges are
//! filtered through incrementally maintained max-min timestamps in both
//! orientations of a query DAG, and backtracking prunes parallel-edge
//! candidates using the temporal order.

pub mod dag;
pub mod engine;
pub mod filter;
pub mod fixtures;
pub mod gen;
pub mod graph;
pub mod io;
pub mod matcher;
pub mod oracle;
pub mod query;

pub use engine::{EngineOptions, MatchReport, StreamEngine, Summary};
pub use graph::{EdgeId, Timestamp, TemporalGraph, VertexId};
pub use matcher::{Embedding, MatchOptions, Polarity};
pub use query::{QueryEdgeId, QueryVertexId, TemporalQuery};
