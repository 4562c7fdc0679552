//! Multi-entity question answering over a wiki-style knowledge graph.
//!
//! The pipeline retrieves an entity set with SPARQL, builds a property
//! table for it from page introductions, then answers the question either
//! by executing SQL against the table or by selecting a statistical method
//! over its columns. Every network call and model call is cacheable, so a
//! run can be recorded once and replayed deterministically.

pub mod bench;
pub mod fixtures;
pub mod graph;
pub mod llm;
pub mod netcache;
pub mod pipeline;
pub mod pool;
pub mod retrieval;
pub mod sparql;
pub mod sql;
pub mod stats;
pub mod table;
pub mod testkit;
pub mod transport;
