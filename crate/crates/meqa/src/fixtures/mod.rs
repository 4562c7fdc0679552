//! Self-contained offline fixture: a deterministic synthetic knowledge base
//! with six curated topics, a transport that serves it over the wiki wire
//! formats, a scripted model whose replies drive every pipeline stage, and
//! a setup pass that records caches, tapes, gold tables, and a benchmark so
//! later runs replay with no live services.

pub mod model;
pub mod setup;
pub mod transport;
pub mod world;

pub use model::ScriptedModel;
pub use setup::{
    ask_questions, setup, setup_with, FixtureLayout, SetupError, SetupReport, BENCH_COUNT,
    BENCH_SEED, TRAIN_FRACTION,
};
pub use transport::FixtureTransport;
pub use world::{
    member_id, member_label, omission_counts, topic_spec, topic_specs, FixtureWorld, TopicKey,
    TopicSpec,
};
