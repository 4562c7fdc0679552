//! One-shot fixture builder. Runs the whole pipeline against the synthetic
//! world once, recording every network response into the cache and every
//! model reply onto the tape, and writes the durable artifacts (topic
//! configs, gold tables, per-topic graphs, benchmark file) next to them.
//! After a setup pass the same root replays offline, byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::bench::{
    build_gold_table, default_templates, generate_bench, topic_slug, write_bench_file,
    write_templates, write_topics, BenchError, TopicWorld,
};
use crate::graph::{save_graph, GraphError, MultiEntityQuestion};
use crate::llm::{record_session, LlmError, LlmGateway, ModelConfig};
use crate::netcache::{CachedTransport, NetCache};
use crate::pipeline::{run_question, PipelineError};
use crate::retrieval::WikiClient;
use crate::table::{SynonymDict, TableError};
use crate::transport::TransportError;

use super::model::ScriptedModel;
use super::transport::FixtureTransport;
use super::world::{omission_counts, topic_spec, FixtureWorld, TopicKey};

/// Benchmark size a full setup run generates.
pub const BENCH_COUNT: usize = 480;
/// Seed for benchmark generation.
pub const BENCH_SEED: u64 = 17;
/// Train share of generated items: the published 3406-train / 1374-test
/// split expressed as a fraction so it scales to any count.
pub const TRAIN_FRACTION: f64 = 3406.0 / 4780.0;

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("fixture io: {0}")]
    Io(String),
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error("model: {0}")]
    Llm(#[from] LlmError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("bench: {0}")]
    Bench(#[from] BenchError),
    #[error("table: {0}")]
    Table(#[from] TableError),
    #[error("pipeline: {0}")]
    Pipeline(#[from] PipelineError),
}

/// Where each artifact lives under a fixture root.
#[derive(Debug, Clone)]
pub struct FixtureLayout {
    root: PathBuf,
}

impl FixtureLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.root.join("cache")
    }

    pub fn tape_path(&self) -> PathBuf {
        self.root.join("tape.jsonl")
    }

    pub fn topics_path(&self) -> PathBuf {
        self.root.join("topics.jsonl")
    }

    pub fn templates_path(&self) -> PathBuf {
        self.root.join("templates.jsonl")
    }

    pub fn bench_path(&self) -> PathBuf {
        self.root.join("bench.jsonl")
    }

    /// Full knowledge-graph snapshot, for inspection and debugging.
    pub fn graph_path(&self) -> PathBuf {
        self.root.join("graph.jsonl")
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.root.join("tables")
    }

    /// Gold table CSV for a topic, named by [`topic_slug`]; its schema
    /// sidecar sits next to it as `.json`.
    pub fn table_path(&self, topic: &str) -> PathBuf {
        self.tables_dir().join(format!("{}.csv", topic_slug(topic)))
    }

    pub fn graphs_dir(&self) -> PathBuf {
        self.root.join("graphs")
    }

    /// Per-topic graph holding only the topic's relational edges, the shape
    /// gold answers for relationship questions are computed against.
    pub fn topic_graph_path(&self, topic: &str) -> PathBuf {
        self.graphs_dir().join(format!("{}.jsonl", topic_slug(topic)))
    }
}

/// What one setup run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetupReport {
    pub topics: usize,
    pub entities: usize,
    pub bench_items: usize,
    pub tape_entries: usize,
    pub cache_entries: u64,
    pub omitted_cells: usize,
    pub total_cells: usize,
}

/// Demonstration questions warmed by setup, one per published topic, so the
/// ask command can replay them offline end to end.
pub fn ask_questions() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "Presidents of the United States",
            "Which president has the highest term lengths?",
        ),
        (
            "Chemical elements",
            "Which chemical element has the lowest boiling point?",
        ),
        (
            "Summer Olympic Games",
            "How many Summer Olympics editions have a records broken of 0?",
        ),
    ]
}

/// Full fixture set: all six topics, the stock benchmark size.
pub fn setup(root: &Path, workers: usize) -> Result<SetupReport, SetupError> {
    setup_with(root, &TopicKey::ALL, BENCH_COUNT, workers)
}

/// Builds the fixture set for a topic subset. Rerunning over the same root
/// is cheap and changes nothing: cache and tape absorb every repeat.
pub fn setup_with(
    root: &Path,
    keys: &[TopicKey],
    bench_count: usize,
    workers: usize,
) -> Result<SetupReport, SetupError> {
    let layout = FixtureLayout::new(root);
    for dir in [layout.tables_dir(), layout.graphs_dir()] {
        fs::create_dir_all(&dir)
            .map_err(|e| SetupError::Io(format!("create {}: {e}", dir.display())))?;
    }

    let world = Arc::new(FixtureWorld::build());
    let cache = Arc::new(NetCache::open(&layout.cache_dir())?);
    let transport =
        CachedTransport::new(cache.clone(), Box::new(FixtureTransport::new(world.clone())));
    let client = WikiClient::new(Box::new(transport));
    let record = Arc::new(record_session(
        layout.tape_path(),
        Box::new(ScriptedModel::new(world.clone())),
    )?);
    let gateway = LlmGateway::new(Box::new(record.clone()), ModelConfig::default());

    let all_configs = world.topic_configs();
    let mut configs = Vec::with_capacity(keys.len());
    for key in keys {
        let spec = topic_spec(*key);
        let cfg = all_configs
            .iter()
            .find(|c| c.name == spec.name)
            .expect("every topic has a config")
            .clone();
        configs.push(cfg);
    }
    write_topics(&layout.topics_path(), &configs)?;
    let templates = default_templates();
    write_templates(&layout.templates_path(), &templates)?;
    save_graph(world.graph(), &layout.graph_path())?;

    let mut worlds = Vec::with_capacity(keys.len());
    let mut entities = 0;
    for (key, cfg) in keys.iter().zip(&configs) {
        let table = build_gold_table(&client, &gateway, cfg, workers)?;
        entities += table.rows.len();
        table.write_files(&layout.table_path(&cfg.name))?;
        let graph = world.relational_graph(*key);
        save_graph(&graph, &layout.topic_graph_path(&cfg.name))?;
        worlds.push(TopicWorld { config: cfg.clone(), table, graph });
    }

    let items =
        generate_bench(&worlds, &templates, bench_count, BENCH_SEED, TRAIN_FRACTION, Some(&gateway))?;
    write_bench_file(&layout.bench_path(), &items)?;

    // Warm pass: every benchmark item plus the published ask questions go
    // through the full pipeline once, so offline runs never miss.
    let dict = SynonymDict::default_dict();
    for item in &items {
        run_question(
            &client,
            &gateway,
            MultiEntityQuestion::with_topic(&item.question, &item.topic),
            workers,
            dict,
        )?;
    }
    for (topic, question) in ask_questions() {
        if configs.iter().any(|c| c.name == topic) {
            run_question(
                &client,
                &gateway,
                MultiEntityQuestion::with_topic(question, topic),
                workers,
                dict,
            )?;
        }
    }

    let tape_entries = record.finish()?;
    let stats = cache.stats()?;
    let (omitted_cells, total_cells) = omission_counts();
    Ok(SetupReport {
        topics: configs.len(),
        entities,
        bench_items: items.len(),
        tape_entries,
        cache_entries: stats.entries,
        omitted_cells,
        total_cells,
    })
}
